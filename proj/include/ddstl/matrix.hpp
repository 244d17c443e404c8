#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

// Dense row-major matrices and the factorization-based queries (numerical
// rank, least squares) the rest of the library is built on. Everything here
// is value-semantic and immutable-friendly; operations are pure functions.

namespace ddstl::num {

using Vec = std::vector<double>;

inline constexpr double kDefaultRankTol = 1e-9;

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols);  // zero-filled
    Matrix(std::size_t rows, std::size_t cols, Vec entries);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return rows_ == 0 || cols_ == 0; }

    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * cols_, cols_};
    }
    const Vec& entries() const { return data_; }

private:
    std::size_t rows_ = 0, cols_ = 0;
    Vec data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Vec matvec(const Matrix& a, const Vec& x);
Matrix transpose(const Matrix& a);

// Stack b below a (column counts must agree).
Matrix vstack(const Matrix& a, const Matrix& b);

// Numerical rank: column-pivoted Householder QR, counting diagonal entries
// of R above tol * |R(0,0)|. Empty matrices have rank 0.
std::size_t rank(const Matrix& m, double tol = kDefaultRankTol);

struct LeastSquares {
    Vec x;            // minimizer of ||a x - b||_2 (basic solution)
    double residual;  // ||a x - b||_2, recomputed from the inputs
    bool within_tol;  // residual <= tol * (1 + ||b||_2)
};

// Solve min ||a x - b||_2 via column-pivoted QR. Rank-deficient and wide
// systems yield a basic solution (zeros in the non-pivot coordinates).
// rank_tol controls the pivot truncation threshold; near-machine values keep
// every numerically nonzero direction.
LeastSquares solve_least_squares(const Matrix& a, const Vec& b, double tol = 1e-8,
                                 double rank_tol = kDefaultRankTol);

double dot(const Vec& a, const Vec& b);
double norm2(const Vec& v);

// Throws std::invalid_argument if any entry is NaN/Inf; `what` names the data.
void require_finite(std::span<const double> entries, const std::string& what);

}  // namespace ddstl::num
