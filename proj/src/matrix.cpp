#include "ddstl/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ddstl::num {

namespace {

std::string shape(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

void require_finite(std::span<const double> entries, const std::string& what) {
    for (double v : entries) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument(what + " contains a non-finite entry");
        }
    }
}

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, Vec entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows_ * cols_) {
        throw std::invalid_argument("matrix entry count " + std::to_string(data_.size()) +
                                    " does not match shape " + shape(*this));
    }
    require_finite(data_, "matrix");
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) {
            throw std::invalid_argument("ragged initializer for matrix rows");
        }
        data_.insert(data_.end(), r.begin(), r.end());
    }
    require_finite(data_, "matrix");
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw std::invalid_argument("matmul shape mismatch: " + shape(a) + " * " + shape(b));
    }
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) {
                c(i, j) += aik * b(k, j);
            }
        }
    }
    return c;
}

Matrix operator*(const Matrix& a, const Matrix& b) { return matmul(a, b); }

Matrix operator+(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw std::invalid_argument("matrix add shape mismatch: " + shape(a) + " + " + shape(b));
    }
    Matrix c = a;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) += b(i, j);
    return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw std::invalid_argument("matrix sub shape mismatch: " + shape(a) + " - " + shape(b));
    }
    Matrix c = a;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) -= b(i, j);
    return c;
}

Vec matvec(const Matrix& a, const Vec& x) {
    if (a.cols() != x.size()) {
        throw std::invalid_argument("matvec shape mismatch: " + shape(a) + " * vector of length " +
                                    std::to_string(x.size()));
    }
    Vec y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        auto r = a.row(i);
        for (std::size_t j = 0; j < a.cols(); ++j) s += r[j] * x[j];
        y[i] = s;
    }
    return y;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

Matrix vstack(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw std::invalid_argument("vstack column mismatch: " + shape(a) + " over " + shape(b));
    }
    Matrix c(a.rows() + b.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) c(i, j) = a(i, j);
    for (std::size_t i = 0; i < b.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) c(a.rows() + i, j) = b(i, j);
    return c;
}

double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("dot length mismatch: " + std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const Vec& v) { return std::sqrt(dot(v, v)); }

namespace {

// Column-pivoted Householder QR (Businger-Golub). Reflectors are stored below
// the diagonal with the leading component kept in v0; column norms are
// recomputed each step, which is fine at the matrix sizes this library sees.
struct ColPivQr {
    Matrix r;                      // upper triangle: R; below diagonal: reflector tails
    std::vector<double> v0;        // leading reflector components
    std::vector<double> vtv;       // squared reflector norms
    std::vector<std::size_t> perm; // column permutation: factored col k is input col perm[k]
    std::size_t steps = 0;         // number of Householder steps performed

    explicit ColPivQr(const Matrix& a) : r(a) {
        const std::size_t m = a.rows(), n = a.cols();
        const std::size_t kmax = std::min(m, n);
        v0.assign(kmax, 0.0);
        vtv.assign(kmax, 0.0);
        perm.resize(n);
        for (std::size_t j = 0; j < n; ++j) perm[j] = j;

        for (std::size_t k = 0; k < kmax; ++k) {
            // Pivot: bring the remaining column with the largest norm to position k.
            std::size_t best = k;
            double best_norm = -1.0;
            for (std::size_t j = k; j < n; ++j) {
                double s = 0.0;
                for (std::size_t i = k; i < m; ++i) s += r(i, j) * r(i, j);
                if (s > best_norm) {
                    best_norm = s;
                    best = j;
                }
            }
            if (best != k) {
                for (std::size_t i = 0; i < m; ++i) std::swap(r(i, k), r(i, best));
                std::swap(perm[k], perm[best]);
            }
            double normx = std::sqrt(std::max(best_norm, 0.0));
            if (normx == 0.0) break;  // remaining block is exactly zero

            const double alpha = r(k, k);
            const double s = alpha >= 0.0 ? -normx : normx;
            const double v0k = alpha - s;
            double vsq = v0k * v0k;
            for (std::size_t i = k + 1; i < m; ++i) vsq += r(i, k) * r(i, k);
            v0[k] = v0k;
            vtv[k] = vsq;
            r(k, k) = s;

            if (vsq > 0.0) {
                for (std::size_t j = k + 1; j < n; ++j) {
                    double w = v0k * r(k, j);
                    for (std::size_t i = k + 1; i < m; ++i) w += r(i, k) * r(i, j);
                    const double scale = 2.0 * w / vsq;
                    r(k, j) -= scale * v0k;
                    for (std::size_t i = k + 1; i < m; ++i) r(i, j) -= scale * r(i, k);
                }
            }
            steps = k + 1;
        }
    }

    void apply_qt(Vec& b) const {
        const std::size_t m = r.rows();
        for (std::size_t k = 0; k < steps; ++k) {
            if (vtv[k] == 0.0) continue;
            double w = v0[k] * b[k];
            for (std::size_t i = k + 1; i < m; ++i) w += r(i, k) * b[i];
            const double scale = 2.0 * w / vtv[k];
            b[k] -= scale * v0[k];
            for (std::size_t i = k + 1; i < m; ++i) b[i] -= scale * r(i, k);
        }
    }

    std::size_t numerical_rank(double tol) const {
        if (steps == 0) return 0;
        const double scale = std::abs(r(0, 0));
        if (scale == 0.0) return 0;
        std::size_t rk = 0;
        for (std::size_t k = 0; k < steps; ++k) {
            if (std::abs(r(k, k)) > tol * scale) ++rk;
        }
        return rk;
    }
};

}  // namespace

std::size_t rank(const Matrix& m, double tol) {
    if (tol <= 0.0) throw std::invalid_argument("rank tolerance must be positive");
    if (m.empty()) return 0;
    return ColPivQr(m).numerical_rank(tol);
}

LeastSquares solve_least_squares(const Matrix& a, const Vec& b, double tol, double rank_tol) {
    if (a.rows() != b.size()) {
        throw std::invalid_argument("least squares shape mismatch: " + shape(a) +
                                    " vs rhs of length " + std::to_string(b.size()));
    }
    LeastSquares out;
    out.x.assign(a.cols(), 0.0);
    if (a.empty()) {
        out.residual = norm2(b);
        out.within_tol = out.residual <= tol * (1.0 + norm2(b));
        return out;
    }

    ColPivQr qr(a);
    const std::size_t rk = qr.numerical_rank(rank_tol);
    Vec c = b;
    qr.apply_qt(c);

    // Back-substitute on the leading rk x rk triangle, zeros elsewhere.
    Vec z(rk, 0.0);
    for (std::size_t ii = rk; ii-- > 0;) {
        double s = c[ii];
        for (std::size_t j = ii + 1; j < rk; ++j) s -= qr.r(ii, j) * z[j];
        z[ii] = s / qr.r(ii, ii);
    }
    for (std::size_t ii = 0; ii < rk; ++ii) out.x[qr.perm[ii]] = z[ii];

    Vec ax = matvec(a, out.x);
    for (std::size_t i = 0; i < ax.size(); ++i) ax[i] -= b[i];
    out.residual = norm2(ax);
    out.within_tol = out.residual <= tol * (1.0 + norm2(b));
    return out;
}

}  // namespace ddstl::num
