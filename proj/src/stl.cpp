#include "ddstl/stl.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <sstream>

namespace ddstl::stl {

void ScheduleSet::add(Schedule s) {
    auto name = s.name;
    table_[name] = std::make_shared<const Schedule>(std::move(s));
}

std::shared_ptr<const Schedule> ScheduleSet::find(const std::string& name) const {
    auto it = table_.find(name);
    return it == table_.end() ? nullptr : it->second;
}

std::vector<std::string> ScheduleSet::names() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : table_) out.push_back(k);
    return out;
}

double Predicate::offset_at(std::size_t t) const {
    double b = offset;
    for (const auto& term : sched_terms) {
        if (t >= term.sched->values.size()) {
            throw std::runtime_error("schedule '" + term.sched->name + "' has " +
                                     std::to_string(term.sched->values.size()) +
                                     " entries; time step " + std::to_string(t) + " requested");
        }
        b += term.coef * term.sched->values[t];
    }
    return b;
}

double Predicate::value(const num::Vec& y, std::size_t t) const {
    if (y.size() != row.size()) {
        throw std::invalid_argument("predicate row width " + std::to_string(row.size()) +
                                    " does not match output width " + std::to_string(y.size()));
    }
    double v = offset_at(t);
    for (std::size_t i = 0; i < row.size(); ++i) v += row[i] * y[i];
    return v;
}

namespace {

void check_window(std::size_t a, std::size_t b) {
    if (a > b) {
        throw std::invalid_argument("temporal window [" + std::to_string(a) + "," +
                                    std::to_string(b) + "] has a > b");
    }
}

}  // namespace

Formula make_bool(bool value) {
    Formula f;
    f.kind = NodeKind::Bool;
    f.value = value;
    return f;
}

Formula make_pred(Predicate p) {
    num::require_finite(p.row, "predicate row");
    Formula f;
    f.kind = NodeKind::Pred;
    f.pred = std::move(p);
    return f;
}

Formula make_pred(num::Vec row, double offset) {
    Predicate p;
    p.row = std::move(row);
    p.offset = offset;
    return make_pred(std::move(p));
}

Formula make_not(Formula child) {
    Formula f;
    f.kind = NodeKind::Not;
    f.children.push_back(std::move(child));
    return f;
}

Formula make_and(std::vector<Formula> children) {
    if (children.size() < 2) throw std::invalid_argument("and needs at least 2 children");
    Formula f;
    f.kind = NodeKind::And;
    f.children = std::move(children);
    return f;
}

Formula make_or(std::vector<Formula> children) {
    if (children.size() < 2) throw std::invalid_argument("or needs at least 2 children");
    Formula f;
    f.kind = NodeKind::Or;
    f.children = std::move(children);
    return f;
}

Formula make_always(std::size_t a, std::size_t b, Formula child) {
    check_window(a, b);
    Formula f;
    f.kind = NodeKind::Always;
    f.a = a;
    f.b = b;
    f.children.push_back(std::move(child));
    return f;
}

Formula make_eventually(std::size_t a, std::size_t b, Formula child) {
    check_window(a, b);
    Formula f;
    f.kind = NodeKind::Eventually;
    f.a = a;
    f.b = b;
    f.children.push_back(std::move(child));
    return f;
}

Formula make_until(std::size_t a, std::size_t b, Formula left, Formula right) {
    check_window(a, b);
    Formula f;
    f.kind = NodeKind::Until;
    f.a = a;
    f.b = b;
    f.children.push_back(std::move(left));
    f.children.push_back(std::move(right));
    return f;
}

std::size_t horizon(const Formula& f) {
    switch (f.kind) {
        case NodeKind::Bool:
        case NodeKind::Pred:
            return 0;
        case NodeKind::Not:
            return horizon(f.children[0]);
        case NodeKind::And:
        case NodeKind::Or: {
            std::size_t h = 0;
            for (const auto& c : f.children) h = std::max(h, horizon(c));
            return h;
        }
        case NodeKind::Always:
        case NodeKind::Eventually:
            return horizon(f.children[0]) + f.b;
        case NodeKind::Until:
            return std::max(horizon(f.children[0]), horizon(f.children[1])) + f.b;
    }
    return 0;
}

namespace {

struct Monitor {
    std::span<const num::Vec> y;
    std::size_t last;  // L

    bool eval(const Formula& f, std::size_t t) const {
        switch (f.kind) {
            case NodeKind::Bool:
                return f.value;
            case NodeKind::Pred:
                return f.pred.value(y[t], t) > 0.0;
            case NodeKind::Not:
                return !eval(f.children[0], t);
            case NodeKind::And:
                for (const auto& c : f.children)
                    if (!eval(c, t)) return false;
                return true;
            case NodeKind::Or:
                for (const auto& c : f.children)
                    if (eval(c, t)) return true;
                return false;
            case NodeKind::Always: {
                const std::size_t lo = std::min(t + f.a, last);
                const std::size_t hi = std::min(t + f.b, last);
                for (std::size_t i = lo; i <= hi; ++i)
                    if (!eval(f.children[0], i)) return false;
                return true;
            }
            case NodeKind::Eventually: {
                const std::size_t lo = std::min(t + f.a, last);
                const std::size_t hi = std::min(t + f.b, last);
                for (std::size_t i = lo; i <= hi; ++i)
                    if (eval(f.children[0], i)) return true;
                return false;
            }
            case NodeKind::Until: {
                const Formula& left = f.children[0];
                const Formula& right = f.children[1];
                const std::size_t lo = std::min(t + f.a, last);
                const std::size_t hi = std::min(t + f.b, last);
                for (std::size_t i = t; i <= lo; ++i)
                    if (!eval(left, i)) return false;
                bool witness = false;
                for (std::size_t i = lo; i <= hi && !witness; ++i) witness = eval(right, i);
                if (!witness) return false;
                return unbounded_until(left, right, lo);
            }
        }
        return false;
    }

    // z(s) = right(s) or (left(s) and z(s+1)), z(L) = right(L).
    bool unbounded_until(const Formula& left, const Formula& right, std::size_t s) const {
        for (std::size_t i = s; i < last; ++i) {
            if (eval(right, i)) return true;
            if (!eval(left, i)) return false;
        }
        return eval(right, last);
    }
};

}  // namespace

bool monitor(const Formula& f, std::span<const num::Vec> y, std::size_t t) {
    if (y.empty()) throw std::invalid_argument("monitor needs a nonempty trajectory");
    const std::size_t last = y.size() - 1;
    if (t + horizon(f) > last) {
        throw std::invalid_argument("trajectory of length " + std::to_string(y.size()) +
                                    " too short to evaluate a horizon-" +
                                    std::to_string(horizon(f)) + " formula at t=" +
                                    std::to_string(t));
    }
    return Monitor{y, last}.eval(f, t);
}

namespace {

std::size_t blame(const Monitor& mon, const Formula& f, std::size_t t) {
    using K = NodeKind;
    switch (f.kind) {
        case K::Bool:
        case K::Pred:
        case K::Not:
            return t;
        case K::And:
        case K::Or: {
            std::size_t best = SIZE_MAX;
            for (const auto& c : f.children) {
                if (!mon.eval(c, t)) best = std::min(best, blame(mon, c, t));
            }
            return best == SIZE_MAX ? t : best;
        }
        case K::Always:
        case K::Eventually: {
            const std::size_t lo = std::min(t + f.a, mon.last);
            const std::size_t hi = std::min(t + f.b, mon.last);
            std::size_t best = SIZE_MAX;
            for (std::size_t i = lo; i <= hi; ++i) {
                if (!mon.eval(f.children[0], i)) best = std::min(best, blame(mon, f.children[0], i));
            }
            return best == SIZE_MAX ? t : best;
        }
        case K::Until: {
            const std::size_t lo = std::min(t + f.a, mon.last);
            const std::size_t hi = std::min(t + f.b, mon.last);
            std::size_t best = SIZE_MAX;
            for (std::size_t i = t; i <= lo; ++i) {
                if (!mon.eval(f.children[0], i)) best = std::min(best, blame(mon, f.children[0], i));
            }
            bool witness = false;
            for (std::size_t i = lo; i <= hi; ++i) witness = witness || mon.eval(f.children[1], i);
            if (!witness) {
                for (std::size_t i = lo; i <= hi; ++i) {
                    best = std::min(best, blame(mon, f.children[1], i));
                }
            }
            if (!mon.unbounded_until(f.children[0], f.children[1], lo)) best = std::min(best, lo);
            return best == SIZE_MAX ? t : best;
        }
    }
    return t;
}

}  // namespace

std::optional<std::size_t> first_violation(const Formula& f, std::span<const num::Vec> y,
                                           std::size_t t) {
    if (monitor(f, y, t)) return std::nullopt;
    Monitor mon{y, y.size() - 1};
    return blame(mon, f, t);
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

ParseError::ParseError(std::size_t line_, std::size_t col_, const std::string& message)
    : std::runtime_error("parse error at " + std::to_string(line_) + ":" +
                         std::to_string(col_) + ": " + message),
      line(line_),
      col(col_) {}

namespace {

enum class Tok {
    End, LParen, RParen, LBrack, RBrack, Comma,
    Plus, Minus, Star, Arrow, Cmp,
    Number, Ident,
    KwAnd, KwOr, KwNot, KwTrue, KwFalse, KwAbs, KwG, KwF, KwU,
};

struct Token {
    Tok kind = Tok::End;
    std::string text;
    double number = 0.0;
    std::size_t line = 1, col = 1;
};

struct Lexer {
    std::string_view src;
    std::size_t pos = 0, line = 1, col = 1;

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(line, col, msg); }

    void advance(std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            if (src[pos] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
            ++pos;
        }
    }

    Token next() {
        while (pos < src.size() && (src[pos] == ' ' || src[pos] == '\t' || src[pos] == '\n' ||
                                    src[pos] == '\r')) {
            advance(1);
        }
        Token t;
        t.line = line;
        t.col = col;
        if (pos >= src.size()) return t;

        const char c = src[pos];
        auto single = [&](Tok k) {
            t.kind = k;
            t.text = src.substr(pos, 1);
            advance(1);
            return t;
        };
        switch (c) {
            case '(': return single(Tok::LParen);
            case ')': return single(Tok::RParen);
            case '[': return single(Tok::LBrack);
            case ']': return single(Tok::RBrack);
            case ',': return single(Tok::Comma);
            case '+': return single(Tok::Plus);
            case '*': return single(Tok::Star);
            case '-':
                if (pos + 1 < src.size() && src[pos + 1] == '>') {
                    t.kind = Tok::Arrow;
                    t.text = "->";
                    advance(2);
                    return t;
                }
                return single(Tok::Minus);
            case '>':
            case '<': {
                t.kind = Tok::Cmp;
                if (pos + 1 < src.size() && src[pos + 1] == '=') {
                    t.text = src.substr(pos, 2);
                    advance(2);
                } else {
                    t.text = src.substr(pos, 1);
                    advance(1);
                }
                return t;
            }
            default:
                break;
        }

        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t end = pos;
            while (end < src.size() &&
                   (std::isdigit(static_cast<unsigned char>(src[end])) || src[end] == '.')) {
                ++end;
            }
            if (end < src.size() && (src[end] == 'e' || src[end] == 'E')) {
                std::size_t e = end + 1;
                if (e < src.size() && (src[e] == '+' || src[e] == '-')) ++e;
                if (e < src.size() && std::isdigit(static_cast<unsigned char>(src[e]))) {
                    ++e;
                    while (e < src.size() && std::isdigit(static_cast<unsigned char>(src[e]))) ++e;
                    end = e;
                }
            }
            t.kind = Tok::Number;
            t.text = std::string(src.substr(pos, end - pos));
            auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(),
                                             t.number);
            if (ec != std::errc() || ptr != t.text.data() + t.text.size()) {
                fail("malformed number '" + t.text + "'");
            }
            advance(end - pos);
            return t;
        }

        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t end = pos;
            while (end < src.size() && (std::isalnum(static_cast<unsigned char>(src[end])) ||
                                        src[end] == '_')) {
                ++end;
            }
            t.text = std::string(src.substr(pos, end - pos));
            advance(end - pos);
            if (t.text == "and") t.kind = Tok::KwAnd;
            else if (t.text == "or") t.kind = Tok::KwOr;
            else if (t.text == "not") t.kind = Tok::KwNot;
            else if (t.text == "true") t.kind = Tok::KwTrue;
            else if (t.text == "false") t.kind = Tok::KwFalse;
            else if (t.text == "abs") t.kind = Tok::KwAbs;
            else if (t.text == "G") t.kind = Tok::KwG;
            else if (t.text == "F") t.kind = Tok::KwF;
            else if (t.text == "U") t.kind = Tok::KwU;
            else t.kind = Tok::Ident;
            return t;
        }
        fail(std::string("unexpected character '") + c + "'");
    }
};

// Affine expression accumulator: constant + y coefficients + schedule terms.
struct Affine {
    double konst = 0.0;
    num::Vec y;
    std::map<std::string, std::pair<std::shared_ptr<const Schedule>, double>> sched;

    explicit Affine(std::size_t n_y) : y(n_y, 0.0) {}

    Affine& operator+=(const Affine& o) {
        konst += o.konst;
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += o.y[i];
        for (const auto& [name, term] : o.sched) {
            auto& slot = sched[name];
            slot.first = term.first;
            slot.second += term.second;
        }
        return *this;
    }
    void scale(double s) {
        konst *= s;
        for (auto& v : y) v *= s;
        for (auto& [name, term] : sched) term.second *= s;
    }
    bool is_constant() const {
        if (!sched.empty()) return false;
        return std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0; });
    }
};

struct Parser {
    Lexer lex;
    Token cur;
    std::size_t n_y;
    const ScheduleSet& schedules;

    Parser(std::string_view text, std::size_t n_y_, const ScheduleSet& scheds)
        : lex{text}, n_y(n_y_), schedules(scheds) {
        cur = lex.next();
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(cur.line, cur.col, msg);
    }

    void bump() { cur = lex.next(); }

    void expect(Tok k, const char* what) {
        if (cur.kind != k) fail(std::string("expected ") + what);
        bump();
    }

    Formula parse_formula() {
        Formula lhs = parse_or();
        if (cur.kind == Tok::Arrow) {
            bump();
            Formula rhs = parse_formula();
            std::vector<Formula> kids;
            kids.push_back(make_not(std::move(lhs)));
            kids.push_back(std::move(rhs));
            return make_or(std::move(kids));
        }
        return lhs;
    }

    Formula parse_or() {
        std::vector<Formula> kids;
        kids.push_back(parse_and());
        while (cur.kind == Tok::KwOr) {
            bump();
            kids.push_back(parse_and());
        }
        if (kids.size() == 1) return std::move(kids[0]);
        return make_or(std::move(kids));
    }

    Formula parse_and() {
        std::vector<Formula> kids;
        kids.push_back(parse_until());
        while (cur.kind == Tok::KwAnd) {
            bump();
            kids.push_back(parse_until());
        }
        if (kids.size() == 1) return std::move(kids[0]);
        return make_and(std::move(kids));
    }

    Formula parse_until() {
        Formula lhs = parse_unary();
        if (cur.kind == Tok::KwU) {
            bump();
            auto [a, b] = parse_window();
            Formula rhs = parse_until();
            return make_until(a, b, std::move(lhs), std::move(rhs));
        }
        return lhs;
    }

    Formula parse_unary() {
        if (cur.kind == Tok::KwNot) {
            bump();
            return make_not(parse_unary());
        }
        if (cur.kind == Tok::KwG || cur.kind == Tok::KwF) {
            const bool always = cur.kind == Tok::KwG;
            bump();
            auto [a, b] = parse_window();
            Formula child = parse_unary();
            return always ? make_always(a, b, std::move(child))
                          : make_eventually(a, b, std::move(child));
        }
        return parse_primary();
    }

    std::pair<std::size_t, std::size_t> parse_window() {
        expect(Tok::LBrack, "'['");
        std::size_t a = parse_window_bound();
        expect(Tok::Comma, "','");
        std::size_t b = parse_window_bound();
        if (a > b) fail("window bounds must satisfy a <= b");
        expect(Tok::RBrack, "']'");
        return {a, b};
    }

    std::size_t parse_window_bound() {
        if (cur.kind != Tok::Number) fail("expected a window bound");
        double v = cur.number;
        if (v < 0 || v != std::floor(v)) fail("window bounds must be nonnegative integers");
        bump();
        return static_cast<std::size_t>(v);
    }

    Formula parse_primary() {
        if (cur.kind == Tok::LParen) {
            // Could open a sub-formula or a parenthesized affine expression;
            // decide by scanning ahead for a comparison at depth zero.
            if (paren_opens_comparison()) return parse_comparison();
            bump();
            Formula f = parse_formula();
            expect(Tok::RParen, "')'");
            return f;
        }
        if (cur.kind == Tok::KwTrue) {
            bump();
            return make_bool(true);
        }
        if (cur.kind == Tok::KwFalse) {
            bump();
            return make_bool(false);
        }
        return parse_comparison();
    }

    bool paren_opens_comparison() const {
        // Lookahead on a copy of the lexer: a '(' belongs to an affine
        // expression iff the token after its matching ')' continues an
        // expression (comparison or arithmetic operator). Otherwise it
        // groups a sub-formula.
        Lexer probe = lex;
        Token t = cur;
        int depth = 0;
        while (t.kind != Tok::End) {
            if (t.kind == Tok::LParen) ++depth;
            if (t.kind == Tok::RParen) {
                --depth;
                if (depth == 0) {
                    Token after = probe.next();
                    return after.kind == Tok::Cmp || after.kind == Tok::Plus ||
                           after.kind == Tok::Minus || after.kind == Tok::Star;
                }
            }
            t = probe.next();
        }
        return false;
    }

    Formula parse_comparison() {
        if (cur.kind == Tok::KwAbs) {
            bump();
            expect(Tok::LParen, "'(' after abs");
            Affine inner = parse_affine();
            expect(Tok::RParen, "')'");
            if (cur.kind != Tok::Cmp) fail("expected a comparison after abs(...)");
            const std::string op = cur.text;
            bump();
            Affine bound = parse_affine();
            // abs(e) >= c  ->  (e >= c) or (e <= -c); abs(e) <= c  ->  both.
            Affine ge = inner;   // e - c > 0
            Affine neg = inner;  // -e - c > 0
            neg.scale(-1.0);
            Affine minus_bound = bound;
            minus_bound.scale(-1.0);
            ge += minus_bound;
            neg += minus_bound;
            if (op == ">" || op == ">=") {
                std::vector<Formula> kids;
                kids.push_back(affine_pred(ge));
                kids.push_back(affine_pred(neg));
                return make_or(std::move(kids));
            }
            // abs(e) <= c: e <= c and e >= -c, i.e. c - e > 0 and c + e > 0.
            ge.scale(-1.0);
            neg.scale(-1.0);
            std::vector<Formula> kids;
            kids.push_back(affine_pred(ge));
            kids.push_back(affine_pred(neg));
            return make_and(std::move(kids));
        }

        Affine lhs = parse_affine();
        if (cur.kind != Tok::Cmp) fail("expected a comparison operator");
        const std::string op = cur.text;
        bump();
        Affine rhs = parse_affine();
        rhs.scale(-1.0);
        lhs += rhs;  // lhs - rhs
        if (op == "<" || op == "<=") lhs.scale(-1.0);
        return affine_pred(lhs);
    }

    Formula affine_pred(const Affine& g) {
        if (g.is_constant()) return make_bool(g.konst > 0.0);
        Predicate p;
        p.row = g.y;
        p.offset = g.konst;
        for (const auto& [name, term] : g.sched) {
            if (term.second != 0.0) p.sched_terms.push_back({term.first, term.second});
        }
        return make_pred(std::move(p));
    }

    Affine parse_affine() {
        Affine acc = parse_affine_term(+1.0);
        while (cur.kind == Tok::Plus || cur.kind == Tok::Minus) {
            const double sign = cur.kind == Tok::Plus ? +1.0 : -1.0;
            bump();
            acc += parse_affine_term(sign);
        }
        return acc;
    }

    Affine parse_affine_term(double sign) {
        Affine acc = parse_affine_factor();
        while (cur.kind == Tok::Star) {
            bump();
            Affine rhs = parse_affine_factor();
            if (acc.is_constant()) {
                rhs.scale(acc.konst);
                acc = std::move(rhs);
            } else if (rhs.is_constant()) {
                acc.scale(rhs.konst);
            } else {
                fail("products of two non-constant terms are not affine");
            }
        }
        acc.scale(sign);
        return acc;
    }

    Affine parse_affine_factor() {
        if (cur.kind == Tok::Minus) {
            bump();
            Affine a = parse_affine_factor();
            a.scale(-1.0);
            return a;
        }
        if (cur.kind == Tok::Number) {
            Affine a(n_y);
            a.konst = cur.number;
            bump();
            return a;
        }
        if (cur.kind == Tok::LParen) {
            bump();
            Affine a = parse_affine();
            expect(Tok::RParen, "')'");
            return a;
        }
        if (cur.kind == Tok::Ident) {
            const std::string name = cur.text;
            if (name.size() >= 2 && name[0] == 'y' &&
                std::all_of(name.begin() + 1, name.end(),
                            [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
                const std::size_t idx = std::stoul(name.substr(1));
                if (idx < 1 || idx > n_y) {
                    fail("output '" + name + "' out of range; system has " +
                         std::to_string(n_y) + " output(s)");
                }
                Affine a(n_y);
                a.y[idx - 1] = 1.0;
                bump();
                return a;
            }
            auto sched = schedules.find(name);
            if (!sched) {
                std::string known;
                for (const auto& s : schedules.names()) known += " " + s;
                fail("unknown identifier '" + name + "'; expected y1..y" + std::to_string(n_y) +
                     (known.empty() ? " (no schedules loaded)" : " or a schedule:" + known));
            }
            Affine a(n_y);
            a.sched[name] = {sched, 1.0};
            bump();
            return a;
        }
        fail("expected a number, output, schedule name, or '('");
    }
};

}  // namespace

Formula parse(std::string_view text, std::size_t n_y, const ScheduleSet& schedules) {
    Parser p(text, n_y, schedules);
    Formula f = p.parse_formula();
    if (p.cur.kind != Tok::End) p.fail("trailing input after formula");
    return f;
}

namespace {

std::string fmt_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

std::string pred_text(const Predicate& p) {
    std::string out;
    auto push_term = [&](const std::string& term) {
        if (!out.empty()) out += " + ";
        out += term;
    };
    for (std::size_t i = 0; i < p.row.size(); ++i) {
        if (p.row[i] != 0.0) push_term(fmt_double(p.row[i]) + "*y" + std::to_string(i + 1));
    }
    for (const auto& term : p.sched_terms) {
        push_term(fmt_double(term.coef) + "*" + term.sched->name);
    }
    if (p.offset != 0.0 || out.empty()) push_term(fmt_double(p.offset));
    return out + " > 0";
}

std::string window_text(const Formula& f) {
    return "[" + std::to_string(f.a) + "," + std::to_string(f.b) + "]";
}

}  // namespace

std::string to_text(const Formula& f) {
    switch (f.kind) {
        case NodeKind::Bool:
            return f.value ? "true" : "false";
        case NodeKind::Pred:
            return pred_text(f.pred);
        case NodeKind::Not:
            return "not (" + to_text(f.children[0]) + ")";
        case NodeKind::And:
        case NodeKind::Or: {
            const char* sep = f.kind == NodeKind::And ? " and " : " or ";
            std::string out = "(";
            for (std::size_t i = 0; i < f.children.size(); ++i) {
                if (i > 0) out += sep;
                out += "(" + to_text(f.children[i]) + ")";
            }
            return out + ")";
        }
        case NodeKind::Always:
            return "G" + window_text(f) + " (" + to_text(f.children[0]) + ")";
        case NodeKind::Eventually:
            return "F" + window_text(f) + " (" + to_text(f.children[0]) + ")";
        case NodeKind::Until:
            return "((" + to_text(f.children[0]) + ") U" + window_text(f) + " (" +
                   to_text(f.children[1]) + "))";
    }
    return "";
}

bool structurally_equal(const Formula& a, const Formula& b) {
    if (a.kind != b.kind || a.a != b.a || a.b != b.b || a.value != b.value ||
        a.children.size() != b.children.size()) {
        return false;
    }
    if (a.kind == NodeKind::Pred) {
        if (a.pred.row != b.pred.row || a.pred.offset != b.pred.offset ||
            a.pred.sched_terms.size() != b.pred.sched_terms.size()) {
            return false;
        }
        for (std::size_t i = 0; i < a.pred.sched_terms.size(); ++i) {
            if (a.pred.sched_terms[i].sched->name != b.pred.sched_terms[i].sched->name ||
                a.pred.sched_terms[i].coef != b.pred.sched_terms[i].coef) {
                return false;
            }
        }
    }
    for (std::size_t i = 0; i < a.children.size(); ++i) {
        if (!structurally_equal(a.children[i], b.children[i])) return false;
    }
    return true;
}

Schedule read_schedule_csv(std::istream& in, std::string name) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty schedule CSV");
    if (line.rfind("t,", 0) != 0) {
        throw std::runtime_error("schedule CSV must have header 't,value'");
    }
    Schedule s;
    s.name = std::move(name);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw std::runtime_error("schedule CSV line " + std::to_string(line_no) +
                                     " missing comma");
        }
        const std::string t_field = line.substr(0, comma);
        std::string v_field = line.substr(comma + 1);
        if (!v_field.empty() && v_field.back() == '\r') v_field.pop_back();
        std::size_t t = std::stoul(t_field);
        if (t != s.values.size()) {
            throw std::runtime_error("schedule CSV time steps must be contiguous from 0; got " +
                                     t_field + " on line " + std::to_string(line_no));
        }
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(v_field.data(), v_field.data() + v_field.size(), v);
        if (ec != std::errc() || ptr != v_field.data() + v_field.size()) {
            throw std::runtime_error("bad schedule value '" + v_field + "' on line " +
                                     std::to_string(line_no));
        }
        s.values.push_back(v);
    }
    return s;
}

Schedule read_schedule_csv_file(const std::string& path, std::string name) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open '" + path + "'");
    return read_schedule_csv(f, std::move(name));
}

}  // namespace ddstl::stl
