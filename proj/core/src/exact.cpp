#include "furstenberg/exact.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace furst {

namespace {

bool is_square_free(long d) {
    if (d < 1) return false;
    long n = d;
    for (long p = 2; p * p <= n; ++p) {
        if (n % p == 0) {
            n /= p;
            if (n % p == 0) return false;
        }
    }
    return true;
}

double big_log(const BigInt& x) {
    if (x <= 0) throw std::domain_error("big_log: nonpositive");
    double as_double = x.convert_to<double>();
    if (std::isfinite(as_double) && as_double > 0) return std::log(as_double);
    auto bits = boost::multiprecision::msb(x);
    BigInt shifted = x >> (bits - 52);
    return std::log(shifted.convert_to<double>()) +
           static_cast<double>(bits - 52) * std::log(2.0);
}

double rational_to_double(const BigRational& q) {
    double v = q.convert_to<double>();
    if (std::isfinite(v)) return v;
    double ln = big_log(boost::multiprecision::abs(numerator(q))) -
                big_log(denominator(q));
    double s = numerator(q) < 0 ? -1.0 : 1.0;
    return s * std::exp(ln);
}

} // namespace

ExactScalar::ExactScalar(BigRational a, BigRational b, long d)
    : a_(std::move(a)), b_(std::move(b)), d_(d) {
    if (!is_square_free(d_))
        throw std::invalid_argument("ExactScalar: d must be square-free >= 1");
    canonicalize();
}

void ExactScalar::canonicalize() {
    if (d_ == 1) {
        a_ += b_;
        b_ = 0;
    }
    if (b_ == 0) d_ = 1;
}

long ExactScalar::common_field(const ExactScalar& x, const ExactScalar& y) {
    if (x.d_ == y.d_) return x.d_;
    if (x.d_ == 1) return y.d_;
    if (y.d_ == 1) return x.d_;
    throw MixedFields("ExactScalar: mixing sqrt(" + std::to_string(x.d_) +
                      ") with sqrt(" + std::to_string(y.d_) + ")");
}

ExactScalar ExactScalar::operator+(const ExactScalar& o) const {
    long d = common_field(*this, o);
    return ExactScalar(a_ + o.a_, b_ + o.b_, d);
}

ExactScalar ExactScalar::operator-(const ExactScalar& o) const {
    long d = common_field(*this, o);
    return ExactScalar(a_ - o.a_, b_ - o.b_, d);
}

ExactScalar ExactScalar::operator*(const ExactScalar& o) const {
    long d = common_field(*this, o);
    return ExactScalar(a_ * o.a_ + b_ * o.b_ * d, a_ * o.b_ + b_ * o.a_, d);
}

ExactScalar ExactScalar::operator-() const { return ExactScalar(-a_, -b_, d_); }

ExactScalar ExactScalar::inverse() const {
    if (is_zero()) throw std::domain_error("ExactScalar: inverse of zero");
    // 1/(a + b sqrt d) = (a - b sqrt d)/(a^2 - b^2 d); the norm is nonzero
    // because sqrt(d) is irrational for square-free d > 1.
    BigRational norm = a_ * a_ - b_ * b_ * d_;
    return ExactScalar(a_ / norm, -b_ / norm, d_);
}

bool ExactScalar::operator==(const ExactScalar& o) const {
    if (b_ == 0 && o.b_ == 0) return a_ == o.a_;
    return d_ == o.d_ && a_ == o.a_ && b_ == o.b_;
}

bool ExactScalar::is_positive() const {
    if (b_ == 0) return a_ > 0;
    if (a_ == 0) return b_ > 0;
    if (a_ > 0 && b_ > 0) return true;
    if (a_ < 0 && b_ < 0) return false;
    // Opposite signs: compare a^2 with b^2 d.
    bool rational_wins = a_ * a_ > b_ * b_ * d_;
    return a_ > 0 ? rational_wins : !rational_wins;
}

double ExactScalar::to_double() const {
    double v = rational_to_double(a_);
    if (b_ != 0)
        v += rational_to_double(b_) * std::sqrt(static_cast<double>(d_));
    return v;
}

namespace {

std::string rational_str(const BigRational& q) {
    std::string s = numerator(q).str();
    if (denominator(q) != 1) s += "/" + denominator(q).str();
    return s;
}

} // namespace

std::string ExactScalar::str() const {
    if (b_ == 0) return rational_str(a_);
    std::string out = rational_str(a_);
    out += (b_ > 0) ? "+" : "-";
    out += rational_str(boost::multiprecision::abs(b_));
    out += "*sqrt(" + std::to_string(d_) + ")";
    return out;
}

namespace {

struct Scanner {
    const std::string& text;
    std::size_t pos = 0;

    bool done() const { return pos >= text.size(); }
    char peek() const { return done() ? '\0' : text[pos]; }
    bool consume(char c) {
        if (peek() == c) { ++pos; return true; }
        return false;
    }
    void expect(char c) {
        if (!consume(c))
            throw ParseError(std::string("expected '") + c + "'", pos);
    }

    BigInt integer() {
        bool negative = consume('-');
        if (!negative) consume('+');
        std::size_t start = pos;
        while (!done() && std::isdigit(static_cast<unsigned char>(text[pos])))
            ++pos;
        if (pos == start) throw ParseError("expected digits", pos);
        BigInt v(text.substr(start, pos - start));
        return negative ? -v : v;
    }

    BigRational rational() {
        BigInt num = integer();
        if (consume('/')) {
            std::size_t at = pos;
            BigInt den = integer();
            if (den <= 0) throw ParseError("denominator must be positive", at);
            return BigRational(num, den);
        }
        return BigRational(num);
    }
};

} // namespace

ExactScalar ExactScalar::parse(const std::string& text) {
    Scanner s{text};
    BigRational a = s.rational();
    if (s.done()) return ExactScalar(std::move(a));

    char sign_char = s.peek();
    if (sign_char != '+' && sign_char != '-')
        throw ParseError("expected '+', '-' or end of input", s.pos);
    ++s.pos;
    BigRational b = s.rational();
    if (sign_char == '-') b = -b;
    s.expect('*');
    for (char c : {'s', 'q', 'r', 't', '('}) s.expect(c);
    std::size_t at = s.pos;
    BigInt d = s.integer();
    if (d <= 0) throw ParseError("sqrt argument must be positive", at);
    if (d > 1000000000L) throw ParseError("sqrt argument too large", at);
    s.expect(')');
    if (!s.done()) throw ParseError("trailing input", s.pos);
    long dl = d.convert_to<long>();
    if (!is_square_free(dl)) throw ParseError("sqrt argument not square-free", at);
    return ExactScalar(std::move(a), std::move(b), dl);
}

double height(const ExactScalar& x) { return std::exp(log_height(x)); }

double log_height(const ExactScalar& x) {
    using boost::multiprecision::abs;
    using boost::multiprecision::gcd;
    using boost::multiprecision::lcm;
    if (x.is_rational()) {
        // max(|p|, q) for p/q in lowest terms.
        const BigRational& q = x.rational_part();
        BigInt p = abs(numerator(q));
        BigInt den = denominator(q);
        return big_log(std::max(p, den));
    }
    // Minimal polynomial of a + b sqrt(d): primitive integer multiple of
    // X^2 - 2a X + (a^2 - b^2 d).
    const BigRational two_a = 2 * x.rational_part();
    const BigRational norm = x.rational_part() * x.rational_part() -
                             x.radical_part() * x.radical_part() *
                                 x.field_discriminant();
    BigInt l = lcm(denominator(two_a), denominator(norm));
    BigInt c2 = l;
    BigInt c1 = -numerator(two_a) * (l / denominator(two_a));
    BigInt c0 = numerator(norm) * (l / denominator(norm));
    BigInt content = gcd(c2, gcd(abs(c1), abs(c0)));
    BigInt a0 = c2 / content;

    double root1 = std::fabs(x.to_double());
    double root2 = std::fabs(x.conjugate().to_double());
    double log_mahler = big_log(a0) + std::max(0.0, std::log(root1)) +
                        std::max(0.0, std::log(root2));
    return log_mahler / 2.0;
}

ExactMatrix::ExactMatrix() {
    e_[0] = ExactScalar(1);
    e_[3] = ExactScalar(1);
}

ExactMatrix::ExactMatrix(ExactScalar m11, ExactScalar m12, ExactScalar m21,
                         ExactScalar m22, bool require_unimodular)
    : e_{std::move(m11), std::move(m12), std::move(m21), std::move(m22)} {
    if (require_unimodular && !(det() == ExactScalar(1)))
        throw std::invalid_argument("ExactMatrix: determinant is not 1");
}

ExactScalar ExactMatrix::det() const {
    return e_[0] * e_[3] - e_[1] * e_[2];
}

ExactMatrix ExactMatrix::operator*(const ExactMatrix& o) const {
    return ExactMatrix(e_[0] * o.e_[0] + e_[1] * o.e_[2],
                       e_[0] * o.e_[1] + e_[1] * o.e_[3],
                       e_[2] * o.e_[0] + e_[3] * o.e_[2],
                       e_[2] * o.e_[1] + e_[3] * o.e_[3],
                       /*require_unimodular=*/false);
}

ExactMatrix ExactMatrix::inverse() const {
    return ExactMatrix(e_[3], -e_[1], -e_[2], e_[0], false);
}

ExactMatrix ExactMatrix::transpose() const {
    return ExactMatrix(e_[0], e_[2], e_[1], e_[3], false);
}

ExactMatrix ExactMatrix::galois_conjugate() const {
    return ExactMatrix(e_[0].conjugate(), e_[1].conjugate(),
                       e_[2].conjugate(), e_[3].conjugate(), false);
}

bool ExactMatrix::operator==(const ExactMatrix& o) const {
    for (int i = 0; i < 4; ++i)
        if (!(e_[i] == o.e_[i])) return false;
    return true;
}

ExactMatrix ExactMatrix::psl_canonical() const {
    // Sign pinned by the first nonzero of (m11, m21, m12, m22).
    for (int idx : {0, 2, 1, 3}) {
        if (e_[idx].is_zero()) continue;
        if (e_[idx].is_positive()) return *this;
        return ExactMatrix(-e_[0], -e_[1], -e_[2], -e_[3], false);
    }
    return *this;
}

std::string ExactMatrix::psl_key() const {
    ExactMatrix c = psl_canonical();
    return c.e_[0].str() + "|" + c.e_[1].str() + "|" + c.e_[2].str() + "|" +
           c.e_[3].str();
}

double ExactMatrix::max_entry_height() const {
    return std::exp(max_entry_log_height());
}

double ExactMatrix::max_entry_log_height() const {
    double best = 0.0;
    for (const auto& e : e_) best = std::max(best, log_height(e));
    return best;
}

int ExactMatrix::field_degree() const {
    for (const auto& e : e_)
        if (!e.is_rational()) return 2;
    return 1;
}

ExactAngle theta_n(long n) {
    if (n < 1) throw std::invalid_argument("theta_n: n >= 1 required");
    BigInt nn(n);
    BigInt den = 4 * nn * nn + 1;
    ExactAngle out;
    out.sin_value = ExactScalar(BigRational(4 * nn, den));
    out.cos_value = ExactScalar(BigRational(4 * nn * nn - 1, den));
    return out;
}

} // namespace furst
