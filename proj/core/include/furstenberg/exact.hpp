#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <stdexcept>
#include <string>
#include <vector>

namespace furst {

using BigInt = boost::multiprecision::cpp_int;
using BigRational = boost::multiprecision::cpp_rational;

struct MixedFields : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
    ParseError(const std::string& what, std::size_t position)
        : std::runtime_error(what + " at position " + std::to_string(position)),
          pos(position) {}
    std::size_t pos;
};

// Element of Q or of a real quadratic field Q[sqrt(d)]: value a + b sqrt(d)
// with d square-free. Canonical form: d = 1 and b = 0 for rationals.
class ExactScalar {
public:
    ExactScalar() : a_(0), b_(0), d_(1) {}
    ExactScalar(long v) : a_(v), b_(0), d_(1) {}
    ExactScalar(BigRational a) : a_(std::move(a)), b_(0), d_(1) {}
    ExactScalar(BigRational a, BigRational b, long d);

    static ExactScalar sqrt_of(long d) { return ExactScalar(0, 1, d); }

    const BigRational& rational_part() const { return a_; }
    const BigRational& radical_part() const { return b_; }
    long field_discriminant() const { return d_; }
    bool is_rational() const { return b_ == 0; }
    bool is_zero() const { return a_ == 0 && b_ == 0; }

    ExactScalar operator+(const ExactScalar& o) const;
    ExactScalar operator-(const ExactScalar& o) const;
    ExactScalar operator*(const ExactScalar& o) const;
    ExactScalar operator-() const;
    ExactScalar inverse() const;
    // Galois conjugate a - b sqrt(d).
    ExactScalar conjugate() const { return ExactScalar(a_, -b_, d_); }

    bool operator==(const ExactScalar& o) const;
    bool is_positive() const;

    double to_double() const;

    // Canonical whitespace-free form, e.g. "3/2", "-1+2*sqrt(5)".
    std::string str() const;

    // Grammar: INT | INT/POSINT | RAT+RAT*sqrt(POSINT) | RAT-RAT*sqrt(POSINT).
    static ExactScalar parse(const std::string& text);

private:
    BigRational a_, b_;
    long d_;
    void canonicalize();
    static long common_field(const ExactScalar& x, const ExactScalar& y);
};

// Absolute (multiplicative) height of an algebraic number of degree <= 2:
// (a0 prod max(1, |root_i|))^(1/deg) of the minimal polynomial over Z.
double height(const ExactScalar& x);
double log_height(const ExactScalar& x);

// 2x2 matrix over one exact field with determinant exactly 1.
class ExactMatrix {
public:
    ExactMatrix();
    ExactMatrix(ExactScalar m11, ExactScalar m12, ExactScalar m21,
                ExactScalar m22, bool require_unimodular = true);

    const ExactScalar& at(int r, int c) const { return e_[2 * r + c]; }
    ExactScalar det() const;

    ExactMatrix operator*(const ExactMatrix& o) const;
    ExactMatrix inverse() const; // adjugate (determinant is 1)
    ExactMatrix transpose() const;
    ExactMatrix galois_conjugate() const;

    bool operator==(const ExactMatrix& o) const;

    // Canonical PSL representative: first nonzero of (m11, m21, m12, m22)
    // positive. Used as the dedup key for products.
    ExactMatrix psl_canonical() const;
    std::string psl_key() const;

    // Largest entry height and the field degree (1 or 2).
    double max_entry_height() const;
    double max_entry_log_height() const;
    int field_degree() const;

private:
    ExactScalar e_[4];
};

struct HeightReport {
    std::vector<double> entry_heights;
    double max_height = 1.0;       // C in the splitting-rate bound
    double max_log_height = 0.0;
    int field_degree = 1;
    double log_m_mu_bound = 0.0;   // [K:Q] (log 4 + 8 log C)
};

// sin/cos pair with sin = 4n/(4n^2+1), cos = (4n^2-1)/(4n^2+1); exact, with
// sin^2 + cos^2 = 1 and heights at most 4n^2+1. The angle lies in
// (1/(2n), 2/n).
struct ExactAngle {
    ExactScalar sin_value;
    ExactScalar cos_value;
};
ExactAngle theta_n(long n);

} // namespace furst
