#pragma once

#include "furstenberg/checks.hpp"
#include "furstenberg/measure_spec.hpp"
#include "furstenberg/walk.hpp"
#include "furstenberg/words.hpp"

#include <optional>
#include <string>
#include <vector>

namespace furst {

struct ParameterOutOfScope : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// mu = (1/2) delta_A + (1/2) delta_B with A the rational rotation by theta_n
// (sin = 2n/(n^2+1)) and B = diag((n^3+1)/n^3, n^3/(n^3+1)).
MeasureSpec build_two_gen(long n);

// a-fold rotationally symmetric family: conjugates of the given unimodular
// elements by powers of a rational rotation matrix agreeing with rotation by
// pi/a to ~1e-16 (exact pi/a lives outside quadratic fields for a = 5; the
// wrap-around invariance defect is far below Monte-Carlo resolution).
MeasureSpec build_rotational(int a, const std::vector<ExactMatrix>& elements);

struct LargeElementFamily {
    MeasureSpec spec;
    long prime = 0;              // p with sqrt(p) generating the field
    double epsilon = 0.0;        // ping-pong separation scale
    PingPongCertificate bigs;    // certificate for the Galois conjugates
};

// 2^n elements conjugate to diag(c - sqrt p, .) by rotations with exact
// rational sines/cosines; freeness certified on the +sqrt(p) Galois
// conjugates and transferred through the field embedding.
LargeElementFamily build_large_element(double r, int n_steps);

// (h/chi) / (C max(1, log(log_M/h))^2); log-safe, requires log_M >= h.
double evaluate_condition(double h, double chi, double log_m, double big_c);

struct CertificateBudgets {
    int lyapunov_steps = 10000;
    int lyapunov_samples = 200;
    int burn_in = 2000;
    int stationary_samples = 20000;
    int n_max = 8;
    int word_depth = 12;
    int renewal_runs = 1000;     // 0 disables the renewal curve
    int workers = 1;
};

struct DetailDecayPoint {
    double r = 0.0;
    double s_r = 0.0;
    double log_inv_beta1 = 0.0; // (log 1/r)^-1
    double log_inv_beta2 = 0.0; // (log 1/r)^-2
};

struct CertificateReport {
    std::string spec_name;
    LyapunovEstimate chi;
    std::vector<double> entropy_envelope; // H(mu*n)/n
    std::vector<std::size_t> support_sizes;
    bool freeness_probe = false;          // words distinct to word_depth
    double h_used = 0.0;
    std::string h_policy;                 // "presumptive-free" | "envelope-min"
    double log_m_bound = 0.0;
    int field_degree = 1;
    double max_entry_height = 1.0;
    double t_arc = 0.0;
    double alpha0_observed = 0.0;
    double c_used = 1.0;
    double condition_ratio = 0.0;
    bool condition_holds = false;         // ratio > 1 at the supplied C
    std::vector<DetailDecayPoint> detail_decay;
    HolderFit holder;
    std::optional<RenewalTable> renewal;
    IrreducibilityScreen screen;
    int stationary_aborted = 0;
    bool degenerate = false;              // zero entropy or zero chi
    std::string verdict;
};

// Assembles chi, the entropy envelope, the splitting-rate bound and the
// non-degeneracy profile, then evaluates the main sufficient condition.
CertificateReport full_report(const MeasureSpec& spec, double t_arc,
                              double big_c, const CertificateBudgets& budgets,
                              std::uint64_t seed);

} // namespace furst
