#pragma once

#include "furstenberg/circle.hpp"
#include "furstenberg/measure_spec.hpp"
#include "furstenberg/rng.hpp"
#include "furstenberg/sl2.hpp"

#include <cstdint>
#include <vector>

namespace furst {

struct StoppingTimeOverflow : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LyapunovEstimate {
    double chi_hat = 0.0;   // nats per step
    double std_error = 0.0;
    int steps_per_sample = 0;
    int samples = 0;
    std::uint64_t seed = 0;
    int workers = 1;
    bool positive = false;  // chi_hat > 3 std errors ("flag, not assert")
};

// Mean over samples of (1/steps) log ||gamma_1 ... gamma_steps|| with
// periodic renormalization. Deterministic given (spec, seed, workers).
LyapunovEstimate estimate_lyapunov(const MeasureSpec& spec, int steps,
                                   int samples, std::uint64_t seed,
                                   int workers = 1);

struct StationaryEstimate {
    CircleMeasure measure = CircleMeasure::uniform(256);
    int burn_in = 0;
    int samples = 0;
    std::uint64_t seed = 0;
    int workers = 1;
    int aborted = 0; // samples abandoned after repeated NearRotation
};

// One sample = b+(gamma_1 ... gamma_burn_in) from an independent stream.
StationaryEstimate estimate_stationary(const MeasureSpec& spec, int burn_in,
                                       int samples, std::uint64_t seed,
                                       int workers = 1);

// Empirical one-step pushforward: mixture of gamma . atoms over the support.
CircleMeasure push_forward(const CircleMeasure& atomic, const MeasureSpec& spec);

struct StoppedWalk {
    long tau = 0;
    ScaledProduct product;
    bool flagged_low_p = false; // P <= max atom norm, tau may be trivial
};

// tau_{P,v} = inf { n : ||(gamma_1...gamma_n)^T v|| >= P ||v|| }.
StoppedWalk stopping_time_walk(const MeasureSpec& spec, ProjectivePoint v,
                               double big_p, Rng& rng,
                               long cap = 10'000'000L);
StoppedWalk stopping_time_walk(const MeasureSpec& spec, ProjectivePoint v,
                               double big_p, std::uint64_t seed,
                               long cap = 10'000'000L);

struct RenewalCell {
    double v_angle = 0.0;
    double big_p = 0.0;
    CircleMeasure law = CircleMeasure::uniform(256); // empirical stopped directions
};

struct RenewalTable {
    std::vector<double> v_grid;
    std::vector<double> p_levels;
    std::vector<RenewalCell> cells;      // row-major: v major, P minor
    std::vector<double> uniformity;      // per P: max pairwise W1 over v
    double first_vs_last_se = 0.0;       // batch SE of the stat difference
    bool decreased = false;              // stat(last) < stat(first) + 3 SE

    const RenewalCell& cell(std::size_t vi, std::size_t pj) const {
        return cells[vi * p_levels.size() + pj];
    }
};

// Empirical laws of the direction of (gamma_1...gamma_tau)^T v across a grid
// of v and levels of P, plus the uniformity statistic.
RenewalTable renewal_experiment(const MeasureSpec& spec,
                                const std::vector<double>& v_grid,
                                const std::vector<double>& p_levels, int runs,
                                std::uint64_t seed, int workers = 1);

// Group-element variant: direction of b-(a gamma_1...gamma_tau)^perp for the
// norm-threshold stopping time tau_{P,a}.
CircleMeasure renewal_from_group_element(const MeasureSpec& spec,
                                         const GroupElement& a, double big_p,
                                         int runs, std::uint64_t seed);

struct HolderFit {
    double c_fit = 0.0;
    double delta_fit = 0.0;
    bool degenerate = false;
    std::vector<double> radii;
    std::vector<double> masses;
};

// Fits log max-arc-mass(2r) against log r by least squares.
HolderFit holder_probe(const CircleMeasure& measure,
                       const std::vector<double>& radii);

struct LargeDeviationProbe {
    double rate = 0.0;       // fraction of runs outside the eps-tube
    double chi_hat = 0.0;
    double std_error = 0.0;  // binomial SE of the rate
    bool applicable = true;  // false when chi is indistinguishable from 0
};

LargeDeviationProbe large_deviation_probe(const MeasureSpec& spec, int n,
                                          double eps, int runs,
                                          std::uint64_t seed, int workers = 1);

// log ||gamma_1...gamma_n|| for one seeded walk; used by bookkeeping tests.
double walk_log_norm(const MeasureSpec& spec, int steps, Rng& rng);

} // namespace furst
