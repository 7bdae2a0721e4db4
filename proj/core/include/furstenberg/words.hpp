#pragma once

#include "furstenberg/exact.hpp"
#include "furstenberg/measure_spec.hpp"

#include <utility>
#include <vector>

namespace furst {

struct ExplosionGuard : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EntropySequence {
    // H(mu^{*n})/n for n = 1..n_max; an upper-bound envelope for h_RW.
    std::vector<double> h_over_n;
    std::vector<std::size_t> support_sizes; // merged PSL support per n
    std::vector<bool> all_distinct;         // support == (atom count)^n
};

// Enumerates all length-n products exactly, merging equal PSL elements and
// summing exact probabilities.
EntropySequence exact_product_entropy(const MeasureSpec& spec, int n_max,
                                      std::size_t guard = 10'000'000);

// True when all words of length <= depth in the given generators are
// pairwise distinct in PSL (exact arithmetic).
bool words_distinct_to_depth(const std::vector<ExactMatrix>& generators,
                             int depth, std::size_t guard = 10'000'000);

struct PingPongArc {
    double center = 0.0;
    double radius = 0.0;
};

struct PingPongCertificate {
    bool certified = false;
    double epsilon = 0.0;
    std::vector<double> deltas;           // attractor radii arctan(l^-2 cot(e/2))
    std::vector<PingPongArc> plus_arcs;   // around theta_i
    std::vector<PingPongArc> minus_arcs;  // around theta_i + pi/2
    double min_gap = 0.0;                 // smallest pairwise arc separation
    std::pair<int, int> offending = {-1, -1};
    std::string refusal;

    // Implied random-walk entropy for the uniform measure when certified.
    double h_rw() const;
};

// Certifies that R_{theta_i} diag(lambda_i, 1/lambda_i) R_{-theta_i} freely
// generate a free semigroup, via disjoint attractor/repeller arcs.
PingPongCertificate pingpong_certify(
    const std::vector<std::pair<double, double>>& elements, double epsilon);

} // namespace furst
