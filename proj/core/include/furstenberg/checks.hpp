#pragma once

#include "furstenberg/rng.hpp"
#include "furstenberg/sl2.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace furst {

struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Monte-Carlo slacks and fit thresholds used across the verification suite,
// kept in one place so every tolerance is auditable.
namespace check_constants {
inline constexpr double kMcSlackSigmas = 3.0;
inline constexpr double kWideMcSlackSigmas = 5.0;
inline constexpr double kEmpiricalW1Sigmas = 4.0;
inline constexpr double kCubicResidualSlopeMin = 2.5;
inline constexpr double kEntropyGapFactor = 2.0;      // 2 e^{-a^2/4}
inline constexpr double kEntropyPlugInTolerance = 0.05;
inline constexpr double kHaarRatioSpreadMax = 4.0;
} // namespace check_constants

struct CheckReport {
    std::string name;
    double observed = 0.0;
    double bound_or_target = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    bool applicable = true;
    long runs = 0;
    std::uint64_t seed = 0;
    std::string notes;
};

struct TruncatedGaussianSpec {
    double r = 1.0; // scale
    double a = 1.0; // truncation radius in units of r
};

struct TruncatedGaussianStats {
    double entropy = 0.0;        // differential entropy of eta_{r,a} on R^3
    double trace_variance = 0.0; // = g(a) r^2
    double g_a = 0.0;            // exact radial-moment ratio I4/I2 in (0,3)
};

// Radial quadrature (closed-form angular part) of the truncated spherical
// Gaussian with density proportional to exp(-|x|^2/(2r^2)) on |x| <= a r.
TruncatedGaussianStats truncated_gaussian_stats(const TruncatedGaussianSpec& s);

// Closed-form martingale lower-tail bound
// P[X_1+...+X_n <= nc] <= ((a/c)^{c/b} ((b-a)/(b-c))^{1-c/b})^n.
double cramer_bound(double a, double b, double c, int n);

// Decay constant for the b = 1, c = a/2 specialization: (1 - log 2)/2.
double cramer_corollary_constant();

// Monte-Carlo domination check of cramer_bound over randomized adapted
// Bernoulli families.
std::vector<CheckReport> cramer_mc_check(int configs, int runs,
                                         std::uint64_t seed);

struct HaarVolume {
    double volume = 0.0;      // m~(K_u)
    double ratio_to_u2 = 0.0; // volume / u^2
    double std_error = 0.0;
    double kappa = 0.0;       // Iwasawa-chart normalization constant
};

// Normalization constant of the Haar measure kappa/y^2 dx dy dtheta pinned
// by d m~ / d(m o log) = 1 at the identity (Richardson-extrapolated
// Monte-Carlo chart-volume matching).
double haar_kappa(long mc_points, std::uint64_t seed);

// Monte-Carlo m~({ ||g|| <= u }) inside the bounding box y in [u^-2, u^2],
// |x| <= u sqrt(y).
HaarVolume haar_ball_volume(double u, long mc_points, std::uint64_t seed,
                            double kappa = 0.0);

// Iwasawa coordinates (x, y, theta) of a positive-determinant 2x2 matrix.
struct IwasawaCoords {
    double x = 0.0;
    double y = 1.0;
    double theta = 0.0;
};
IwasawaCoords iwasawa_coordinates(const GroupElement& g);
GroupElement from_iwasawa(const IwasawaCoords& c);

using LieSampler = std::function<LieVector(double scale, Rng&)>;

struct VartAdditivityResult {
    std::vector<double> eps_levels;
    std::vector<double> residuals;
    double slope = 0.0;
    bool pass = false;
};

// Tr var_{h0}[h g] vs Tr var_{h0}[h] + Tr var_id[g] with h = h0 exp(X),
// g = exp(Y); residual measured at each eps with a paired estimator and the
// log-log slope fitted (theory: cubic or better in eps).
VartAdditivityResult vart_additivity_check(const LieSampler& h_sampler,
                                           const LieSampler& g_sampler,
                                           const GroupElement& h0,
                                           const std::vector<double>& eps_levels,
                                           int runs, std::uint64_t seed);

struct EntropyVarianceResult {
    double entropy = 0.0;        // plug-in estimate w.r.t. the Haar measure
    double max_entropy_bound = 0.0;
    double gap = 0.0;            // bound - entropy
    double bin_correction = 0.0;
    bool pass = false;
    bool degenerate = false;
};

// H(g) <= (3/2) log((2 pi e/3) Tr var) checked with a histogram plug-in
// estimator in the log chart, corrected by the Haar density.
EntropyVarianceResult entropy_variance_inequality_check(
    const std::function<GroupElement(Rng&)>& sampler, double eps, int grid,
    int runs, std::uint64_t seed);

// Full analysis-check battery (fixtures documented inline); the suite driver
// fails iff some applicable report fails.
std::vector<CheckReport> run_all_checks(std::uint64_t seed);

} // namespace furst
