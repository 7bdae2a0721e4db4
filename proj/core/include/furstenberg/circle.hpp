#pragma once

#include <cstddef>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace furst {

struct GridMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDefaultGridSize = 1 << 14;

// Wrapped heat kernel d^k/dy^k eta~_y sampled on a uniform grid over [0,pi).
// Closed form: d^k/dy^k eta_y(x) = 2^-k y^-k He_2k(x/sqrt(y)) eta_y(x), then
// wrapped by lattice summation over x + j*pi.
struct DerivativeKernel {
    int order = 0;         // k
    double bandwidth = 0.; // y
    std::vector<double> samples;
    bool flat = false;     // k = 0 kernel indistinguishable from uniform

    std::size_t size() const { return samples.size(); }
};

// Shared read-mostly cache keyed by (k, y, N); safe for concurrent lookup.
std::shared_ptr<const DerivativeKernel> heat_kernel(int order, double bandwidth,
                                                    std::size_t grid_size);

// Probability measure on R/piZ: a finite atom list or a grid density with
// 2^m bins of width pi/N (samples at bin centers j*pi/N).
class CircleMeasure {
public:
    struct Atom {
        double angle;  // in [0, pi)
        double weight; // >= 0
    };

    static CircleMeasure from_atoms(std::vector<Atom> atoms);
    static CircleMeasure dirac(double angle) {
        return from_atoms({{angle, 1.0}});
    }
    static CircleMeasure from_grid(std::vector<double> density);
    static CircleMeasure uniform(std::size_t n = kDefaultGridSize);
    // Wrapped Gaussian N(center, sigma^2) as a grid measure.
    static CircleMeasure wrapped_gaussian(double center, double sigma,
                                          std::size_t n = kDefaultGridSize);

    bool is_atomic() const { return std::holds_alternative<Atoms>(rep_); }
    const std::vector<Atom>& atoms() const { return std::get<Atoms>(rep_).v; }
    const std::vector<double>& grid() const { return std::get<Grid>(rep_).density; }
    std::size_t grid_size() const { return std::get<Grid>(rep_).density.size(); }

    double total_mass() const;

    // Density samples on an N-point grid (atoms splat across the two nearest
    // bin centers, mass- and mean-preserving).
    std::vector<double> to_grid(std::size_t n) const;

    void save_csv(std::ostream& os) const;
    static CircleMeasure load_csv(std::istream& is);

private:
    struct Atoms { std::vector<Atom> v; };
    struct Grid { std::vector<double> density; };
    std::variant<Atoms, Grid> rep_;
};

// Circular convolution (density of the sum mod pi); output integral equals
// the product of input integrals.
std::vector<double> convolve(const std::vector<double>& a,
                             const std::vector<double>& b);
std::vector<double> convolve(const CircleMeasure& m, const DerivativeKernel& k);

// L1 norm of a grid function: (pi/N) * sum |f_j|.
double grid_l1(const std::vector<double>& f);
double grid_integral(const std::vector<double>& f);

// Detail of lambda around scale r: r^2 sqrt(pi e/2) ||lambda * eta~'_{r^2}||_1.
double detail(const CircleMeasure& lambda, double r,
              std::size_t grid_size = kDefaultGridSize);

// Order-k detail: r^{2k} (pi e/2)^{k/2} ||lambda * d^k_y eta~_y|_{y=kr^2}||_1.
double order_k_detail(const CircleMeasure& lambda, double r, int k,
                      std::size_t grid_size = kDefaultGridSize);

// Exact circular 1-Wasserstein distance (ground metric = arc length on a
// circle of circumference pi), via the rotation-of-CDF reduction: the
// optimal shift is a Lebesgue median of F1 - F2.
double wasserstein1(const CircleMeasure& a, const CircleMeasure& b);

struct ArcMass {
    double max_mass = 0.0;
    double arg_arc_start = 0.0;
};

// Sliding maximum of closed-arc mass over all arcs of length t.
ArcMass arc_mass_max(const CircleMeasure& m, double t);

struct GapCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

// |s_r^(k)(a) - s_r^(k)(b)| <= sqrt(2/pi) W1(a,b)/r  (+1e-6 slack).
GapCheck detail_wasserstein_gap_check(const CircleMeasure& a,
                                      const CircleMeasure& b, double r, int k,
                                      std::size_t grid_size = kDefaultGridSize);

struct InductionCheck {
    double alpha = 0.0;     // measured max of s_r^(k) over [a, b]
    double lhs = 0.0;       // s_{a sqrt k}
    double rhs = 0.0;       // alpha k (2e/pi)^{(k-1)/2} + k! k a^2 b^-2
    bool holds = false;
};

// Order-k to detail induction bound, with alpha measured on a log grid of
// scales in [a, b].
InductionCheck order_k_to_detail_bound_check(const CircleMeasure& lambda,
                                             double a, double b, int k,
                                             std::size_t scale_samples = 17,
                                             std::size_t grid_size = kDefaultGridSize);

} // namespace furst
