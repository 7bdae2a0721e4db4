#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "furstenberg/circle.hpp"
#include "furstenberg/rng.hpp"
#include "furstenberg/sl2.hpp"

#include <cmath>
#include <sstream>

using namespace furst;

namespace {

constexpr double kE = 2.718281828459045235360287471352662498;

// Atomic measure with all atoms snapped to grid points, so the grid
// representation is exact and inequalities can be tested at 1e-6.
CircleMeasure random_snapped_atoms(Rng& rng, std::size_t n,
                                   std::size_t grid = kDefaultGridSize) {
    std::vector<CircleMeasure::Atom> atoms;
    double h = kPi / static_cast<double>(grid);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double w = rng.uniform(0.1, 1.0);
        atoms.push_back(
            {h * static_cast<double>(rng.next_u64() % grid), w});
        total += w;
    }
    for (auto& a : atoms) a.weight /= total;
    return CircleMeasure::from_atoms(std::move(atoms));
}

CircleMeasure convolve_measures(const CircleMeasure& a, const CircleMeasure& b,
                                std::size_t grid = kDefaultGridSize) {
    return CircleMeasure::from_grid(convolve(a.to_grid(grid), b.to_grid(grid)));
}

CircleMeasure random_gaussian_mixture(Rng& rng) {
    int parts = 2 + static_cast<int>(rng.uniform() * 3);
    std::vector<double> dens(kDefaultGridSize, 0.0);
    double total_w = 0.0;
    for (int p = 0; p < parts; ++p) {
        double w = rng.uniform(0.2, 1.0);
        auto g = CircleMeasure::wrapped_gaussian(rng.uniform(0.0, kPi),
                                                 rng.uniform(0.01, 0.2));
        for (std::size_t j = 0; j < dens.size(); ++j) dens[j] += w * g.grid()[j];
        total_w += w;
    }
    for (auto& d : dens) d /= total_w;
    return CircleMeasure::from_grid(std::move(dens));
}

} // namespace

TEST_CASE("heat kernel: mass normalization and derivative closed forms") {
    auto k0 = heat_kernel(0, 1e-4, kDefaultGridSize);
    CHECK(grid_integral(k0->samples) == doctest::Approx(1.0).epsilon(1e-10));

    // detail of a point mass is 1: r^2 sqrt(pi e/2) ||eta~'_{r^2}||_1 = 1
    double r = 0.01;
    auto k1 = heat_kernel(1, r * r, kDefaultGridSize);
    double norm1 = r * r * std::sqrt(kPi * kE / 2.0) * grid_l1(k1->samples);
    CHECK(norm1 == doctest::Approx(1.0).epsilon(1e-4));

    // derivative kernels integrate to zero
    CHECK(std::fabs(grid_integral(k1->samples)) <=
          1e-8 * grid_l1(k1->samples));

    // k=2 kernel against a Richardson finite difference in y of k=0 kernels
    double y = 2 * r * r, h = y / 20.0;
    auto at = [&](double yy) { return heat_kernel(0, yy, kDefaultGridSize); };
    auto kp = at(y + h), km = at(y - h), kp2 = at(y + h / 2), km2 = at(y - h / 2);
    auto kc = at(y);
    auto k2 = heat_kernel(2, y, kDefaultGridSize);
    std::vector<double> fd(kDefaultGridSize);
    for (std::size_t j = 0; j < fd.size(); ++j) {
        double base = kc->samples[j];
        double d_h = (kp->samples[j] - 2 * base + km->samples[j]) / (h * h);
        double d_h2 = (kp2->samples[j] - 2 * base + km2->samples[j]) /
                      (h * h / 4.0);
        fd[j] = (4.0 * d_h2 - d_h) / 3.0;
    }
    CHECK(grid_l1(fd) == doctest::Approx(grid_l1(k2->samples)).epsilon(1e-4));
}

TEST_CASE("convolution: identity, annihilation, semigroup") {
    auto k0 = heat_kernel(0, 1e-4, kDefaultGridSize);
    auto delta = CircleMeasure::dirac(0.0);
    auto conv = convolve(delta, *k0);
    double sup = 0.0;
    for (std::size_t j = 0; j < conv.size(); ++j)
        sup = std::max(sup, std::fabs(conv[j] - k0->samples[j]));
    CHECK(sup <= 1e-9);

    auto k1 = heat_kernel(1, 1e-4, kDefaultGridSize);
    auto killed = convolve(CircleMeasure::uniform(), *k1);
    double sup2 = 0.0;
    for (double v : killed) sup2 = std::max(sup2, std::fabs(v));
    CHECK(sup2 <= 1e-10);

    double y1 = 1e-4, y2 = 1e-4;
    auto a = heat_kernel(0, y1, kDefaultGridSize);
    auto b = heat_kernel(0, y2, kDefaultGridSize);
    auto c = heat_kernel(0, y1 + y2, kDefaultGridSize);
    auto ab = convolve(a->samples, b->samples);
    double sup3 = 0.0;
    for (std::size_t j = 0; j < ab.size(); ++j)
        sup3 = std::max(sup3, std::fabs(ab[j] - c->samples[j]));
    CHECK(sup3 <= 1e-8);

    // mass multiplicativity
    Rng rng(17);
    auto m1 = random_snapped_atoms(rng, 7);
    auto m2 = random_snapped_atoms(rng, 5);
    auto prod = convolve(m1.to_grid(kDefaultGridSize),
                         m2.to_grid(kDefaultGridSize));
    CHECK(grid_integral(prod) == doctest::Approx(1.0).epsilon(1e-10));

    CHECK_THROWS_AS(convolve(std::vector<double>(1024, 0.0),
                             std::vector<double>(2048, 0.0)),
                    GridMismatch);
}

TEST_CASE("detail: uniform, wrapped gaussian, point mass") {
    CHECK(detail(CircleMeasure::uniform(), 0.05) <= 1e-10);
    CHECK(detail(CircleMeasure::uniform(), 0.3) <= 1e-10);

    double sigma = 0.02, r = 0.02;
    auto g = CircleMeasure::wrapped_gaussian(1.0, sigma);
    double expected = r * r / (r * r + sigma * sigma);
    CHECK(detail(g, r) == doctest::Approx(expected).epsilon(0.01));

    CHECK(detail(CircleMeasure::dirac(0.3), 0.01) ==
          doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("order-k detail: k=1 agreement, range, regression fixture") {
    Rng rng(21);
    for (int i = 0; i < 100; ++i) {
        auto m = random_snapped_atoms(rng, 3 + i % 10);
        double r = rng.uniform(0.01, 0.3);
        CHECK(std::fabs(order_k_detail(m, r, 1) - detail(m, r)) <= 1e-10);
    }

    // s_r^(k) <= 1 across orders
    for (int k = 1; k <= 12; ++k) {
        auto m = random_snapped_atoms(rng, 6);
        CHECK(order_k_detail(m, 0.05, k) <= 1.0 + 1e-6);
    }

    // point-mass order-2 value frozen from the quadrature oracle
    // r^4 (pi e/2) || d^2_y eta_y |_{y=2r^2} ||_1 = (pi e/32) E|He4(Z)|
    CHECK(order_k_detail(CircleMeasure::dirac(0.0), 0.01, 2) ==
          doctest::Approx(0.7473869).epsilon(1e-4));
}

TEST_CASE("order-k detail: submultiplicativity under convolution") {
    Rng rng(2024);
    for (int i = 0; i < 100; ++i) {
        int k = 2 + static_cast<int>(rng.uniform() * 5); // 2..6
        double r = rng.uniform(0.02, 0.15);
        std::vector<CircleMeasure> ms;
        for (int j = 0; j < k; ++j)
            ms.push_back(random_snapped_atoms(rng, 2 + i % 6));
        CircleMeasure conv = ms[0];
        double rhs = detail(ms[0], r);
        for (int j = 1; j < k; ++j) {
            conv = convolve_measures(conv, ms[j]);
            rhs *= detail(ms[j], r);
        }
        double lhs = order_k_detail(conv, r, k);
        CHECK(lhs <= rhs + 1e-6);
    }
}

TEST_CASE("wasserstein1: exact values") {
    auto d0 = CircleMeasure::dirac(0.0);
    CHECK(wasserstein1(d0, d0) == 0.0);
    CHECK(wasserstein1(d0, CircleMeasure::dirac(kPi / 4)) ==
          doctest::Approx(kPi / 4).epsilon(1e-12));
    // wrap-around shortcut
    CHECK(wasserstein1(d0, CircleMeasure::dirac(kPi - 0.1)) ==
          doctest::Approx(0.1).epsilon(1e-10));

    CHECK(wasserstein1(d0, CircleMeasure::uniform()) ==
          doctest::Approx(kPi / 4).epsilon(1e-12));

    // brute-force oracle on a 256-bin grid: a single source atom makes the
    // optimal coupling explicit
    const std::size_t n = 256;
    double direct = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double x = kPi * static_cast<double>(j) / n;
        direct += (1.0 / n) * circle_distance(0.0, x);
    }
    CHECK(wasserstein1(d0, CircleMeasure::uniform(n)) ==
          doctest::Approx(direct).epsilon(1e-10));

    // symmetry and rotation invariance on random atomic pairs
    Rng rng(5);
    for (int i = 0; i < 20; ++i) {
        auto a = random_snapped_atoms(rng, 4 + i % 5);
        auto b = random_snapped_atoms(rng, 3 + i % 4);
        double w = wasserstein1(a, b);
        CHECK(wasserstein1(b, a) == doctest::Approx(w).epsilon(1e-12));
        double shift = rng.uniform(0.0, kPi);
        auto rot = [&](const CircleMeasure& m) {
            std::vector<CircleMeasure::Atom> atoms;
            for (const auto& at : m.atoms())
                atoms.push_back({wrap_angle(at.angle + shift), at.weight});
            return CircleMeasure::from_atoms(std::move(atoms));
        };
        CHECK(wasserstein1(rot(a), rot(b)) == doctest::Approx(w).epsilon(1e-9));
    }
}

TEST_CASE("arc mass maximum") {
    CHECK(arc_mass_max(CircleMeasure::uniform(), kPi / 2).max_mass ==
          doctest::Approx(0.5).epsilon(1e-12));
    CHECK(arc_mass_max(CircleMeasure::dirac(1.1), 0.2).max_mass ==
          doctest::Approx(1.0));
    auto two = CircleMeasure::from_atoms({{0.0, 0.5}, {kPi / 2, 0.5}});
    CHECK(arc_mass_max(two, kPi / 4).max_mass == doctest::Approx(0.5));
    // closed arcs: length exactly pi/2 catches both atoms
    CHECK(arc_mass_max(two, kPi / 2).max_mass == doctest::Approx(1.0));
}

TEST_CASE("detail-Wasserstein gap bound with C = sqrt(2/pi)") {
    auto same = detail_wasserstein_gap_check(CircleMeasure::dirac(0.5),
                                             CircleMeasure::dirac(0.5), 0.1, 1);
    CHECK(same.lhs == doctest::Approx(0.0));
    CHECK(same.holds);

    // delta_0 vs delta_{0.001} at r = 0.05: rhs = sqrt(2/pi) * 0.001/0.05
    double h = kPi / kDefaultGridSize;
    double off = h * std::round(0.001 / h);
    auto gap = detail_wasserstein_gap_check(CircleMeasure::dirac(0.0),
                                            CircleMeasure::dirac(off), 0.05, 1);
    CHECK(gap.rhs == doctest::Approx(std::sqrt(2.0 / kPi) * off / 0.05)
                         .epsilon(1e-12));
    CHECK(gap.lhs <= gap.rhs + 1e-6);

    Rng rng(31);
    for (int i = 0; i < 100; ++i) {
        int k = 1 + i % 3;
        double r = rng.uniform(0.03, 0.2);
        auto a = random_snapped_atoms(rng, 2 + i % 7);
        auto b = random_snapped_atoms(rng, 2 + (i + 3) % 7);
        CHECK(detail_wasserstein_gap_check(a, b, r, k).holds);
    }
}

TEST_CASE("order-k to detail induction inequality") {
    auto g = CircleMeasure::wrapped_gaussian(0.7, 0.05);
    auto res = order_k_to_detail_bound_check(g, 0.001, 0.02, 2);
    CHECK(res.holds);

    auto vac = order_k_to_detail_bound_check(CircleMeasure::dirac(0.2), 0.005,
                                             0.05, 2);
    CHECK(vac.rhs > 1.0); // vacuous but still verified
    CHECK(vac.holds);

    Rng rng(47);
    for (int i = 0; i < 20; ++i) {
        auto mix = random_gaussian_mixture(rng);
        int k = 2 + i % 2;
        auto r = order_k_to_detail_bound_check(mix, 0.002, 0.02, k);
        CHECK(r.holds);
    }
}

TEST_CASE("grid refinement changes detail below 1e-4") {
    auto g14 = CircleMeasure::wrapped_gaussian(0.9, 0.02, 1 << 14);
    auto g15 = CircleMeasure::wrapped_gaussian(0.9, 0.02, 1 << 15);
    for (double r : {0.02, 0.05, 0.1}) {
        double d14 = detail(g14, r, 1 << 14);
        double d15 = detail(g15, r, 1 << 15);
        CHECK(std::fabs(d14 - d15) < 1e-4);
    }
    Rng rng(3);
    auto atoms = random_snapped_atoms(rng, 9, 1 << 14);
    CHECK(std::fabs(detail(atoms, 0.05, 1 << 14) -
                    detail(atoms, 0.05, 1 << 15)) < 1e-4);
}

TEST_CASE("detail of sums of small independent circle variables") {
    // n uniform steps in [-s, s]: s_r <= r^2/(r^2+sigma^2) + 5 s/r + 3 SE
    Rng rng(808);
    const int n_vars = 3000, replicas = 8, per = 20000;
    const double s = 0.004, r = 0.04;
    const double sigma2 = n_vars * s * s / 3.0;
    std::vector<double> values;
    for (int rep = 0; rep < replicas; ++rep) {
        std::vector<CircleMeasure::Atom> atoms;
        atoms.reserve(per);
        for (int i = 0; i < per; ++i) {
            double sum = 0.0;
            for (int k = 0; k < n_vars; ++k) sum += rng.uniform(-s, s);
            atoms.push_back({wrap_angle(sum), 1.0 / per});
        }
        values.push_back(detail(CircleMeasure::from_atoms(std::move(atoms)), r));
    }
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= replicas;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= (replicas - 1);
    double se = std::sqrt(var / replicas);
    double bound = r * r / (r * r + sigma2) + 5.0 * (s / r) + 3.0 * se;
    CHECK(mean <= bound);
}

TEST_CASE("csv round trip for both variants") {
    Rng rng(12);
    auto atoms = random_snapped_atoms(rng, 6);
    std::stringstream ss;
    atoms.save_csv(ss);
    auto back = CircleMeasure::load_csv(ss);
    REQUIRE(back.is_atomic());
    REQUIRE(back.atoms().size() == atoms.atoms().size());
    for (std::size_t i = 0; i < atoms.atoms().size(); ++i) {
        CHECK(back.atoms()[i].angle == atoms.atoms()[i].angle);
        CHECK(back.atoms()[i].weight == atoms.atoms()[i].weight);
    }

    auto grid = CircleMeasure::wrapped_gaussian(0.4, 0.1, 1 << 10);
    std::stringstream gs;
    grid.save_csv(gs);
    auto gback = CircleMeasure::load_csv(gs);
    REQUIRE(!gback.is_atomic());
    REQUIRE(gback.grid_size() == grid.grid_size());
    for (std::size_t j = 0; j < grid.grid_size(); ++j)
        CHECK(gback.grid()[j] == grid.grid()[j]);
}

TEST_CASE("measure invariants are enforced") {
    CHECK_THROWS(CircleMeasure::from_atoms({{0.1, 0.5}, {0.2, 0.6}}));
    CHECK_THROWS(CircleMeasure::from_grid(std::vector<double>(1000, 1.0)));
    std::vector<double> neg(1024, 1.0 / kPi);
    neg[0] = -1.0;
    CHECK_THROWS(CircleMeasure::from_grid(neg));
}
