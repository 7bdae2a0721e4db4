#include "furstenberg/walk.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

namespace furst {

namespace {

// Runs `count` jobs split into per-worker contiguous blocks, one seeded
// stream per worker; results land in pre-sized slots so the reduction order
// is fixed regardless of scheduling.
template <typename Fn>
void run_workers(int workers, int count, std::uint64_t seed, Fn&& body) {
    if (workers < 1) workers = 1;
    if (workers == 1) {
        Rng rng = Rng::stream(seed, 0);
        for (int i = 0; i < count; ++i) body(i, rng);
        return;
    }
    int per = count / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        int lo = w * per;
        int hi = (w == workers - 1) ? count : lo + per;
        pool.emplace_back([&, w, lo, hi] {
            Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(w));
            for (int i = lo; i < hi; ++i) body(i, rng);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace

double walk_log_norm(const MeasureSpec& spec, int steps, Rng& rng) {
    ScaledProduct prod;
    for (int i = 0; i < steps; ++i) prod.right_multiply(spec.sample(rng));
    return prod.log_norm();
}

LyapunovEstimate estimate_lyapunov(const MeasureSpec& spec, int steps,
                                   int samples, std::uint64_t seed,
                                   int workers) {
    if (steps < 1 || samples < 1)
        throw std::invalid_argument("estimate_lyapunov: positive budgets");

    std::vector<double> per_sample(samples, 0.0);
    run_workers(workers, samples, seed, [&](int i, Rng& rng) {
        per_sample[i] = walk_log_norm(spec, steps, rng) /
                        static_cast<double>(steps);
    });

    LyapunovEstimate out;
    out.steps_per_sample = steps;
    out.samples = samples;
    out.seed = seed;
    out.workers = workers;
    double mean = std::accumulate(per_sample.begin(), per_sample.end(), 0.0) /
                  samples;
    double var = 0.0;
    for (double v : per_sample) var += (v - mean) * (v - mean);
    var = samples > 1 ? var / (samples - 1) : 0.0;
    out.chi_hat = mean;
    out.std_error = std::sqrt(var / samples);
    // absolute floor guards deterministic walks whose sample variance is 0
    out.positive = out.chi_hat > 3.0 * out.std_error + 1e-12;
    return out;
}

StationaryEstimate estimate_stationary(const MeasureSpec& spec, int burn_in,
                                       int samples, std::uint64_t seed,
                                       int workers) {
    if (burn_in < 200)
        throw std::invalid_argument("estimate_stationary: burn_in >= 200");
    if (samples < 1)
        throw std::invalid_argument("estimate_stationary: samples >= 1");

    std::vector<double> angles(samples, -1.0);
    std::vector<int> aborted_flags(samples, 0);
    run_workers(workers, samples, seed, [&](int i, Rng& rng) {
        long length = burn_in;
        for (int attempt = 0; attempt < 10; ++attempt) {
            ScaledProduct prod;
            for (long s = 0; s < length; ++s)
                prod.right_multiply(spec.sample(rng));
            try {
                angles[i] = prod.cartan().b_plus().angle;
                return;
            } catch (const NearRotation&) {
                length += length / 2; // retry with a longer product
            }
        }
        aborted_flags[i] = 1;
    });

    std::vector<CircleMeasure::Atom> atoms;
    atoms.reserve(samples);
    int aborted = 0;
    for (int i = 0; i < samples; ++i) {
        if (aborted_flags[i]) { ++aborted; continue; }
        atoms.push_back({angles[i], 1.0});
    }
    if (atoms.empty())
        throw NearRotation("estimate_stationary: every sample aborted "
                           "(support looks like a compact subgroup)");
    double w = 1.0 / static_cast<double>(atoms.size());
    for (auto& a : atoms) a.weight = w;

    StationaryEstimate out;
    out.measure = CircleMeasure::from_atoms(std::move(atoms));
    out.burn_in = burn_in;
    out.samples = samples;
    out.seed = seed;
    out.workers = workers;
    out.aborted = aborted;
    return out;
}

CircleMeasure push_forward(const CircleMeasure& atomic,
                           const MeasureSpec& spec) {
    if (!atomic.is_atomic())
        throw std::invalid_argument("push_forward: atomic measure required");
    std::vector<CircleMeasure::Atom> out;
    out.reserve(atomic.atoms().size() * spec.size());
    for (std::size_t k = 0; k < spec.size(); ++k) {
        const GroupElement& g = spec.cached()[k];
        double w = spec.weight_as_double(k);
        for (const auto& a : atomic.atoms())
            out.push_back({act(g, ProjectivePoint(a.angle)).angle,
                           w * a.weight});
    }
    // Renormalize the tiny floating drift so the constructor invariant holds.
    double mass = 0.0;
    for (const auto& a : out) mass += a.weight;
    for (auto& a : out) a.weight /= mass;
    return CircleMeasure::from_atoms(std::move(out));
}

StoppedWalk stopping_time_walk(const MeasureSpec& spec, ProjectivePoint v,
                               double big_p, Rng& rng, long cap) {
    if (!(big_p > 0))
        throw std::invalid_argument("stopping_time_walk: P > 0 required");
    StoppedWalk out;
    out.flagged_low_p = big_p <= spec.max_operator_norm();

    const double log_p = std::log(big_p);
    double wx = std::cos(v.angle), wy = std::sin(v.angle);
    double wlog = 0.0;
    double thresh_sq = std::exp(2.0 * log_p); // ||w||^2 trigger, scale-adjusted
    ScaledProduct prod;
    for (long n = 1; n <= cap; ++n) {
        const GroupElement& g = spec.sample(rng);
        prod.right_multiply(g);
        // w_n = g^T w_{n-1} tracks (gamma_1...gamma_n)^T v.
        double nx = g.m11 * wx + g.m21 * wy;
        double ny = g.m12 * wx + g.m22 * wy;
        wx = nx;
        wy = ny;
        if ((n & 31) == 0) {
            double s = std::hypot(wx, wy);
            wx /= s;
            wy /= s;
            wlog += std::log(s);
            thresh_sq = std::exp(2.0 * (log_p - wlog));
        }
        if (wx * wx + wy * wy >= thresh_sq) {
            out.tau = n;
            out.product = prod;
            return out;
        }
    }
    throw StoppingTimeOverflow("stopping_time_walk: no stop within " +
                               std::to_string(cap) + " steps");
}

StoppedWalk stopping_time_walk(const MeasureSpec& spec, ProjectivePoint v,
                               double big_p, std::uint64_t seed, long cap) {
    Rng rng = Rng::stream(seed, 0);
    return stopping_time_walk(spec, v, big_p, rng, cap);
}

namespace {

// Direction of (gamma_1...gamma_tau)^T v for one stopped walk.
double stopped_direction(const MeasureSpec& spec, double v_angle, double big_p,
                         Rng& rng, long cap) {
    const double log_p = std::log(big_p);
    double wx = std::cos(v_angle), wy = std::sin(v_angle);
    double wlog = 0.0;
    double thresh_sq = std::exp(2.0 * log_p);
    for (long n = 1; n <= cap; ++n) {
        const GroupElement& g = spec.sample(rng);
        double nx = g.m11 * wx + g.m21 * wy;
        double ny = g.m12 * wx + g.m22 * wy;
        wx = nx;
        wy = ny;
        if ((n & 31) == 0) {
            double s = std::hypot(wx, wy);
            wx /= s;
            wy /= s;
            wlog += std::log(s);
            thresh_sq = std::exp(2.0 * (log_p - wlog));
        }
        if (wx * wx + wy * wy >= thresh_sq)
            return wrap_angle(std::atan2(wy, wx));
    }
    throw StoppingTimeOverflow("renewal: no stop within cap");
}

double max_pairwise_w1(const std::vector<CircleMeasure>& laws) {
    double best = 0.0;
    for (std::size_t i = 0; i < laws.size(); ++i)
        for (std::size_t j = i + 1; j < laws.size(); ++j)
            best = std::max(best, wasserstein1(laws[i], laws[j]));
    return best;
}

CircleMeasure empirical_from_angles(const std::vector<double>& angles) {
    std::vector<CircleMeasure::Atom> atoms;
    atoms.reserve(angles.size());
    double w = 1.0 / static_cast<double>(angles.size());
    for (double a : angles) atoms.push_back({a, w});
    return CircleMeasure::from_atoms(std::move(atoms));
}

} // namespace

RenewalTable renewal_experiment(const MeasureSpec& spec,
                                const std::vector<double>& v_grid,
                                const std::vector<double>& p_levels, int runs,
                                std::uint64_t seed, int workers) {
    if (v_grid.size() < 8)
        throw std::invalid_argument("renewal_experiment: need >= 8 grid points");
    if (p_levels.size() < 2)
        throw std::invalid_argument("renewal_experiment: need >= 2 P levels");
    if (runs < 1000)
        throw std::invalid_argument("renewal_experiment: runs >= 1000");

    RenewalTable out;
    out.v_grid = v_grid;
    out.p_levels = p_levels;

    const std::size_t nv = v_grid.size(), np = p_levels.size();
    const int jobs = static_cast<int>(nv * np);
    std::vector<std::vector<double>> angle_table(nv * np);
    // One worker stream per cell keeps cells independent and deterministic.
    run_workers(std::min(workers, jobs), jobs, seed, [&](int cell, Rng&) {
        Rng rng = Rng::stream(seed ^ 0x9e3779b97f4a7c15ULL,
                              static_cast<std::uint64_t>(cell));
        std::size_t vi = static_cast<std::size_t>(cell) / np;
        std::size_t pj = static_cast<std::size_t>(cell) % np;
        std::vector<double> angles(runs);
        for (int r = 0; r < runs; ++r)
            angles[r] =
                stopped_direction(spec, v_grid[vi], p_levels[pj], rng,
                                  10'000'000L);
        angle_table[cell] = std::move(angles);
    });

    for (std::size_t vi = 0; vi < nv; ++vi) {
        for (std::size_t pj = 0; pj < np; ++pj) {
            RenewalCell cell;
            cell.v_angle = v_grid[vi];
            cell.big_p = p_levels[pj];
            cell.law = empirical_from_angles(angle_table[vi * np + pj]);
            out.cells.push_back(std::move(cell));
        }
    }

    for (std::size_t pj = 0; pj < np; ++pj) {
        std::vector<CircleMeasure> laws;
        laws.reserve(nv);
        for (std::size_t vi = 0; vi < nv; ++vi)
            laws.push_back(out.cell(vi, pj).law);
        out.uniformity.push_back(max_pairwise_w1(laws));
    }

    // Batch replicas give a standard error for the first-vs-last comparison.
    const int batches = 4;
    std::vector<double> diffs;
    int bsize = runs / batches;
    if (bsize >= 50) {
        for (int b = 0; b < batches; ++b) {
            std::vector<CircleMeasure> first_laws, last_laws;
            for (std::size_t vi = 0; vi < nv; ++vi) {
                const auto& a_first = angle_table[vi * np + 0];
                const auto& a_last = angle_table[vi * np + (np - 1)];
                std::vector<double> fb(a_first.begin() + b * bsize,
                                       a_first.begin() + (b + 1) * bsize);
                std::vector<double> lb(a_last.begin() + b * bsize,
                                       a_last.begin() + (b + 1) * bsize);
                first_laws.push_back(empirical_from_angles(fb));
                last_laws.push_back(empirical_from_angles(lb));
            }
            diffs.push_back(max_pairwise_w1(first_laws) -
                            max_pairwise_w1(last_laws));
        }
        double mean = std::accumulate(diffs.begin(), diffs.end(), 0.0) /
                      diffs.size();
        double var = 0.0;
        for (double d : diffs) var += (d - mean) * (d - mean);
        var /= (diffs.size() - 1);
        out.first_vs_last_se = std::sqrt(var / diffs.size());
    }
    out.decreased = out.uniformity.back() <
                    out.uniformity.front() + 3.0 * out.first_vs_last_se;
    return out;
}

CircleMeasure renewal_from_group_element(const MeasureSpec& spec,
                                         const GroupElement& a, double big_p,
                                         int runs, std::uint64_t seed) {
    std::vector<double> angles(runs);
    const double threshold = std::log(big_p) + std::log(a.operator_norm());
    Rng rng = Rng::stream(seed, 0);
    for (int r = 0; r < runs; ++r) {
        ScaledProduct prod(a);
        long n = 0;
        while (prod.log_norm() < threshold) {
            prod.right_multiply(spec.sample(rng));
            if (++n > 10'000'000L)
                throw StoppingTimeOverflow("renewal_from_group_element");
        }
        // b-(a gamma_1...gamma_tau)^perp = theta2 of the Cartan form.
        angles[r] = prod.cartan().theta2;
    }
    return empirical_from_angles(angles);
}

HolderFit holder_probe(const CircleMeasure& measure,
                       const std::vector<double>& radii) {
    if (radii.size() < 4)
        throw std::invalid_argument("holder_probe: need >= 4 radii");
    double lo = *std::min_element(radii.begin(), radii.end());
    double hi = *std::max_element(radii.begin(), radii.end());
    if (!(lo > 0) || hi / lo < 100.0)
        throw std::invalid_argument("holder_probe: radii must span >= 2 decades");

    HolderFit fit;
    fit.radii = radii;
    std::sort(fit.radii.begin(), fit.radii.end());
    for (double r : fit.radii)
        fit.masses.push_back(arc_mass_max(measure, 2.0 * r).max_mass);

    double span = std::fabs(std::log(fit.masses.back()) -
                            std::log(fit.masses.front()));
    if (span < 1e-6) {
        fit.degenerate = true;
        fit.delta_fit = 0.0;
        fit.c_fit = fit.masses.front();
        return fit;
    }

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(fit.radii.size());
    for (std::size_t i = 0; i < fit.radii.size(); ++i) {
        double x = std::log(fit.radii[i]);
        double y = std::log(fit.masses[i]);
        sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    fit.delta_fit = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    fit.c_fit = std::exp((sy - fit.delta_fit * sx) / n);
    return fit;
}

LargeDeviationProbe large_deviation_probe(const MeasureSpec& spec, int n,
                                          double eps, int runs,
                                          std::uint64_t seed, int workers) {
    if (runs < 1000)
        throw std::invalid_argument("large_deviation_probe: runs >= 1000");

    LargeDeviationProbe out;
    auto chi = estimate_lyapunov(spec, std::max(1000, 4 * n), 200, seed ^ 1,
                                 workers);
    out.chi_hat = chi.chi_hat;
    if (!chi.positive) {
        out.applicable = false;
        return out;
    }

    std::vector<int> exceed(runs, 0);
    run_workers(workers, runs, seed, [&](int i, Rng& rng) {
        double log_norm = walk_log_norm(spec, n, rng);
        exceed[i] =
            std::fabs(n * out.chi_hat - log_norm) > eps * n ? 1 : 0;
    });
    double hits = std::accumulate(exceed.begin(), exceed.end(), 0);
    out.rate = hits / runs;
    out.std_error = std::sqrt(std::max(out.rate * (1 - out.rate), 1.0 / runs) /
                              runs);
    return out;
}

} // namespace furst
