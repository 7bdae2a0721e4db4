#include "furstenberg/circle.hpp"

#include "furstenberg/sl2.hpp" // kPi, wrap_angle

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>

namespace furst {

namespace {

// Compensated sum; the 1e-12 mass invariants must not drown in roundoff
// when 1e5 equal atom weights are added.
double kahan_sum_weights(const std::vector<CircleMeasure::Atom>& atoms) {
    double sum = 0.0, carry = 0.0;
    for (const auto& a : atoms) {
        double y = a.weight - carry;
        double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    return sum;
}

double kahan_sum(const std::vector<double>& v) {
    double sum = 0.0, carry = 0.0;
    for (double x : v) {
        double y = x - carry;
        double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    return sum;
}

constexpr double kPiE = kPi * 2.718281828459045235360287471352662498;

// ---------------------------------------------------------------- FFT ----

struct FftWorkspace {
    std::size_t n = 0;
    double* real = nullptr;
    fftw_complex* spec_a = nullptr;
    fftw_complex* spec_b = nullptr;
    fftw_plan fwd{};
    fftw_plan bwd{};

    explicit FftWorkspace(std::size_t size) : n(size) {
        real = fftw_alloc_real(n);
        spec_a = fftw_alloc_complex(n / 2 + 1);
        spec_b = fftw_alloc_complex(n / 2 + 1);
        fwd = fftw_plan_dft_r2c_1d(static_cast<int>(n), real, spec_a,
                                   FFTW_ESTIMATE);
        bwd = fftw_plan_dft_c2r_1d(static_cast<int>(n), spec_a, real,
                                   FFTW_ESTIMATE);
    }
    ~FftWorkspace() {
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
        fftw_free(real);
        fftw_free(spec_a);
        fftw_free(spec_b);
    }
};

std::mutex g_fft_mutex;
std::map<std::size_t, std::unique_ptr<FftWorkspace>>& fft_workspaces() {
    static std::map<std::size_t, std::unique_ptr<FftWorkspace>> ws;
    return ws;
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// ------------------------------------------------------------- kernels ----

// Probabilists' Hermite polynomial He_m(z) by recurrence.
double hermite(int m, double z) {
    double prev = 1.0, cur = z;
    if (m == 0) return prev;
    for (int i = 1; i < m; ++i) {
        double next = z * cur - i * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

struct KernelKey {
    int k;
    std::uint64_t y_bits;
    std::size_t n;
    bool operator<(const KernelKey& o) const {
        if (k != o.k) return k < o.k;
        if (y_bits != o.y_bits) return y_bits < o.y_bits;
        return n < o.n;
    }
};

std::mutex g_kernel_mutex;
std::map<KernelKey, std::shared_ptr<const DerivativeKernel>>& kernel_cache() {
    static std::map<KernelKey, std::shared_ptr<const DerivativeKernel>> c;
    return c;
}

} // namespace

std::shared_ptr<const DerivativeKernel> heat_kernel(int order, double bandwidth,
                                                    std::size_t grid_size) {
    if (!(bandwidth > 0.0) || bandwidth > 10.0)
        throw std::invalid_argument("heat_kernel: bandwidth out of (0, 10]");
    if (order < 0 || order > 12)
        throw std::invalid_argument("heat_kernel: order out of [0, 12]");
    if (grid_size < 256 || !is_power_of_two(grid_size))
        throw std::invalid_argument("heat_kernel: grid size must be 2^m >= 256");

    KernelKey key{order, 0, grid_size};
    static_assert(sizeof(double) == sizeof(std::uint64_t));
    std::memcpy(&key.y_bits, &bandwidth, sizeof(double));
    {
        std::lock_guard lock(g_kernel_mutex);
        auto it = kernel_cache().find(key);
        if (it != kernel_cache().end()) return it->second;
    }

    auto out = std::make_shared<DerivativeKernel>();
    out->order = order;
    out->bandwidth = bandwidth;
    out->samples.assign(grid_size, 0.0);

    const double y = bandwidth;
    const double sy = std::sqrt(y);
    const double h = kPi / static_cast<double>(grid_size);
    // Support cut in the z = x/sqrt(y) variable; widened with k so the
    // polynomial factor cannot resurrect the tail.
    const double z_max = 8.0 + 2.0 * std::sqrt(2.0 * order);
    const double x_max = z_max * sy;
    const long wrap = static_cast<long>(std::ceil(x_max / kPi)) + 1;
    const double norm = 1.0 / std::sqrt(2.0 * kPi * y);
    const double deriv_scale =
        std::pow(2.0, -order) * std::pow(y, -static_cast<double>(order));

    for (std::size_t j = 0; j < grid_size; ++j) {
        double x = static_cast<double>(j) * h;
        double acc = 0.0;
        for (long m = -wrap; m <= wrap; ++m) {
            double u = x + static_cast<double>(m) * kPi;
            if (std::fabs(u) > x_max) continue;
            double z = u / sy;
            double gauss = norm * std::exp(-0.5 * z * z);
            acc += deriv_scale * hermite(2 * order, z) * gauss;
        }
        out->samples[j] = acc;
    }

    if (order == 0) {
        out->flat = true;
        for (double v : out->samples)
            if (std::fabs(v - 1.0 / kPi) > 1e-14) { out->flat = false; break; }
    } else {
        double integral = grid_integral(out->samples);
        double l1 = grid_l1(out->samples);
        if (l1 > 0 && std::fabs(integral) > 1e-8 * l1)
            throw std::logic_error("heat_kernel: derivative kernel has mass");
    }

    std::lock_guard lock(g_kernel_mutex);
    auto [it, inserted] = kernel_cache().emplace(key, std::move(out));
    return it->second;
}

// -------------------------------------------------------- CircleMeasure ----

CircleMeasure CircleMeasure::from_atoms(std::vector<Atom> atoms) {
    for (auto& a : atoms) {
        if (!(a.weight >= 0.0))
            throw std::invalid_argument("CircleMeasure: negative atom weight");
        a.angle = wrap_angle(a.angle);
    }
    double mass = kahan_sum_weights(atoms);
    if (std::fabs(mass - 1.0) > 1e-12)
        throw std::invalid_argument("CircleMeasure: total mass must be 1");
    CircleMeasure m;
    m.rep_ = Atoms{std::move(atoms)};
    return m;
}

CircleMeasure CircleMeasure::from_grid(std::vector<double> density) {
    if (!is_power_of_two(density.size()))
        throw std::invalid_argument("CircleMeasure: grid size must be 2^m");
    for (double& d : density) {
        if (d < 0.0) {
            if (d < -1e-12)
                throw std::invalid_argument("CircleMeasure: negative density");
            d = 0.0;
        }
    }
    double integral = kahan_sum(density) * kPi /
                      static_cast<double>(density.size());
    if (std::fabs(integral - 1.0) > 1e-12)
        throw std::invalid_argument("CircleMeasure: total mass must be 1");
    CircleMeasure m;
    m.rep_ = Grid{std::move(density)};
    return m;
}

CircleMeasure CircleMeasure::uniform(std::size_t n) {
    return from_grid(std::vector<double>(n, 1.0 / kPi));
}

CircleMeasure CircleMeasure::wrapped_gaussian(double center, double sigma,
                                              std::size_t n) {
    if (!(sigma > 0)) throw std::invalid_argument("wrapped_gaussian: sigma <= 0");
    std::vector<double> dens(n, 0.0);
    double h = kPi / static_cast<double>(n);
    double c = wrap_angle(center);
    long wrap = static_cast<long>(std::ceil(8.0 * sigma / kPi)) + 1;
    double norm = 1.0 / (sigma * std::sqrt(2.0 * kPi));
    for (std::size_t j = 0; j < n; ++j) {
        double x = static_cast<double>(j) * h;
        double acc = 0.0;
        for (long m = -wrap; m <= wrap; ++m) {
            double u = x - c + static_cast<double>(m) * kPi;
            double z = u / sigma;
            if (std::fabs(z) > 8.5) continue;
            acc += norm * std::exp(-0.5 * z * z);
        }
        dens[j] = acc;
    }
    double integral = 0.0;
    for (double d : dens) integral += d;
    integral *= h;
    for (double& d : dens) d /= integral;
    return from_grid(std::move(dens));
}

double CircleMeasure::total_mass() const {
    if (is_atomic()) return kahan_sum_weights(atoms());
    return grid_integral(grid());
}

std::vector<double> CircleMeasure::to_grid(std::size_t n) const {
    if (!is_atomic()) {
        if (grid_size() != n)
            throw GridMismatch("CircleMeasure: grid size mismatch");
        return grid();
    }
    std::vector<double> dens(n, 0.0);
    double h = kPi / static_cast<double>(n);
    for (const auto& a : atoms()) {
        double u = a.angle / h;
        auto j = static_cast<std::size_t>(u);
        if (j >= n) j = n - 1;
        double frac = u - static_cast<double>(j);
        dens[j] += a.weight * (1.0 - frac) / h;
        dens[(j + 1) % n] += a.weight * frac / h;
    }
    return dens;
}

void CircleMeasure::save_csv(std::ostream& os) const {
    char buf[64];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    if (is_atomic()) {
        os << "# circle_measure variant=atoms N=" << atoms().size()
           << " mass=" << fmt(total_mass()) << "\n";
        for (const auto& a : atoms())
            os << fmt(a.angle) << "," << fmt(a.weight) << "\n";
    } else {
        os << "# circle_measure variant=grid N=" << grid_size()
           << " mass=" << fmt(total_mass()) << "\n";
        for (std::size_t j = 0; j < grid_size(); ++j)
            os << j << "," << fmt(grid()[j]) << "\n";
    }
}

CircleMeasure CircleMeasure::load_csv(std::istream& is) {
    // Leading comment lines (e.g. run provenance) are skipped; the variant
    // header must appear before any data row.
    std::string header;
    while (std::getline(is, header)) {
        if (header.rfind("# circle_measure", 0) == 0) break;
        if (header.empty() || header[0] == '#') continue;
        throw std::invalid_argument("CircleMeasure: missing csv header");
    }
    if (header.rfind("# circle_measure", 0) != 0)
        throw std::invalid_argument("CircleMeasure: missing csv header");
    bool atomic = header.find("variant=atoms") != std::string::npos;
    if (!atomic && header.find("variant=grid") == std::string::npos)
        throw std::invalid_argument("CircleMeasure: unknown variant");

    std::vector<Atom> atoms;
    std::vector<std::pair<std::size_t, double>> cells;
    std::string line;
    std::size_t max_index = 0;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::invalid_argument("CircleMeasure: malformed csv row");
        std::string a = line.substr(0, comma), b = line.substr(comma + 1);
        if (atomic) {
            atoms.push_back({std::stod(a), std::stod(b)});
        } else {
            std::size_t idx = std::stoul(a);
            max_index = std::max(max_index, idx);
            cells.emplace_back(idx, std::stod(b));
        }
    }
    if (atomic) return from_atoms(std::move(atoms));
    std::vector<double> dens(max_index + 1, 0.0);
    if (!is_power_of_two(dens.size()))
        throw std::invalid_argument("CircleMeasure: grid rows must cover 2^m bins");
    for (auto& [idx, d] : cells) dens[idx] = d;
    return from_grid(std::move(dens));
}

// ----------------------------------------------------------- convolution ----

double grid_l1(const std::vector<double>& f) {
    double s = 0.0;
    for (double v : f) s += std::fabs(v);
    return s * kPi / static_cast<double>(f.size());
}

double grid_integral(const std::vector<double>& f) {
    double s = 0.0;
    for (double v : f) s += v;
    return s * kPi / static_cast<double>(f.size());
}

std::vector<double> convolve(const std::vector<double>& a,
                             const std::vector<double>& b) {
    if (a.size() != b.size())
        throw GridMismatch("convolve: grid size mismatch");
    const std::size_t n = a.size();
    if (!is_power_of_two(n))
        throw GridMismatch("convolve: grid size must be 2^m");

    std::lock_guard lock(g_fft_mutex);
    auto& ws_map = fft_workspaces();
    auto it = ws_map.find(n);
    if (it == ws_map.end())
        it = ws_map.emplace(n, std::make_unique<FftWorkspace>(n)).first;
    FftWorkspace& ws = *it->second;

    std::copy(a.begin(), a.end(), ws.real);
    fftw_execute_dft_r2c(ws.fwd, ws.real, ws.spec_b);
    std::swap(ws.spec_a, ws.spec_b); // keep A in spec_b after next transform
    std::copy(b.begin(), b.end(), ws.real);
    fftw_execute_dft_r2c(ws.fwd, ws.real, ws.spec_b);

    // (f*g)(x) = int f(t) g(x-t) dt: spectra multiply with a bin-width
    // factor, and FFTW's unnormalized inverse contributes 1/n.
    const double scale = kPi / static_cast<double>(n) / static_cast<double>(n);
    for (std::size_t j = 0; j < n / 2 + 1; ++j) {
        double re = ws.spec_a[j][0] * ws.spec_b[j][0] -
                    ws.spec_a[j][1] * ws.spec_b[j][1];
        double im = ws.spec_a[j][0] * ws.spec_b[j][1] +
                    ws.spec_a[j][1] * ws.spec_b[j][0];
        ws.spec_a[j][0] = re * scale;
        ws.spec_a[j][1] = im * scale;
    }
    fftw_execute_dft_c2r(ws.bwd, ws.spec_a, ws.real);
    return std::vector<double>(ws.real, ws.real + n);
}

std::vector<double> convolve(const CircleMeasure& m, const DerivativeKernel& k) {
    return convolve(m.to_grid(k.size()), k.samples);
}

// ---------------------------------------------------------------- detail ----

double order_k_detail(const CircleMeasure& lambda, double r, int k,
                      std::size_t grid_size) {
    if (!(r > 0.0) || r > 1.0)
        throw std::invalid_argument("order_k_detail: r out of (0, 1]");
    if (k < 1 || k > 12)
        throw std::invalid_argument("order_k_detail: k out of [1, 12]");
    auto kernel = heat_kernel(k, static_cast<double>(k) * r * r, grid_size);
    double l1 = grid_l1(convolve(lambda, *kernel));
    return std::pow(r, 2 * k) * std::pow(kPiE / 2.0, k / 2.0) * l1;
}

double detail(const CircleMeasure& lambda, double r, std::size_t grid_size) {
    return order_k_detail(lambda, r, 1, grid_size);
}

// ------------------------------------------------------------ wasserstein ----

namespace {

// Affine segment of D = F_a - F_b over an interval of given length.
struct Segment {
    double length;
    double v0;
    double slope;
};

struct SortedMeasure {
    std::vector<std::pair<double, double>> atoms; // (position, weight), sorted
    const std::vector<double>* grid = nullptr;

    explicit SortedMeasure(const CircleMeasure& m) {
        if (m.is_atomic()) {
            atoms.reserve(m.atoms().size());
            for (const auto& a : m.atoms()) atoms.emplace_back(a.angle, a.weight);
            std::sort(atoms.begin(), atoms.end());
        } else {
            grid = &m.grid();
        }
    }

    void append_breakpoints(std::vector<double>& bp) const {
        if (grid) {
            std::size_t n = grid->size();
            double h = kPi / static_cast<double>(n);
            for (std::size_t j = 0; j <= n; ++j) {
                double x = (static_cast<double>(j) - 0.5) * h;
                if (x < 0) x += kPi;
                if (x < kPi) bp.push_back(x);
            }
        } else {
            for (const auto& [p, w] : atoms) bp.push_back(p);
        }
    }

    double density_at(double x) const {
        if (!grid) return 0.0;
        std::size_t n = grid->size();
        double h = kPi / static_cast<double>(n);
        auto j = static_cast<std::size_t>(std::floor(x / h + 0.5));
        return (*grid)[j % n];
    }
};

// Leftmost Lebesgue median of the value distribution of the segments:
// smallest c with |{x : D(x) <= c}| >= target.
double lebesgue_median(const std::vector<Segment>& segs, double target) {
    struct Event {
        double coord;
        double point_mass;
        double density_delta;
    };
    std::vector<Event> events;
    events.reserve(2 * segs.size());
    for (const auto& s : segs) {
        double v1 = s.v0 + s.slope * s.length;
        double lo = std::min(s.v0, v1), hi = std::max(s.v0, v1);
        if (hi - lo < 1e-300) {
            events.push_back({s.v0, s.length, 0.0});
        } else {
            double dens = s.length / (hi - lo);
            events.push_back({lo, 0.0, dens});
            events.push_back({hi, 0.0, -dens});
        }
    }
    std::sort(events.begin(), events.end(),
              [](const Event& x, const Event& y) { return x.coord < y.coord; });

    double g = 0.0, density = 0.0;
    double prev = events.empty() ? 0.0 : events.front().coord;
    for (std::size_t i = 0; i < events.size();) {
        double c = events[i].coord;
        if (density > 0.0 && c > prev) {
            double g_next = g + density * (c - prev);
            if (g_next >= target) return prev + (target - g) / density;
            g = g_next;
        }
        double point = 0.0, delta = 0.0;
        while (i < events.size() && events[i].coord == c) {
            point += events[i].point_mass;
            delta += events[i].density_delta;
            ++i;
        }
        g += point;
        if (g >= target) return c;
        density += delta;
        prev = c;
    }
    return prev;
}

} // namespace

double wasserstein1(const CircleMeasure& a, const CircleMeasure& b) {
    SortedMeasure sa(a), sb(b);

    std::vector<double> bp{0.0};
    sa.append_breakpoints(bp);
    sb.append_breakpoints(bp);
    std::sort(bp.begin(), bp.end());
    bp.erase(std::unique(bp.begin(), bp.end()), bp.end());

    // Affine segments of D(x) = F_a(x) - F_b(x), F cadlag from 0.
    std::vector<Segment> segs;
    segs.reserve(bp.size());
    double d = 0.0;
    std::size_t ia = 0, ib = 0;
    for (std::size_t i = 0; i < bp.size(); ++i) {
        double x = bp[i];
        while (ia < sa.atoms.size() && sa.atoms[ia].first == x)
            d += sa.atoms[ia++].second;
        while (ib < sb.atoms.size() && sb.atoms[ib].first == x)
            d -= sb.atoms[ib++].second;
        double next = (i + 1 < bp.size()) ? bp[i + 1] : kPi;
        double len = next - x;
        if (len <= 0) continue;
        double mid = x + len / 2;
        double slope = sa.density_at(mid) - sb.density_at(mid);
        segs.push_back({len, d, slope});
        d += slope * len;
    }

    double c_star = lebesgue_median(segs, kPi / 2.0);

    // Transport cost: integral of |D - c_star|.
    double cost = 0.0;
    for (const auto& s : segs) {
        double w0 = s.v0 - c_star;
        double w1 = s.v0 + s.slope * s.length - c_star;
        if (w0 * w1 >= 0.0) {
            cost += s.length * std::fabs(w0 + w1) / 2.0;
        } else {
            double t = -w0 / s.slope; // sign change, so slope != 0
            cost += std::fabs(w0) * t / 2.0 +
                    std::fabs(w1) * (s.length - t) / 2.0;
        }
    }
    return cost;
}

// --------------------------------------------------------------- arc mass ----

ArcMass arc_mass_max(const CircleMeasure& m, double t) {
    if (!(t > 0.0) || t >= kPi)
        throw std::invalid_argument("arc_mass_max: t out of (0, pi)");

    ArcMass best;
    if (m.is_atomic()) {
        auto atoms = m.atoms();
        std::sort(atoms.begin(), atoms.end(),
                  [](const auto& x, const auto& y) { return x.angle < y.angle; });
        const std::size_t n = atoms.size();
        if (n == 0) return best;
        // Closed arcs starting at atom positions dominate.
        for (std::size_t i = 0; i < n; ++i) {
            double start = atoms[i].angle;
            double mass = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                std::size_t j = (i + k) % n;
                double rel = atoms[j].angle - start;
                if (rel < 0) rel += kPi;
                if (rel <= t) mass += atoms[j].weight;
                else break;
            }
            if (mass > best.max_mass) {
                best.max_mass = mass;
                best.arg_arc_start = start;
            }
        }
        return best;
    }

    // Grid: mass(a) = I(a+t) - I(a) is piecewise linear in a; its maximum is
    // attained where a slope change occurs, i.e. when either endpoint hits a
    // bin boundary.
    const auto& dens = m.grid();
    const std::size_t n = dens.size();
    const double h = kPi / static_cast<double>(n);
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t j = 0; j < n; ++j) prefix[j + 1] = prefix[j] + dens[j] * h;
    const double total = prefix[n];

    // Bins are [(j-1/2)h, (j+1/2)h) around sample j; integral from 0 to x:
    auto integ = [&](double x) {
        x = std::fmod(x, kPi);
        if (x < 0) x += kPi;
        double u = x / h + 0.5; // in units of bins, offset by the half-bin
        auto j = static_cast<std::size_t>(u);
        double frac = u - static_cast<double>(j);
        // integral over [0, first half-bin) belongs to bin 0
        if (j == 0) return dens[0] * x;
        double base = prefix[j] - dens[0] * 0.5 * h;
        return base + dens[j % n] * frac * h;
    };
    auto mass_at = [&](double a) {
        double hi = a + t;
        if (hi < kPi) return integ(hi) - integ(a);
        return total - integ(a) + integ(hi - kPi);
    };
    for (std::size_t j = 0; j <= n; ++j) {
        double boundary = (static_cast<double>(j) - 0.5) * h;
        for (double cand : {boundary, boundary - t}) {
            double ccand = std::fmod(cand, kPi);
            if (ccand < 0) ccand += kPi;
            double mass = mass_at(ccand);
            if (mass > best.max_mass) {
                best.max_mass = mass;
                best.arg_arc_start = ccand;
            }
        }
    }
    return best;
}

// ------------------------------------------------------------ inequalities ----

GapCheck detail_wasserstein_gap_check(const CircleMeasure& a,
                                      const CircleMeasure& b, double r, int k,
                                      std::size_t grid_size) {
    GapCheck out;
    out.lhs = std::fabs(order_k_detail(a, r, k, grid_size) -
                        order_k_detail(b, r, k, grid_size));
    out.rhs = std::sqrt(2.0 / kPi) * wasserstein1(a, b) / r;
    out.holds = out.lhs <= out.rhs + 1e-6;
    return out;
}

InductionCheck order_k_to_detail_bound_check(const CircleMeasure& lambda,
                                             double a, double b, int k,
                                             std::size_t scale_samples,
                                             std::size_t grid_size) {
    if (!(a > 0) || !(a < b))
        throw std::invalid_argument("order_k_to_detail_bound_check: need 0 < a < b");
    if (k < 2) throw std::invalid_argument("order_k_to_detail_bound_check: k >= 2");

    InductionCheck out;
    for (std::size_t i = 0; i < scale_samples; ++i) {
        double f = static_cast<double>(i) / static_cast<double>(scale_samples - 1);
        double r = a * std::pow(b / a, f);
        out.alpha = std::max(out.alpha, order_k_detail(lambda, r, k, grid_size));
    }
    double kd = static_cast<double>(k);
    out.lhs = detail(lambda, a * std::sqrt(kd), grid_size);
    out.rhs = out.alpha * kd * std::pow(2.0 * 2.718281828459045 / kPi,
                                        (kd - 1.0) / 2.0) +
              std::tgamma(kd + 1.0) * kd * a * a / (b * b);
    out.holds = out.lhs <= out.rhs + 1e-6;
    return out;
}

} // namespace furst
