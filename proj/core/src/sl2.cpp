#include "furstenberg/sl2.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace furst {

double wrap_angle(double x) {
    double y = std::fmod(x, kPi);
    if (y < 0) y += kPi;
    if (y >= kPi) y -= kPi; // fmod roundoff at the boundary
    return y;
}

double circle_distance(double x, double y) {
    double d = std::fabs(wrap_angle(x) - wrap_angle(y));
    return std::min(d, kPi - d);
}

double circle_signed_diff(double x, double y) {
    double d = std::fmod(x - y, kPi);
    if (d <= -kPi / 2) d += kPi;
    if (d > kPi / 2) d -= kPi;
    return d;
}

double LieVector::norm() const { return std::sqrt(c1 * c1 + c2 * c2 + c3 * c3); }

GroupElement::GroupElement(double a, double b, double c, double d)
    : m11(a), m12(b), m21(c), m22(d) {}

GroupElement GroupElement::rotation(double theta) {
    double c = std::cos(theta), s = std::sin(theta);
    return {c, -s, s, c};
}

GroupElement GroupElement::diagonal(double lambda) {
    return {lambda, 0.0, 0.0, 1.0 / lambda};
}

double GroupElement::operator_norm() const {
    // For det g = 1: smax^2 + smin^2 = F, smax*smin = 1, so
    // smax = (sqrt(F+2) + sqrt(F-2))/2. Scale-invariant form used so the
    // same code serves rescaled products: smax = sqrt(det) * smax(g/sqrt det).
    double d = std::fabs(det());
    double f = frobenius_sq();
    double a = std::sqrt(f + 2.0 * d);
    double b2 = f - 2.0 * d;
    double b = b2 > 0 ? std::sqrt(b2) : 0.0;
    return 0.5 * (a + b);
}

GroupElement GroupElement::operator*(const GroupElement& o) const {
    return {m11 * o.m11 + m12 * o.m21, m11 * o.m12 + m12 * o.m22,
            m21 * o.m11 + m22 * o.m21, m21 * o.m12 + m22 * o.m22};
}

void GroupElement::renormalize() {
    double d = det();
    if (d <= 0) return; // degenerate input, leave untouched
    double s = std::sqrt(d);
    if (std::fabs(d - 1.0) > 1e-13) {
        m11 /= s; m12 /= s; m21 /= s; m22 /= s;
    }
}

GroupElement CartanForm::reconstruct() const {
    return GroupElement::rotation(theta1) * GroupElement::diagonal(lambda) *
           GroupElement::rotation(-theta2);
}

namespace {

CartanForm cartan_core(const GroupElement& m, double d) {
    double f = m.frobenius_sq();
    double a = std::sqrt(f + 2.0 * d);
    double b2 = f - 2.0 * d;
    double b = b2 > 0 ? std::sqrt(b2) : 0.0;
    double smax = 0.5 * (a + b);
    double lambda = d > 0 ? smax / std::sqrt(d)
                          : std::numeric_limits<double>::infinity();
    if (lambda <= 1.0 + 1e-9)
        throw NearRotation("cartan_decompose: operator norm too close to 1");

    // m m^T = R_{t1} diag(smax^2, smin^2) R_{-t1}; the half-angle atan2
    // returns the eigendirection of the larger eigenvalue.
    double p = m.m11 * m.m11 + m.m12 * m.m12;
    double q = m.m11 * m.m21 + m.m12 * m.m22;
    double s = m.m21 * m.m21 + m.m22 * m.m22;
    double theta1 = 0.5 * std::atan2(2.0 * q, p - s);

    // m^T m = R_{t2} diag(smax^2, smin^2) R_{-t2}. Both angles live mod pi;
    // any residual sign mismatch is the PSL sign.
    double pt = m.m11 * m.m11 + m.m21 * m.m21;
    double qt = m.m11 * m.m12 + m.m21 * m.m22;
    double st = m.m12 * m.m12 + m.m22 * m.m22;
    double theta2 = 0.5 * std::atan2(2.0 * qt, pt - st);

    CartanForm out;
    out.lambda = lambda;
    out.theta1 = wrap_angle(theta1);
    out.theta2 = wrap_angle(theta2);
    return out;
}

} // namespace

CartanForm cartan_decompose_scaled(const GroupElement& m) {
    return cartan_core(m, std::fabs(m.det()));
}

CartanForm cartan_decompose(const GroupElement& g) {
    // The determinant-one contract is used instead of the computed
    // determinant: at operator norm 1e6 the float determinant of g carries
    // cancellation error of order ||g||^2 eps, which would pollute lambda.
    return cartan_core(g, 1.0);
}

ProjectivePoint act(const GroupElement& g, ProjectivePoint b) {
    double c = std::cos(b.angle), s = std::sin(b.angle);
    double vx = g.m11 * c + g.m12 * s;
    double vy = g.m21 * c + g.m22 * s;
    return ProjectivePoint(std::atan2(vy, vx));
}

double act_derivative(const GroupElement& g, double x) {
    double c = std::cos(x), s = std::sin(x);
    double vx = g.m11 * c + g.m12 * s;
    double vy = g.m21 * c + g.m22 * s;
    return g.det() / (vx * vx + vy * vy);
}

GroupElement exp_map(const LieVector& u) {
    // X = [[c1, c2-c3],[c2+c3, -c1]], X^2 = q I with q = c1^2 + c2^2 - c3^2.
    double q = u.c1 * u.c1 + u.c2 * u.c2 - u.c3 * u.c3;
    double cosh_part, sinc_part;
    if (q > 1e-14) {
        double w = std::sqrt(q);
        cosh_part = std::cosh(w);
        sinc_part = std::sinh(w) / w;
    } else if (q < -1e-14) {
        double w = std::sqrt(-q);
        cosh_part = std::cos(w);
        sinc_part = std::sin(w) / w;
    } else {
        cosh_part = 1.0 + q / 2.0;
        sinc_part = 1.0 + q / 6.0;
    }
    return {cosh_part + sinc_part * u.c1, sinc_part * (u.c2 - u.c3),
            sinc_part * (u.c2 + u.c3), cosh_part - sinc_part * u.c1};
}

LieVector log_map(const GroupElement& g) {
    // Principal logarithm; defined for trace > -2 (away from the cut locus).
    double half = (g.m11 + g.m22) / 2.0;
    if (half <= -1.0) throw OutsideLogDomain("log_map: trace <= -2");

    double factor; // X = factor * (g - half * I)
    if (half > 1.0 + 1e-14) {
        double t = std::acosh(half);
        factor = t / std::sinh(t);
    } else if (half < 1.0 - 1e-14) {
        double w = std::acos(half);
        if (w >= kPi - 1e-9)
            throw OutsideLogDomain("log_map: at the cut locus");
        factor = w / std::sin(w);
    } else {
        factor = 1.0; // (g - I)^2 = 0 when tr = 2
    }
    double x11 = factor * (g.m11 - half);
    double x12 = factor * g.m12;
    double x21 = factor * g.m21;
    return {x11, (x12 + x21) / 2.0, (x21 - x12) / 2.0};
}

double group_distance(const GroupElement& a, const GroupElement& b) {
    GroupElement m = a.inverse() * b;
    auto frob = [](double d11, double d12, double d21, double d22) {
        return std::sqrt(d11 * d11 + d12 * d12 + d21 * d21 + d22 * d22);
    };
    double minus = frob(1 - m.m11, -m.m12, -m.m21, 1 - m.m22);
    double plus = frob(1 + m.m11, m.m12, m.m21, 1 + m.m22);
    return std::min(minus, plus);
}

double rho_form(ProjectivePoint b, const LieVector& v) {
    double two_x = 2.0 * b.angle;
    return -v.c1 * std::sin(two_x) + v.c2 * std::cos(two_x) + v.c3;
}

RhoArcs rho_zero_arcs(const LieVector& v, double t) {
    double n = v.norm();
    if (n == 0.0) throw std::invalid_argument("rho_zero_arcs: zero vector");
    LieVector u = v.scaled(1.0 / n);

    // rho_x(u) = R cos(2x + psi) + c3 with R = sqrt(c1^2+c2^2).
    double big_r = std::hypot(u.c1, u.c2);
    double psi = std::atan2(u.c1, u.c2);

    RhoArcs out;
    if (big_r < std::fabs(u.c3)) {
        out.delta = std::fabs(u.c3) - big_r;
        return out; // no real eigenvectors, no zeros
    }
    double phase = std::acos(std::clamp(-u.c3 / big_r, -1.0, 1.0));
    double z1 = wrap_angle((phase - psi) / 2.0);
    double z2 = wrap_angle((-phase - psi) / 2.0);
    out.arcs.push_back({z1, t});
    if (circle_distance(z1, z2) > 1e-12) out.arcs.push_back({z2, t});

    // Realized floor of |rho| outside the open arcs: arc endpoints are the
    // candidates, plus the critical points of rho if they stay outside. The
    // boundary belongs to the complement; the tolerance keeps endpoint
    // candidates from self-excluding through rounding.
    auto excluded = [&](double x) {
        for (const auto& a : out.arcs)
            if (circle_distance(x, a.center) < a.length / 2.0 - 1e-12)
                return true;
        return false;
    };
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> candidates;
    for (const auto& a : out.arcs) {
        candidates.push_back(a.center + a.length / 2.0);
        candidates.push_back(a.center - a.length / 2.0);
    }
    candidates.push_back(wrap_angle(-psi / 2.0));          // rho = R + c3
    candidates.push_back(wrap_angle((kPi - psi) / 2.0));   // rho = -R + c3
    for (double x : candidates) {
        if (excluded(x)) continue;
        best = std::min(best, std::fabs(rho_form(ProjectivePoint(x), u)));
    }
    // Endpoints sit epsilon inside due to rounding; nudge outward.
    if (!std::isfinite(best)) {
        for (const auto& a : out.arcs) {
            for (double sgn : {1.0, -1.0}) {
                double x = a.center + sgn * (a.length / 2.0 + 1e-12);
                if (!excluded(x)) continue;
                best = std::min(best,
                                std::fabs(rho_form(ProjectivePoint(x), u)));
            }
        }
        if (!std::isfinite(best)) best = 0.0;
    }
    out.delta = best;
    return out;
}

namespace {

double chain_angle(const std::vector<GroupElement>& gs,
                   const std::vector<LieVector>& us,
                   const std::vector<double>& scales, ProjectivePoint b) {
    // phi(g1 exp(s1 u1) ... gn exp(sn un) b)
    ProjectivePoint cur = b;
    for (std::size_t i = gs.size(); i-- > 0;) {
        cur = act(exp_map(us[i].scaled(scales[i])), cur);
        cur = act(gs[i], cur);
    }
    return cur.angle;
}

} // namespace

TaylorCheck taylor_linearization_check(const std::vector<GroupElement>& gs,
                                       const std::vector<LieVector>& us,
                                       ProjectivePoint b, double r,
                                       double alignment_t) {
    const std::size_t n = gs.size();
    if (us.size() != n || n == 0)
        throw std::invalid_argument("taylor_linearization_check: size mismatch");

    TaylorCheck out;
    out.alignment_margin = std::numeric_limits<double>::infinity();
    std::vector<CartanForm> cf(n);
    for (std::size_t i = 0; i < n; ++i) cf[i] = cartan_decompose(gs[i]);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        double a1 = distance(cf[i].b_plus(), cf[i + 1].b_minus());
        double a2 = distance(cf[i].b_minus(), cf[i + 1].b_plus());
        out.alignment_margin = std::min({out.alignment_margin, a1, a2});
    }
    out.alignment_margin =
        std::min(out.alignment_margin, distance(b, cf[n - 1].b_minus()));
    out.alignment_violated = out.alignment_margin <= alignment_t;

    std::vector<double> scales(n, 1.0);
    double phi_x = chain_angle(gs, us, scales, b);

    std::vector<double> zeros(n, 0.0);
    double base = chain_angle(gs, us, zeros, b);

    // zeta_i(u_i) by a central difference in the scalar multiplying u_i.
    double sum = 0.0;
    const double h = 1e-3;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> sc(n, 0.0);
        sc[i] = h;
        double up = chain_angle(gs, us, sc, b);
        sc[i] = -h;
        double dn = chain_angle(gs, us, sc, b);
        sum += circle_signed_diff(up, dn) / (2.0 * h);
    }

    double linear = base + sum;
    out.error = circle_distance(phi_x, linear);

    GroupElement prod = gs[0];
    for (std::size_t i = 1; i < n; ++i) prod = prod * gs[i];
    double norm = prod.operator_norm();
    double denom = norm * norm * r * r;
    out.bound_ratio = denom > 0 ? out.error / denom : 0.0;
    return out;
}

void ScaledProduct::right_multiply(const GroupElement& g) {
    m_ = m_ * g;
    if (++steps_since_rescale_ >= 32) {
        steps_since_rescale_ = 0;
        double s = m_.operator_norm();
        if (s > 1e-300 && std::isfinite(s)) {
            m_.m11 /= s; m_.m12 /= s; m_.m21 /= s; m_.m22 /= s;
            log_scale_ += std::log(s);
        }
    }
}

double ScaledProduct::log_norm() const {
    return log_scale_ + std::log(m_.operator_norm());
}

GroupElement ScaledProduct::normalized() const {
    // m_/sqrt(det m_) is the determinant-one representative; it equals the
    // full product, whose entries overflow once log ||.|| > ~709.
    double d = m_.det();
    if (d <= 0 || !std::isfinite(d))
        throw std::overflow_error("ScaledProduct: determinant out of range");
    double sd = std::sqrt(d);
    if (log_scale_ + std::log(m_.operator_norm() / sd) > 700.0)
        throw std::overflow_error("ScaledProduct: norm exceeds double range");
    GroupElement g = m_;
    g.m11 /= sd; g.m12 /= sd; g.m21 /= sd; g.m22 /= sd;
    return g;
}

} // namespace furst
