#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <vector>

namespace furst {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

// Angle reduced into [0, pi). Chart of the projective line B: the class of
// (cos x, sin x)^T maps to x.
double wrap_angle(double x);

// Circle distance on R/piZ: min over representatives of |x - y|.
double circle_distance(double x, double y);

// Signed difference x - y reduced into (-pi/2, pi/2].
double circle_signed_diff(double x, double y);

struct ProjectivePoint {
    double angle = 0.0; // in [0, pi)

    ProjectivePoint() = default;
    explicit ProjectivePoint(double a) : angle(wrap_angle(a)) {}

    ProjectivePoint perp() const { return ProjectivePoint(angle + kPi / 2); }
};

inline double distance(ProjectivePoint a, ProjectivePoint b) {
    return circle_distance(a.angle, b.angle);
}

struct NearRotation : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct OutsideLogDomain : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Trace-zero basis of the Lie algebra, fixed for the whole project:
//   E1 = [[1,0],[0,-1]], E2 = [[0,1],[1,0]], E3 = [[0,-1],[1,0]].
// Coefficient vectors carry the Euclidean norm.
struct LieVector {
    double c1 = 0.0, c2 = 0.0, c3 = 0.0;

    double norm() const;
    LieVector scaled(double s) const { return {c1 * s, c2 * s, c3 * s}; }
};

struct CartanForm; // below

// Real 2x2 matrix of determinant 1 (a representative of an element of
// PSL(2,R); all geometric quantities here are sign-ambivalent).
struct GroupElement {
    double m11 = 1.0, m12 = 0.0, m21 = 0.0, m22 = 1.0;

    GroupElement() = default;
    GroupElement(double a, double b, double c, double d);

    static GroupElement identity() { return {}; }
    static GroupElement rotation(double theta);
    static GroupElement diagonal(double lambda);

    double det() const { return m11 * m22 - m12 * m21; }
    GroupElement transpose() const { return {m11, m21, m12, m22}; }
    GroupElement inverse() const { return {m22, -m12, -m21, m11}; }

    // Largest singular value; >= 1 for determinant-one matrices.
    double operator_norm() const;
    double frobenius_sq() const {
        return m11 * m11 + m12 * m12 + m21 * m21 + m22 * m22;
    }

    GroupElement operator*(const GroupElement& o) const;

    // Divides by sqrt(det); call after long composition chains.
    void renormalize();
};

// R_{theta1} A_lambda R_{-theta2} reconstructs the source up to the PSL
// sign, with max-entry error <= 1e-10 relative to ||g||; lambda equals the
// operator norm.
struct CartanForm {
    double theta1 = 0.0;  // in [0, pi)
    double lambda = 1.0;  // > 1
    double theta2 = 0.0;  // in [0, pi)

    ProjectivePoint b_plus() const { return ProjectivePoint(theta1); }
    ProjectivePoint b_minus() const { return ProjectivePoint(theta2 + kPi / 2); }
    GroupElement reconstruct() const;
};

// g = R_{theta1} A_lambda R_{-theta2} with lambda = ||g|| > 1.
// Throws NearRotation when ||g|| <= 1 + 1e-9 (angles unidentifiable).
CartanForm cartan_decompose(const GroupElement& g);

// Scale-tolerant variant for internally renormalized products c*g, c > 0:
// angles and lambda of the underlying determinant-one element.
CartanForm cartan_decompose_scaled(const GroupElement& m);

// Projective action in the angle chart.
ProjectivePoint act(const GroupElement& g, ProjectivePoint b);

// d/dx of the chart action; equals 1/||g (cos x, sin x)^T||^2 and lies in
// [||g||^-2, ||g||^2].
double act_derivative(const GroupElement& g, double x);

GroupElement exp_map(const LieVector& u);
LieVector log_map(const GroupElement& g);

// Project-wide metric proxy: min(||I - a^-1 b||_F, ||I + a^-1 b||_F).
// Vanishes iff a = +-b; bi-Lipschitz to left-invariant Riemannian metrics
// near the identity.
double group_distance(const GroupElement& a, const GroupElement& b);

// rho_b(v) = D_u phi(exp(u) b)|_{u=0} applied to v. Linear in v; zero iff a
// representative of b is an eigenvector of the matrix of v. In closed form
// rho_b(v) = -c1 sin(2x) + c2 cos(2x) + c3 at x = b.angle.
double rho_form(ProjectivePoint b, const LieVector& v);

struct ExcludedArc {
    double center = 0.0; // zero of rho_.(v), in [0, pi)
    double length = 0.0;
};

struct RhoArcs {
    std::vector<ExcludedArc> arcs; // at most 2
    double delta = 0.0;            // realized min |rho_b(v)| outside the arcs
};

// Excluded arcs of length t centred on the zeros of b -> rho_b(v) for a
// unit v (normalized internally). Outside the arcs |rho_b(v)| >= delta.
RhoArcs rho_zero_arcs(const LieVector& v, double t);

struct TaylorCheck {
    double error = 0.0;        // circle distance |phi(x) - S|
    double bound_ratio = 0.0;  // error / (||g_1..g_n||^2 r^2)
    double alignment_margin = 0.0;
    bool alignment_violated = false;
};

// First-order Taylor check for phi(g1 exp(u1) ... gn exp(un) b): the zeta_i
// are evaluated by central finite differences along each u_i.
TaylorCheck taylor_linearization_check(const std::vector<GroupElement>& gs,
                                       const std::vector<LieVector>& us,
                                       ProjectivePoint b, double r,
                                       double alignment_t = 0.1);

// Norm-safe accumulator for long products: keeps a bounded matrix and a
// separate log-scale so ||g_1...g_n|| is available up to n >> 1e4.
class ScaledProduct {
public:
    ScaledProduct() = default;
    explicit ScaledProduct(const GroupElement& g) : m_(g) {}

    void right_multiply(const GroupElement& g);
    double log_norm() const;                    // log ||product||
    const GroupElement& scaled_matrix() const { return m_; }
    double log_scale() const { return log_scale_; }
    // Cartan data of the underlying determinant-one product.
    CartanForm cartan() const { return cartan_decompose_scaled(m_); }
    // Representative with determinant 1; throws std::overflow_error when the
    // norm exceeds double range.
    GroupElement normalized() const;

private:
    GroupElement m_;
    double log_scale_ = 0.0;
    int steps_since_rescale_ = 0;
};

} // namespace furst
