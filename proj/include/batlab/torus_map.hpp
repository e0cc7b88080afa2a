#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace batlab {

/// @file torus_map.hpp
/// Exact arithmetic for the alternating sawtooth shear map on the unit torus:
/// the two shears, their composition and inverse, the continuous flow map,
/// branch identification, derivative cocycles, and the hyperbolic cone checks.

struct MapParams {
    double alpha;
    explicit MapParams(double a);
};

enum class Direction { forward, backward };

/// A point on [0,1)^2. Coordinates are always reduced mod 1.
struct TorusPoint {
    double x = 0.0;
    double y = 0.0;
};

/// Reduce to [0,1). Round-toward-floor so the interval stays closed-open.
inline double wrap01(double u) {
    double r = u - static_cast<std::int64_t>(u);
    if (r < 0.0) r += 1.0;
    if (r >= 1.0) r -= 1.0;
    return r;
}

inline TorusPoint make_point(double x, double y) { return {wrap01(x), wrap01(y)}; }

/// Circle distance between u and v in [0,1).
double circle_dist(double u, double v);

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
    double norm() const;
};

struct Mat2 {
    // row-major: [[a, b], [c, d]]
    double a = 1.0, b = 0.0, c = 0.0, d = 1.0;
    double det() const { return a * d - b * c; }
    Vec2 apply(Vec2 v) const { return {a * v.x + b * v.y, c * v.x + d * v.y}; }
    Mat2 mul(const Mat2& o) const {
        return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
    }
};

/// Which of the four affine pieces contains a point, plus the direction the
/// test was made in. Points exactly on a singularity line take the lower
/// index (sign tests use "> 1/2", so ties go to the minus branch).
struct BranchId {
    int index;  // 1..4
    Direction direction;
    int s1;  // sign of the first shear slope, -1 or +1
    int s2;  // sign of the second shear slope
};

/// One affine branch of T^{+-1}: z -> entries*z + offset (mod 1).
struct BranchMatrix {
    Mat2 entries;
    Vec2 offset;  // stored mod 1
};

struct BranchWord {
    std::vector<std::uint8_t> letters;  // entries in 1..4, innermost step first
    std::string str() const;
};

struct ConeSpec {
    enum class Kind { stable, unstable };
    Kind kind;
    double aperture;  // default 4/sqrt(alpha)
    bool contains(Vec2 v) const;
    static ConeSpec stable(const MapParams& p);
    static ConeSpec unstable(const MapParams& p);
    static ConeSpec stable_narrow(const MapParams& p);    // aperture 4/alpha
    static ConeSpec unstable_narrow(const MapParams& p);  // aperture 4/alpha
};

TorusPoint forward_map(TorusPoint z, const MapParams& p);
TorusPoint inverse_map(TorusPoint z, const MapParams& p);

/// Flow map Phi_{s,t} of the piecewise velocity, s <= t. On [0,1/2) only y
/// advances at rate 2*alpha*|x-1/2|; on [1/2,1) only x advances at rate
/// 2*alpha*|y-1/2|; extended periodically.
TorusPoint flow_map(double s, double t, TorusPoint z, const MapParams& p);

/// Inverse flow phi_{t,s} = (Phi_{s,t})^{-1} for 0 <= s <= t.
TorusPoint inverse_flow_map(double t, double s, TorusPoint z, const MapParams& p);

BranchId branch_id(TorusPoint z, const MapParams& p, Direction dir);

/// The derivative of T (forward) or T^{-1} (backward) on the branch
/// containing z, together with the affine offset of that branch.
BranchMatrix branch_derivative(const BranchId& id, const MapParams& p);

/// Forward branch matrix by index, [[1+s1*s2*a^2, s2*a],[s1*a, 1]].
Mat2 forward_branch_matrix(int index, const MapParams& p);
/// Its inverse (the backward branch matrix A_i).
Mat2 backward_branch_matrix(int index, const MapParams& p);

struct CocycleResult {
    BranchMatrix product;  // n-step derivative with accumulated offset mod 1
    BranchWord word;
    bool near_singularity = false;  // some orbit point within 1e-12 of a cut line
};

/// DT^{+-n}(z) as the ordered product of branch derivatives along the orbit.
CocycleResult derivative_cocycle(TorusPoint z, int n, Direction dir, const MapParams& p);

struct EigenPair {
    double lambda_u = 0.0;
    double lambda_s = 0.0;
    Vec2 e_u, e_s;
    double angle_u = 0.0;  // angle of e_u to the x-axis, radians
    double angle_s = 0.0;  // angle of e_s to the y-axis, radians
};

/// Analytic eigendata of one forward branch matrix.
EigenPair branch_eigen(int index, const MapParams& p);

struct ConeFailure {
    TorusPoint z;
    Vec2 v;
    std::string what;
};

struct HyperbolicityReport {
    std::array<EigenPair, 4> branches;
    double min_expansion_forward = 0.0;   // over sampled (z, v in C_u), |DT v|/|v|
    double max_expansion_forward = 0.0;
    double min_expansion_backward = 0.0;  // over sampled (z, v in C_s), |DT^{-1} v|/|v|
    double max_expansion_backward = 0.0;
    std::vector<ConeFailure> failures;
    bool passed() const { return failures.empty(); }
};

/// Verify cone invariance and the alpha^2/2 expansion bound on sampled points
/// and cone vectors. Never throws; failing samples are listed in the report.
HyperbolicityReport cone_invariance_check(const MapParams& p, int samples,
                                          std::uint64_t seed = 2024);

}  // namespace batlab
