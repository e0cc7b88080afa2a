#include "batlab/torus_map.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>

#include "batlab/rng.hpp"

namespace batlab {

MapParams::MapParams(double a) : alpha(a) {
    if (!(a > 0.0)) throw std::invalid_argument("MapParams: alpha must be positive");
}

double circle_dist(double u, double v) {
    double d = std::fabs(wrap01(u) - wrap01(v));
    return std::min(d, 1.0 - d);
}

double Vec2::norm() const { return std::hypot(x, y); }

std::string BranchWord::str() const {
    std::string s;
    s.reserve(letters.size());
    for (auto l : letters) s.push_back(static_cast<char>('0' + l));
    return s;
}

bool ConeSpec::contains(Vec2 v) const {
    if (kind == Kind::stable) return std::fabs(v.x) <= aperture * std::fabs(v.y);
    return std::fabs(v.y) <= aperture * std::fabs(v.x);
}

ConeSpec ConeSpec::stable(const MapParams& p) {
    return {Kind::stable, 4.0 / std::sqrt(p.alpha)};
}
ConeSpec ConeSpec::unstable(const MapParams& p) {
    return {Kind::unstable, 4.0 / std::sqrt(p.alpha)};
}
ConeSpec ConeSpec::stable_narrow(const MapParams& p) { return {Kind::stable, 4.0 / p.alpha}; }
ConeSpec ConeSpec::unstable_narrow(const MapParams& p) { return {Kind::unstable, 4.0 / p.alpha}; }

namespace {

inline double tent(double u) { return std::fabs(wrap01(u) - 0.5); }

// Sign of the sawtooth slope at coordinate u; ties (u == 0 or 1/2 exactly)
// take -1 so that singular points land in the lower-index branch.
inline int slope_sign(double u) { return wrap01(u) > 0.5 ? 1 : -1; }

inline int branch_index(int s1, int s2) {
    // (-,-)->1, (+,-)->2, (-,+)->3, (+,+)->4
    return (s1 > 0 ? 1 : 0) + (s2 > 0 ? 2 : 0) + 1;
}

}  // namespace

TorusPoint forward_map(TorusPoint z, const MapParams& p) {
    double y1 = wrap01(z.y + p.alpha * tent(z.x));
    double x2 = wrap01(z.x + p.alpha * tent(y1));
    return {x2, y1};
}

TorusPoint inverse_map(TorusPoint z, const MapParams& p) {
    double x1 = wrap01(z.x - p.alpha * tent(z.y));
    double y1 = wrap01(z.y - p.alpha * tent(x1));
    return {x1, y1};
}

namespace {

// Interval overlap of [s,t] with [a,b].
inline double overlap(double s, double t, double a, double b) {
    return std::max(0.0, std::min(t, b) - std::max(s, a));
}

// Phi_{s,t} within one period, 0 <= s <= t <= 1.
TorusPoint flow_within(double s, double t, TorusPoint z, const MapParams& p) {
    double a1 = 2.0 * p.alpha * overlap(s, t, 0.0, 0.5);
    double a2 = 2.0 * p.alpha * overlap(s, t, 0.5, 1.0);
    double y = wrap01(z.y + a1 * tent(z.x));
    double x = wrap01(z.x + a2 * tent(y));
    return {x, y};
}

TorusPoint inverse_flow_within(double s, double t, TorusPoint z, const MapParams& p) {
    double a1 = 2.0 * p.alpha * overlap(s, t, 0.0, 0.5);
    double a2 = 2.0 * p.alpha * overlap(s, t, 0.5, 1.0);
    double x = wrap01(z.x - a2 * tent(z.y));
    double y = wrap01(z.y - a1 * tent(x));
    return {x, y};
}

}  // namespace

TorusPoint flow_map(double s, double t, TorusPoint z, const MapParams& p) {
    if (t < s) throw std::invalid_argument("flow_map: requires s <= t");
    // Shift so s lands in [0,1); the velocity is time-one periodic.
    double base = std::floor(s);
    s -= base;
    t -= base;
    if (t <= 1.0) return flow_within(s, t, z, p);
    z = flow_within(s, 1.0, z, p);
    t -= 1.0;
    while (t >= 1.0) {
        z = forward_map(z, p);
        t -= 1.0;
    }
    return flow_within(0.0, t, z, p);
}

TorusPoint inverse_flow_map(double t, double s, TorusPoint z, const MapParams& p) {
    if (t < s) throw std::invalid_argument("inverse_flow_map: requires s <= t");
    double base = std::floor(s);
    s -= base;
    t -= base;
    if (t <= 1.0) return inverse_flow_within(s, t, z, p);
    // Undo the trailing partial period, then whole periods, then the lead-in.
    double frac = t - std::floor(t);
    int whole = static_cast<int>(std::floor(t)) - 1;
    z = inverse_flow_within(0.0, frac, z, p);
    for (int k = 0; k < whole; ++k) z = inverse_map(z, p);
    return inverse_flow_within(s, 1.0, z, p);
}

BranchId branch_id(TorusPoint z, const MapParams& p, Direction dir) {
    int s1, s2;
    if (dir == Direction::forward) {
        s1 = slope_sign(z.x);
        double y1 = wrap01(z.y + p.alpha * tent(z.x));
        s2 = slope_sign(y1);
    } else {
        s2 = slope_sign(z.y);
        double x1 = wrap01(z.x - p.alpha * tent(z.y));
        s1 = slope_sign(x1);
    }
    return {branch_index(s1, s2), dir, s1, s2};
}

Mat2 forward_branch_matrix(int index, const MapParams& p) {
    int s1 = ((index - 1) & 1) ? 1 : -1;
    int s2 = ((index - 1) & 2) ? 1 : -1;
    double a = p.alpha;
    return {1.0 + s1 * s2 * a * a, s2 * a, s1 * a, 1.0};
}

Mat2 backward_branch_matrix(int index, const MapParams& p) {
    int s1 = ((index - 1) & 1) ? 1 : -1;
    int s2 = ((index - 1) & 2) ? 1 : -1;
    double a = p.alpha;
    // adjugate of the forward matrix; det = 1
    return {1.0, -s2 * a, -s1 * a, 1.0 + s1 * s2 * a * a};
}

namespace {

// Affine branch with the lift offset left unwrapped.
BranchMatrix branch_affine_lift(const BranchId& id, const MapParams& p) {
    double a = p.alpha;
    double h1 = -id.s1 * a * 0.5;  // T1 offset:  y += s1*a*x - s1*a/2
    double h2 = -id.s2 * a * 0.5;  // T2 offset:  x += s2*a*y - s2*a/2
    if (id.direction == Direction::forward) {
        Mat2 m = forward_branch_matrix(id.index, p);
        // offset = T2_off + A2 * T1_off with A2 = [[1, s2 a],[0,1]]
        return {m, {h2 + id.s2 * a * h1, h1}};
    }
    Mat2 m = backward_branch_matrix(id.index, p);
    // inverse affine: w = A^{-1} z - A^{-1} b
    Vec2 mb = m.apply({-(h2 + id.s2 * a * h1), -h1});
    return {m, mb};
}

}  // namespace

BranchMatrix branch_derivative(const BranchId& id, const MapParams& p) {
    BranchMatrix bm = branch_affine_lift(id, p);
    bm.offset = {wrap01(bm.offset.x), wrap01(bm.offset.y)};
    return bm;
}

CocycleResult derivative_cocycle(TorusPoint z, int n, Direction dir, const MapParams& p) {
    if (n < 0) throw std::invalid_argument("derivative_cocycle: n must be >= 0");
    CocycleResult res;
    res.product.entries = Mat2{};
    res.product.offset = {0.0, 0.0};
    TorusPoint cur = z;
    for (int k = 0; k < n; ++k) {
        // distance of the sign-test coordinates to the cut lines {0, 1/2}
        double d1, d2;
        if (dir == Direction::forward) {
            double y1 = wrap01(cur.y + p.alpha * tent(cur.x));
            d1 = std::min(circle_dist(cur.x, 0.0), circle_dist(cur.x, 0.5));
            d2 = std::min(circle_dist(y1, 0.0), circle_dist(y1, 0.5));
        } else {
            double x1 = wrap01(cur.x - p.alpha * tent(cur.y));
            d1 = std::min(circle_dist(x1, 0.0), circle_dist(x1, 0.5));
            d2 = std::min(circle_dist(cur.y, 0.0), circle_dist(cur.y, 0.5));
        }
        if (d1 < 1e-12 || d2 < 1e-12) res.near_singularity = true;

        BranchId id = branch_id(cur, p, dir);
        BranchMatrix step = branch_affine_lift(id, p);
        res.word.letters.push_back(static_cast<std::uint8_t>(id.index));
        res.product.entries = step.entries.mul(res.product.entries);
        Vec2 so = step.entries.apply(res.product.offset);
        res.product.offset = {so.x + step.offset.x, so.y + step.offset.y};
        cur = (dir == Direction::forward) ? forward_map(cur, p) : inverse_map(cur, p);
    }
    res.product.offset = {wrap01(res.product.offset.x), wrap01(res.product.offset.y)};
    return res;
}

EigenPair branch_eigen(int index, const MapParams& p) {
    Mat2 m = forward_branch_matrix(index, p);
    double tr = m.a + m.d;
    double disc = tr * tr - 4.0;  // det = 1
    if (disc <= 0.0) throw std::domain_error("branch_eigen: branch is not hyperbolic");
    double root = std::sqrt(disc);
    EigenPair e;
    // larger-magnitude root first, then its partner via det = 1 (stable)
    e.lambda_u = tr >= 0.0 ? 0.5 * (tr + root) : 0.5 * (tr - root);
    e.lambda_s = 1.0 / e.lambda_u;
    // eigenvector of lambda from (lambda - d, c); for lambda_s use (b, lambda - a)
    e.e_u = {e.lambda_u - m.d, m.c};
    double nu = e.e_u.norm();
    e.e_u = {e.e_u.x / nu, e.e_u.y / nu};
    e.e_s = {m.b, e.lambda_s - m.a};
    double ns = e.e_s.norm();
    e.e_s = {e.e_s.x / ns, e.e_s.y / ns};
    e.angle_u = std::atan2(std::fabs(e.e_u.y), std::fabs(e.e_u.x));
    e.angle_s = std::atan2(std::fabs(e.e_s.x), std::fabs(e.e_s.y));
    return e;
}

HyperbolicityReport cone_invariance_check(const MapParams& p, int samples, std::uint64_t seed) {
    HyperbolicityReport rep;
    for (int i = 1; i <= 4; ++i) rep.branches[static_cast<std::size_t>(i - 1)] = branch_eigen(i, p);

    ConeSpec cu = ConeSpec::unstable(p);
    ConeSpec cs = ConeSpec::stable(p);
    double bound = p.alpha * p.alpha / 2.0;
    rep.min_expansion_forward = rep.min_expansion_backward = 1e300;
    rep.max_expansion_forward = rep.max_expansion_backward = 0.0;

    SplitMix64 rng(seed);
    for (int i = 0; i < samples; ++i) {
        TorusPoint z{rng.uniform(), rng.uniform()};
        // cone-boundary and interior test vectors
        double lam = rng.uniform(-1.0, 1.0);
        Vec2 vu{1.0, lam * cu.aperture};
        Vec2 vs{lam * cs.aperture, 1.0};

        Mat2 fwd = forward_branch_matrix(branch_id(z, p, Direction::forward).index, p);
        Vec2 wu = fwd.apply(vu);
        double gf = wu.norm() / vu.norm();
        rep.min_expansion_forward = std::min(rep.min_expansion_forward, gf);
        rep.max_expansion_forward = std::max(rep.max_expansion_forward, gf);
        if (!cu.contains(wu)) rep.failures.push_back({z, vu, "DT C_u not in C_u"});
        if (gf < bound) rep.failures.push_back({z, vu, "forward expansion below alpha^2/2"});

        Mat2 bwd = backward_branch_matrix(branch_id(z, p, Direction::backward).index, p);
        Vec2 ws = bwd.apply(vs);
        double gb = ws.norm() / vs.norm();
        rep.min_expansion_backward = std::min(rep.min_expansion_backward, gb);
        rep.max_expansion_backward = std::max(rep.max_expansion_backward, gb);
        if (!cs.contains(ws)) rep.failures.push_back({z, vs, "DT^{-1} C_s not in C_s"});
        if (gb < bound) rep.failures.push_back({z, vs, "backward expansion below alpha^2/2"});
    }
    return rep;
}

namespace {
int g_thread_budget = 0;
}

int thread_budget() {
    if (g_thread_budget > 0) return g_thread_budget;
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

void set_thread_budget(int n) { g_thread_budget = n > 0 ? n : 0; }

}  // namespace batlab
