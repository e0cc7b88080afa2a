#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "batlab/torus_map.hpp"

namespace batlab {

/// @file segment_geometry.hpp
/// Segment calculus on the torus: the backward/forward singularity sets, the
/// cut-map-subdivide generation decompositions with Jacobians and long/short
/// and good/bad bookkeeping, multi-intersection sets, and the counting
/// diagnostics. Generation trees grow like (alpha^2/2)^n, so every deep
/// operation has an exact enumerated mode behind a memory guard and a seeded
/// pointwise-walk mode for depths the guard refuses.

/// Thrown when an enumeration would exceed its segment guard.
struct GuardError : std::runtime_error {
    long long projected;
    explicit GuardError(const std::string& what, long long count)
        : std::runtime_error(what), projected(count) {}
};

/// Oriented line segment; anchor is wrapped, the far endpoint lives in the
/// lift (anchor + length * dir may leave [0,1)^2).
struct TorusSegment {
    TorusPoint anchor;
    Vec2 dir;  // unit
    double length = 0.0;

    TorusPoint point_at(double s) const {
        return make_point(anchor.x + s * dir.x, anchor.y + s * dir.y);
    }
    Vec2 lift_endpoint() const { return {anchor.x + length * dir.x, anchor.y + length * dir.y}; }
    /// true when the two endpoints coincide on the torus (a closed loop)
    bool is_loop() const;

    static TorusSegment through(TorusPoint a, Vec2 direction, double len);
    /// segment from wrapped endpoints interpreted in the lift
    static TorusSegment from_lift(Vec2 a, Vec2 b);
};

struct SegmentFamily {
    std::vector<TorusSegment> segments;
    std::string provenance;
};

/// Minimal decomposition of the singularity set: six closed segments
/// (two horizontal/vertical loops plus four slanted images) for either
/// direction. backward = S^-, forward = S^+.
SegmentFamily build_singularity(Direction dir, const MapParams& p);

struct IntersectionResult {
    std::vector<TorusPoint> points;
    bool collinear_overlap = false;
    double overlap_length = 0.0;
};

/// All transversal intersections of two closed segments on the torus,
/// wrap-aware via integer translates of the lifts. Endpoint touches count.
IntersectionResult segment_intersections(const TorusSegment& a, const TorusSegment& b,
                                         double tol = 1e-12);

/// Sorted interior cut parameters of seg against the singularity set:
/// S^- for backward (stable segments), S^+ for forward (unstable segments).
std::vector<double> cut_positions(const TorusSegment& seg, Direction dir, const MapParams& p);

enum class LengthClass : std::uint8_t { long_seg, short_seg };
enum class Quality : std::uint8_t { good, bad };

struct GenerationRecord {
    TorusSegment segment;
    double jacobian = 1.0;       // arclength ratio |T^{+-n}(W_i)| / |W_i|
    std::uint64_t word_packed = 0;  // branch itinerary, two bits per step
    std::int64_t parent = -1;       // index into the previous generation
    std::int32_t last_good_depth = -1;  // 0 itself good, k = ancestor k up, -1 none
    LengthClass length_class = LengthClass::long_seg;
    Quality quality = Quality::bad;
};

/// Decode a packed itinerary of the given depth into letters 1..4.
BranchWord unpack_word(std::uint64_t packed, int depth);

struct GenerationResult {
    std::vector<GenerationRecord> records;  // in chain order along T^{+-n}(W)
    long long dropped_fragments = 0;
    bool closed_chain = false;
};

struct GenerationOptions {
    long long guard = 10'000'000;  // refuse larger projected generations
    bool keep_words = true;
};

/// Backward generations Psi_n(W) for W tangent to the stable cone, |W| <= 2:
/// cut at S^-, map by the exact affine inverse branch, subdivide images
/// longer than 2 into equal pieces in (1,2]; jacobians, length classes,
/// good/bad quality and most-recent-good-ancestor depth are tracked.
GenerationResult backward_generation(const TorusSegment& W, int n, const MapParams& p,
                                     const GenerationOptions& opt = {});

/// Forward analogue Psi_n^+(W) for W tangent to the unstable cone,
/// |W| in [1,2]: cut at S^+, push through T, subdivide.
GenerationResult forward_generation(const TorusSegment& W, int n, const MapParams& p,
                                    const GenerationOptions& opt = {});

struct JacobianSums {
    double total = 0.0;       // sum |W_i|^eta |J_{W_i} T^n|
    double short_only = 0.0;  // same restricted to |W_i| < 1
    bool sampled = false;
    double stderr_total = 0.0;
    double stderr_short = 0.0;
    long long pieces = 0;  // enumerated pieces, or samples when sampled
};

struct SampleOptions {
    long long enumeration_guard = 4'000'000;
    int samples = 20000;
    std::uint64_t seed = 1234;
};

/// Sum over Psi_n(W) of |W_i|^eta |J_{W_i} T^n| and its short-only part.
/// Enumerates exactly when the projected tree fits the guard; otherwise uses
/// the identity  sum = integral over W of l_n(w)^{eta-1} dm(w), estimated by
/// seeded uniform sampling of backward point-walks (l_n(w) = length of the
/// generation-n piece whose image contains w).
JacobianSums jacobian_sums(const TorusSegment& W, int n, double eta, const MapParams& p,
                           const SampleOptions& opt = {});

struct ForwardCounts {
    double count = 0.0;  // estimate (or exact) of #Psi_n^+
    double short_count = 0.0;
    double long_count = 0.0;
    double total_length = 0.0;
    double short_long_ratio = 0.0;  // r_n
    bool sampled = false;
};

/// #Psi_n^+(W), the short/long split and total image length; exact when the
/// tree fits, sampled via forward point-walks otherwise.
ForwardCounts forward_counts(const TorusSegment& W, int n, const MapParams& p,
                             const SampleOptions& opt = {});

/// Max bad-children count over single parents along sampled backward walks
/// (boundary children whose outer neighbour is unknown count as bad).
long long max_bad_children(const TorusSegment& W, int n, const MapParams& p,
                           const SampleOptions& opt = {});

struct MultiIntersectionSet {
    std::vector<TorusPoint> points;  // stored up to storage_cap
    long long count = 0;
    int n = 0;
    double tol = 0.0;
    bool truncated_storage = false;
};

struct MultiIntersectionOptions {
    long long guard = 10'000'000;     // cap on generated segments
    long long storage_cap = 2'000'000;
    double tol = -1.0;                // < 0: use 1e-9 * (1 + alpha)
};

/// Superset of the n-step multi-intersection points: pairwise intersections
/// between distinct segments across the Psi_k^+ families generated from the
/// minimal S^- decomposition for k = 0..n-1, plus shared endpoints,
/// deduplicated on a tol lattice. Counts are upper bounds for the
/// minimal-decomposition quantity.
MultiIntersectionSet multi_intersections(int n, const MapParams& p,
                                         const MultiIntersectionOptions& opt = {});

struct BadCounts {
    long long psi = 0;
    long long good = 0;
    long long i_n = 0;                     // bad all the way to the root
    std::vector<long long> max_i_nk;       // index k = 1..n-1: max over V of #I_{n,k}(V)
    std::vector<long long> sum_i_nk;       // totals per k
    long long max_bad_children_per_parent = 0;
};

/// Full-tree tabulation of the good/bad ancestry partition (requires the
/// enumeration to fit the guard).
BadCounts bad_generation_counts(const TorusSegment& W, int n, const MapParams& p,
                                const GenerationOptions& opt = {});

/// Perpendicular distance between adjacent parallel spanning curves of S^-.
double spanning_curve_spacing(const MapParams& p);

}  // namespace batlab
