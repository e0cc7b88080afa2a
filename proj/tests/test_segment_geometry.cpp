#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "batlab/parallel.hpp"
#include "batlab/rng.hpp"
#include "batlab/segment_geometry.hpp"

using namespace batlab;

namespace {

TorusSegment random_stable_segment(SplitMix64& rng, const MapParams& p, double max_len = 2.0) {
    double t = rng.uniform(-1.0, 1.0) * ConeSpec::stable(p).aperture;
    Vec2 dir{t, 1.0};
    return TorusSegment::through({rng.uniform(), rng.uniform()}, dir,
                                 rng.uniform(0.05, max_len));
}

}  // namespace

TEST_CASE("minimal singularity families") {
    for (double a : {8.0, 8.5, 16.0}) {
        MapParams p(a);
        SegmentFamily sm = build_singularity(Direction::backward, p);
        CHECK(sm.segments.size() == 6);
        double slant = std::sqrt(a * a + 1.0) / 2.0;
        int slanted = 0;
        for (const auto& s : sm.segments) {
            if (std::fabs(s.dir.y) < 1e-9) continue;
            ++slanted;
            CHECK(s.length == doctest::Approx(slant).epsilon(1e-12));
            // tangent in the unstable cone: |slope| = 1/alpha <= 4/sqrt(alpha)
            CHECK(ConeSpec::unstable(p).contains(s.dir));
        }
        CHECK(slanted == 4);

        // every segment really lies inside S^-: T2^{-1} x-coordinate on the cuts
        for (const auto& s : sm.segments) {
            for (double t : {0.1, 0.5, 0.9}) {
                TorusPoint z = s.point_at(t * s.length);
                double x1 = wrap01(z.x - a * std::fabs(z.y - 0.5));
                bool on_h = circle_dist(z.y, 0.0) < 1e-9 || circle_dist(z.y, 0.5) < 1e-9;
                bool on_v = circle_dist(x1, 0.0) < 1e-9 || circle_dist(x1, 0.5) < 1e-9;
                CHECK((on_h || on_v));
            }
        }

        SegmentFamily sp = build_singularity(Direction::forward, p);
        CHECK(sp.segments.size() == 6);
        for (const auto& s : sp.segments) {
            if (std::fabs(s.dir.x) < 1e-9) continue;
            CHECK(ConeSpec::stable(p).contains(Vec2{s.dir.y, s.dir.x}) == false);
            // slanted forward segments are steep: tangent in the stable cone
            CHECK(std::fabs(s.dir.y) > std::fabs(s.dir.x));
        }
    }
}

TEST_CASE("spanning curve spacing") {
    for (double a : {8.0, 8.5, 16.0, 32.0}) {
        MapParams p(a);
        CHECK(spanning_curve_spacing(p) ==
              doctest::Approx(1.0 / (2.0 * std::sqrt(1.0 + a * a))).epsilon(1e-10));
    }
}

TEST_CASE("segment intersections basics") {
    TorusSegment h{{0.25, 0.5}, {1.0, 0.0}, 0.5};
    TorusSegment v{{0.5, 0.25}, {0.0, 1.0}, 0.5};
    auto r = segment_intersections(h, v);
    REQUIRE(r.points.size() == 1);
    CHECK(circle_dist(r.points[0].x, 0.5) < 1e-12);
    CHECK(circle_dist(r.points[0].y, 0.5) < 1e-12);

    TorusSegment h2{{0.25, 0.7}, {1.0, 0.0}, 0.3};
    CHECK(segment_intersections(h, h2).points.empty());
    CHECK(!segment_intersections(h, h2).collinear_overlap);

    TorusSegment h3{{0.4, 0.5}, {1.0, 0.0}, 0.2};
    auto ov = segment_intersections(h, h3);
    CHECK(ov.collinear_overlap);
    CHECK(ov.overlap_length == doctest::Approx(0.2));

    // wrap-aware: crossing across the x = 0 edge
    TorusSegment hw{{0.9, 0.3}, {1.0, 0.0}, 0.2};
    TorusSegment vw{{0.05, 0.2}, {0.0, 1.0}, 0.2};
    auto rw = segment_intersections(hw, vw);
    REQUIRE(rw.points.size() == 1);
    CHECK(circle_dist(rw.points[0].x, 0.05) < 1e-12);
    CHECK(circle_dist(rw.points[0].y, 0.3) < 1e-12);
}

TEST_CASE("stable and unstable segments cross at most once per lift") {
    MapParams p(16.0);
    SplitMix64 rng(11);
    for (int i = 0; i < 300; ++i) {
        TorusSegment s = random_stable_segment(rng, p, 1.0);
        double t = rng.uniform(-1.0, 1.0) * ConeSpec::unstable(p).aperture;
        TorusSegment u = TorusSegment::through({rng.uniform(), rng.uniform()}, {1.0, t},
                                               rng.uniform(0.1, 1.0));
        // at most one crossing per unit cell for transversal cone directions
        auto r = segment_intersections(s, u);
        CHECK(r.points.size() <= 2);  // lengths up to 1: at most two lift cells
    }
}

TEST_CASE("analytic cuts agree with the generic intersection routine") {
    for (double a : {8.0, 8.5, 16.0}) {
        MapParams p(a);
        SplitMix64 rng(21);
        SegmentFamily sm = build_singularity(Direction::backward, p);
        for (int trial = 0; trial < 40; ++trial) {
            TorusSegment W = random_stable_segment(rng, p);
            std::vector<double> cuts = cut_positions(W, Direction::backward, p);
            // oracle: parameters of intersections with the six minimal segments
            std::vector<double> oracle;
            for (const auto& seg : sm.segments) {
                for (const auto& q : segment_intersections(W, seg, 1e-11).points) {
                    // recover the parameter along W, trying every wrap of y
                    for (int ky = -3; ky <= 3; ++ky) {
                        double s = (q.y + ky - W.anchor.y) / W.dir.y;
                        if (s <= 1e-9 || s >= W.length - 1e-9) continue;
                        TorusPoint back = W.point_at(s);
                        if (circle_dist(back.x, q.x) < 1e-9 &&
                            circle_dist(back.y, q.y) < 1e-9)
                            oracle.push_back(s);
                    }
                }
            }
            std::sort(oracle.begin(), oracle.end());
            oracle.erase(std::unique(oracle.begin(), oracle.end(),
                                     [](double x, double y) { return std::fabs(x - y) < 1e-9; }),
                         oracle.end());
            REQUIRE(cuts.size() == oracle.size());
            for (std::size_t i = 0; i < cuts.size(); ++i)
                CHECK(cuts[i] == doctest::Approx(oracle[i]).epsilon(1e-8));
        }
    }
}

TEST_CASE("one-step generation bookkeeping") {
    MapParams p(16.0);
    TorusSegment W{{0.31, 0.0}, {0.0, 1.0}, 1.0};  // vertical loop equivalent
    GenerationResult gen = backward_generation(W, 1, p);

    // n = 0 conventions
    GenerationResult root = backward_generation(W, 0, p);
    REQUIRE(root.records.size() == 1);
    CHECK(root.records[0].jacobian == 1.0);
    CHECK(root.records[0].quality == Quality::bad);
    CHECK(root.records[0].last_good_depth == -1);

    // arclength bijection:  sum |W_i| |J_i| = |W|
    KahanSum len;
    for (const auto& r : gen.records) len.add(r.segment.length * r.jacobian);
    CHECK(len.value() == doctest::Approx(W.length).epsilon(1e-9));

    // every piece is stable-cone tangent and no longer than 2
    int shorts = 0;
    for (const auto& r : gen.records) {
        CHECK(ConeSpec::stable(p).contains(r.segment.dir));
        CHECK(r.segment.length <= 2.0 + 1e-9);
        if (r.length_class == LengthClass::short_seg) ++shorts;
    }
    CHECK(shorts <= 10);  // per-parent short count bound
}

TEST_CASE("short counts and cut counts across many random curves") {
    for (double a : {16.0, 32.0}) {
        MapParams p(a);
        SplitMix64 rng(31);
        for (int trial = 0; trial < 250; ++trial) {
            TorusSegment W = random_stable_segment(rng, p);
            GenerationResult gen = backward_generation(W, 1, p);
            long long shorts = 0;
            for (const auto& r : gen.records)
                if (r.length_class == LengthClass::short_seg) ++shorts;
            CHECK(shorts <= 10);

            // short admissible curves meet S^- at most 3 times
            TorusSegment tiny = random_stable_segment(rng, p, 1.0);
            tiny.length = rng.uniform(0.2, 1.0) / (4.0 * a);
            CHECK(cut_positions(tiny, Direction::backward, p).size() <= 3);
        }
    }
}

TEST_CASE("jacobians match the derivative cocycle") {
    MapParams p(16.0);
    SplitMix64 rng(41);
    TorusSegment W = random_stable_segment(rng, p, 1.5);
    for (int n : {1, 2}) {
        GenerationResult gen = backward_generation(W, n, p);
        // spot check a spread of records
        for (std::size_t i = 0; i < gen.records.size(); i += std::max<std::size_t>(1, gen.records.size() / 23)) {
            const auto& r = gen.records[i];
            TorusPoint z = r.segment.point_at(0.5 * r.segment.length);
            CocycleResult c = derivative_cocycle(z, n, Direction::forward, p);
            if (c.near_singularity) continue;
            Vec2 img = c.product.entries.apply(r.segment.dir);
            CHECK(img.norm() == doctest::Approx(r.jacobian).epsilon(1e-9));
        }
        // total arclength is conserved through the generation
        KahanSum len;
        for (const auto& r : gen.records) len.add(r.segment.length * r.jacobian);
        CHECK(len.value() == doctest::Approx(W.length).epsilon(1e-9));
    }
}

TEST_CASE("good bad partition is consistent") {
    MapParams p(16.0);
    TorusSegment W{{0.173, 0.0}, {0.0, 1.0}, 1.0};
    for (int n : {1, 2, 3}) {
        BadCounts bc = bad_generation_counts(W, n, p);
        long long sum_ink = 0;
        for (long long s : bc.sum_i_nk) sum_ink += s;
        CHECK(bc.good + bc.i_n + sum_ink == bc.psi);
        CHECK(bc.max_bad_children_per_parent >= 0);
        CHECK(bc.max_bad_children_per_parent <= 64);
    }
    // cross-check psi against the generation itself
    GenerationResult gen = backward_generation(W, 2, p);
    BadCounts bc = bad_generation_counts(W, 2, p);
    CHECK(static_cast<long long>(gen.records.size()) == bc.psi);
    long long goods = 0;
    for (const auto& r : gen.records)
        if (r.quality == Quality::good) ++goods;
    CHECK(goods == bc.good);
}

TEST_CASE("jacobian sums: exact values and the sampled estimator") {
    MapParams p(16.0);
    TorusSegment W{{0.37, 0.0}, {0.0, 1.0}, 1.0};

    // n = 0: the sum is |W|^eta with the short part decided by the class
    JacobianSums j0 = jacobian_sums(W, 0, 0.0, p);
    CHECK(j0.total == doctest::Approx(1.0));
    CHECK(j0.short_only == 0.0);

    // eta = 0, small n: totals stay below 3 (complexity bound territory)
    for (int n : {1, 2}) {
        JacobianSums jn = jacobian_sums(W, n, 0.0, p);
        CHECK(!jn.sampled);
        CHECK(jn.total <= 3.0);
        CHECK(jn.short_only <= jn.total);
    }

    // sampled mode agrees with the exact enumeration
    JacobianSums exact = jacobian_sums(W, 2, 0.0, p);
    SampleOptions so;
    so.enumeration_guard = 100;  // force sampling
    so.samples = 40000;
    JacobianSums mc = jacobian_sums(W, 2, 0.0, p, so);
    CHECK(mc.sampled);
    CHECK(std::fabs(mc.total - exact.total) < std::max(5.0 * mc.stderr_total, 0.02));

    // short-only sum bound at n = 1 with eta = beta = 1/2
    SplitMix64 rng(51);
    for (int trial = 0; trial < 50; ++trial) {
        TorusSegment V = random_stable_segment(rng, p);
        JacobianSums j = jacobian_sums(V, 1, 0.5, p);
        double bound = 20.0 * std::pow(p.alpha * p.alpha / 2.0, -0.5) * std::sqrt(V.length);
        CHECK(j.short_only <= bound);
    }
}

TEST_CASE("forward generation counts and ratios") {
    MapParams p(32.0);
    TorusSegment W{{0.21, 0.37}, {1.0, 0.0}, 1.0};
    for (int n : {1, 2}) {
        ForwardCounts fc = forward_counts(W, n, p);
        CHECK(!fc.sampled);
        CHECK(fc.count <= 4.0 * std::pow(2.0 * p.alpha, 2.0 * n));
        CHECK(fc.total_length <= std::pow(2.0 * p.alpha, 2.0 * n) * W.length);
        CHECK(fc.short_long_ratio <= 160.0 / (p.alpha * p.alpha));
    }
    // sampled mode consistency at n = 2
    SampleOptions so;
    so.enumeration_guard = 1000;
    so.samples = 30000;
    ForwardCounts exact = forward_counts(W, 2, p);
    ForwardCounts mc = forward_counts(W, 2, p, so);
    CHECK(mc.sampled);
    CHECK(std::fabs(mc.count - exact.count) / exact.count < 0.05);
    CHECK(std::fabs(mc.total_length - exact.total_length) / exact.total_length < 0.05);
}

TEST_CASE("multi intersection points") {
    // n = 1: exactly four points at the closed-form locations for integer alpha
    for (double a : {8.0, 16.0}) {
        MapParams p(a);
        MultiIntersectionSet m1 = multi_intersections(1, p);
        CHECK(m1.count == 4);
        std::vector<TorusPoint> expect = {
            {0.0, 0.0}, {0.5, 0.0}, {0.0, 0.5}, {0.5, 0.5}};
        for (const auto& e : expect) {
            bool found = false;
            for (const auto& q : m1.points)
                if (circle_dist(q.x, e.x) < 1e-10 && circle_dist(q.y, e.y) < 1e-10) found = true;
            CHECK(found);
        }
    }
    // non-integer alpha still has exactly four
    CHECK(multi_intersections(1, MapParams(8.5)).count == 4);

    // n = 2 and 3 at alpha = 8: counts under C (2 alpha)^{2n} with C <= 10
    MapParams p8(8.0);
    MultiIntersectionSet m2 = multi_intersections(2, p8);
    CHECK(m2.count > 4);
    CHECK(static_cast<double>(m2.count) <= 10.0 * std::pow(16.0, 4.0));
    MultiIntersectionSet m3 = multi_intersections(3, p8);
    CHECK(static_cast<double>(m3.count) <= 10.0 * std::pow(16.0, 6.0));
    CHECK(m3.count > m2.count);
}

TEST_CASE("generation guard throws") {
    MapParams p(16.0);
    TorusSegment W{{0.4, 0.0}, {0.0, 1.0}, 1.0};
    GenerationOptions opt;
    opt.guard = 100;
    CHECK_THROWS_AS(backward_generation(W, 3, p, opt), GuardError);
}

TEST_CASE("max bad children stays bounded") {
    MapParams p(16.0);
    SplitMix64 rng(61);
    long long worst = 0;
    for (int trial = 0; trial < 10; ++trial) {
        TorusSegment W = random_stable_segment(rng, p);
        SampleOptions so;
        so.samples = 100;
        worst = std::max(worst, max_bad_children(W, 4, p, so));
    }
    CHECK(worst >= 1);
    CHECK(worst <= 64);
}
