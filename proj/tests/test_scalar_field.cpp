#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "batlab/parallel.hpp"
#include "batlab/rng.hpp"
#include "batlab/scalar_field.hpp"

using namespace batlab;

TEST_CASE("sampling basics") {
    GridField ones = sample(ScalarClosure::constant(1.0), 16);
    for (double v : ones.values) CHECK(v == doctest::Approx(1.0));

    GridField siny = sample(ScalarClosure::sine_y(), 64);
    CHECK(std::fabs(siny.mean()) < 1e-12);

    CHECK_THROWS(sample(ScalarClosure::constant(1.0), 12));  // not a power of two
}

TEST_CASE("single mode spectra are exact") {
    int M = 64;
    for (auto [kx, ky] : {std::pair{0, 5}, {3, 0}, {7, -2}}) {
        ScalarClosure f = ScalarClosure::cosine(kx, ky);
        SpectralField s = to_spectrum(sample(f, M));
        Complex c = s.at((kx % M + M) % M, (ky % M + M) % M);
        CHECK(std::abs(c - Complex(std::sqrt(0.5), 0.0)) < 1e-10);
        // everything else near zero
        double rest = 0.0;
        for (int iy = 0; iy < M; ++iy)
            for (int ix = 0; ix < M; ++ix) {
                int fx = SpectralField::freq(ix, M), fy = SpectralField::freq(iy, M);
                if ((fx == kx && fy == ky) || (fx == -kx && fy == -ky)) continue;
                rest = std::max(rest, std::abs(s.at(ix, iy)));
            }
        CHECK(rest < 1e-12);
    }
}

TEST_CASE("Parseval and conjugate symmetry on random fields") {
    SplitMix64 rng(91);
    int M = 32;
    GridField g;
    g.M = M;
    g.values.resize(static_cast<std::size_t>(M) * M);
    for (auto& v : g.values) v = rng.uniform(-1.0, 1.0);
    SpectralField s = to_spectrum(g);

    KahanSum grid2;
    for (double v : g.values) grid2.add(v * v);
    double lhs = s.l2_norm() * s.l2_norm();
    CHECK(lhs == doctest::Approx(grid2.value() / (M * M)).epsilon(1e-10));

    for (int iy = 0; iy < M; ++iy)
        for (int ix = 0; ix < M; ++ix) {
            Complex a = s.at(ix, iy);
            Complex b = s.at((M - ix) % M, (M - iy) % M);
            CHECK(std::abs(a - std::conj(b)) < 1e-12);
        }

    GridField back = from_spectrum(s);
    for (std::size_t i = 0; i < g.values.size(); ++i)
        CHECK(back.values[i] == doctest::Approx(g.values[i]).epsilon(1e-10));
}

TEST_CASE("sharp projection behaviour") {
    int M = 64;
    SpectralField s = to_spectrum(sample(ScalarClosure::cosine(0, 5), M));
    CHECK(project_sharp(s, 5).l2_norm() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(project_sharp(s, 4).l2_norm() < 1e-12);

    // idempotent and contractive
    SplitMix64 rng(5);
    GridField g;
    g.M = M;
    g.values.resize(static_cast<std::size_t>(M) * M);
    for (auto& v : g.values) v = rng.uniform(-1.0, 1.0);
    SpectralField r = to_spectrum(g);
    SpectralField p1 = project_sharp(r, 9);
    SpectralField p2 = project_sharp(p1, 9);
    for (std::size_t i = 0; i < p1.coeff.size(); ++i)
        CHECK(std::abs(p1.coeff[i] - p2.coeff[i]) == 0.0);
    CHECK(p1.l2_norm() <= r.l2_norm() + 1e-15);

    CHECK_THROWS(project_sharp(r, M / 2));
}

TEST_CASE("mollified projection multiplier") {
    CHECK(KernelSpec::phi_hat_1d(0.0) == doctest::Approx(1.0).epsilon(1e-10));
    // |phi_hat| <= 1 everywhere (nonnegative unit-mass bump)
    for (double u = 0.0; u < 40.0; u += 0.0371)
        CHECK(std::fabs(KernelSpec::phi_hat_1d(u)) <= 1.0 + 1e-12);
    // Schwartz-type falloff is far below 1e-8 long before the table ends
    CHECK(std::fabs(KernelSpec::phi_hat_1d(200.0)) < 1e-12);

    int M = 64;
    KernelSpec ker(8);
    SpectralField c = to_spectrum(sample(ScalarClosure::constant(2.5), M));
    SpectralField pc = project_mollified(c, ker);
    CHECK(pc.at(0, 0).real() == doctest::Approx(2.5).epsilon(1e-10));

    // ||P_{<=N}|| <= 1 on random fields
    SplitMix64 rng(6);
    GridField g;
    g.M = M;
    g.values.resize(static_cast<std::size_t>(M) * M);
    for (auto& v : g.values) v = rng.uniform(-1.0, 1.0);
    SpectralField s = to_spectrum(g);
    CHECK(project_mollified(s, ker).l2_norm() <= s.l2_norm() + 1e-15);
}

TEST_CASE("sobolev norm of unit modes") {
    int M = 64;
    for (int k : {1, 3, 5}) {
        SpectralField s = to_spectrum(sample(ScalarClosure::cosine(0, k), M));
        CHECK(sobolev_norm(s, 0.0) == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(sobolev_norm(s, -1.0) ==
              doctest::Approx(std::pow(1.0 + k * k, -0.5)).epsilon(1e-10));
    }
}

TEST_CASE("cumulative mass of a single mode is a step") {
    int M = 64;
    SpectralField s = to_spectrum(sample(ScalarClosure::cosine(3, 4), M));  // |k| = 5
    auto rows = cumulative_mass(s, {2, 4, 5, 8, 31});
    CHECK(rows[0].mass < 1e-12);
    CHECK(rows[1].mass < 1e-12);
    CHECK(rows[2].mass == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(rows[3].mass == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(rows[4].mass == doctest::Approx(s.l2_norm() * s.l2_norm()).epsilon(1e-10));
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].mass >= rows[i - 1].mass - 1e-15);
}

TEST_CASE("inner products") {
    int M = 64;
    GridField a = sample(ScalarClosure::sine_y(1), M);
    GridField b = sample(ScalarClosure::sine_y(2), M);
    CHECK(inner_product(a, a) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::fabs(inner_product(a, b)) < 1e-12);

    GridField c = sample(ScalarClosure::sine_y(1), 32);
    CHECK_THROWS(inner_product(a, c));
}

TEST_CASE("pullback is exact composition") {
    MapParams p(8.0);
    ScalarClosure f = ScalarClosure::sine_y();
    ScalarClosure f1 = pullback(f, 1, p);

    // (0.25, 0.25) is a fixed point at alpha = 8
    CHECK(f1.value({0.25, 0.25}) == doctest::Approx(std::sqrt(2.0)));

    SplitMix64 rng(77);
    for (int i = 0; i < 1000; ++i) {
        TorusPoint z{rng.uniform(), rng.uniform()};
        CHECK(f1.value(z) == doctest::Approx(f.value(inverse_map(z, p))).epsilon(1e-12));
    }

    ScalarClosure f0 = pullback(f, 0, p);
    CHECK(f0.value({0.1, 0.2}) == f.value({0.1, 0.2}));
}

TEST_CASE("pullback preserves the L2 norm under quadrature") {
    MapParams p(8.0);
    ScalarClosure f1 = pullback(ScalarClosure::sine_y(), 1, p);
    // resolution rule: M >= 100 alpha^{2n} for 1% accuracy -> 8192
    CHECK(correlate(f1, f1, 8192) == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("correlate change of variables identity") {
    MapParams p(8.0);
    ScalarClosure f = ScalarClosure::sine_y();
    ScalarClosure g = ScalarClosure::cosine(1, 1);
    // <f o T^{-1}, g> = <f, g o T>
    double lhs = correlate(pullback(f, 1, p), g, 2048);
    double rhs = correlate(f, compose_forward_flow(g, 1.0, p), 2048);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
}

TEST_CASE("alias guard flags under-resolved pullbacks") {
    MapParams p(16.0);
    ScalarClosure f2 = pullback(ScalarClosure::sine_y(), 2, p);  // factor 16^4
    CHECK(sample(f2, 256).alias_flag);
    ScalarClosure f1 = pullback(ScalarClosure::sine_y(), 1, p);  // factor 256
    CHECK(!sample(f1, 2048).alias_flag);
}

TEST_CASE("flow composition closures match the flow maps") {
    MapParams p(8.5);
    ScalarClosure f = ScalarClosure::cosine(2, -1);
    SplitMix64 rng(3);
    for (int i = 0; i < 300; ++i) {
        TorusPoint z{rng.uniform(), rng.uniform()};
        double t = rng.uniform(0.0, 1.0);
        ScalarClosure ff = compose_forward_flow(f, t, p);
        CHECK(ff.value(z) == doctest::Approx(f.value(flow_map(0.0, t, z, p))).epsilon(1e-10));
        double s = rng.uniform(0.0, t);
        ScalarClosure fi = compose_inverse_flow(f, t, s, p);
        CHECK(fi.value(z) ==
              doctest::Approx(f.value(inverse_flow_map(t, s, z, p))).epsilon(1e-10));
    }
}

TEST_CASE("projection sandwich with the module kernel") {
    // (1/C1)||P_{<=sqrt N} g||^2 - ||g||_{H^{-1}}^2/N <= ||Pi_{<=N} g||^2
    //                                <= C1 ||P_{<=C1 N} g||^2   with C1 <= 16
    const double C1 = 16.0;
    int M = 1024;
    SplitMix64 rng(2718);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Mode> half;
        int nmodes = 2 + static_cast<int>(rng.next() % 6);
        for (int m = 0; m < nmodes; ++m) {
            int kx = static_cast<int>(rng.next() % 97) - 48;
            int ky = static_cast<int>(rng.next() % 97) - 48;
            if (kx == 0 && ky == 0) kx = 1;
            half.push_back({kx, ky, Complex(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0))});
        }
        SpectralField s = to_spectrum(sample(ScalarClosure::from_half_modes(half), M));
        int N = 8 << (rng.next() % 5);  // 8..128 = M/8
        double pi_n = project_sharp(s, N).l2_norm();
        double p_sqrt =
            project_mollified(s, KernelSpec(static_cast<int>(std::sqrt(N)))).l2_norm();
        double p_big = project_mollified(s, KernelSpec(static_cast<int>(C1) * N)).l2_norm();
        double hm1 = sobolev_norm(s, -1.0);
        CHECK(pi_n * pi_n <= C1 * p_big * p_big + 1e-12);
        CHECK(p_sqrt * p_sqrt / C1 - hm1 * hm1 / N <= pi_n * pi_n + 1e-12);
    }
}
