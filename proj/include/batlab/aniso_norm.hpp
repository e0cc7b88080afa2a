#pragma once

#include <cstdint>
#include <vector>

#include "batlab/decay_fit.hpp"
#include "batlab/scalar_field.hpp"
#include "batlab/segment_geometry.hpp"

namespace batlab {

/// @file aniso_norm.hpp
/// Sampled estimators for the anisotropic curve norms (weak stable, strong
/// stable, strong unstable) and the empirical transfer-operator decay. All
/// estimators are certified lower bounds of the corresponding suprema:
/// finite dictionaries of admissible curves and test functions, fixed seeds.

struct NormParams {
    double p = 0.25;
    double beta = 0.5;
    NormParams() = default;
    NormParams(double p_, double beta_);
};

/// Test function along a curve:
///   value(s) = scale * ( Re(tau * e^{i omega s}) + ramp * (s - ramp_center) ).
/// The constant, linear-ramp and low-frequency sinusoid shapes all fit here.
struct CurveTest {
    Complex tau{1.0, 0.0};
    double omega = 0.0;
    double ramp = 0.0;
    double ramp_center = 0.0;
    double scale = 1.0;
    double value(double s) const;
};

/// A curve with its weak (C^1-normalised) and strong (Holder-normalised)
/// test families. Strong tests are the weak shapes rescaled by a measured
/// Holder quotient so the families nest verifiably.
struct DictionaryEntry {
    TorusSegment curve;
    std::vector<CurveTest> weak_tests;    // |phi|_{C^1} <= 1
    std::vector<CurveTest> strong_tests;  // |phi|_{C^beta} <= |W|^{-p}
};

struct CurveDictionary {
    std::vector<DictionaryEntry> entries;
    std::uint64_t seed = 0;
    NormParams params;

    /// 64 vertical curves (stratified x), 64 seeded stable-cone curves with
    /// lengths in (0,2], 8 test shapes each (constant, ramp, three sin/cos).
    static CurveDictionary default_dictionary(const MapParams& p, NormParams np = {},
                                              std::uint64_t seed = 7001, int n_vertical = 64,
                                              int n_random = 64);
};

struct PairDictionary {
    struct Pair {
        TorusSegment first;
        double separation;  // |h| <= 1/alpha, second = first + h * normal
        Vec2 offset;
    };
    std::vector<Pair> pairs;
    std::uint64_t seed = 0;
    /// 128 seeded parallel pairs, separations log-uniform in [alpha^-2, alpha^-1].
    static PairDictionary default_dictionary(const MapParams& p, std::uint64_t seed = 799,
                                             int n_pairs = 128);
};

struct LineQuadratureOptions {
    int nodes_per_panel = 8;
    long long panel_guard = 10'000;  // fall back to adaptive bisection beyond
    int adaptive_depth = 14;
};

struct LineIntegralResult {
    double value = 0.0;
    double error_estimate = 0.0;  // node-doubling difference
    bool adaptive_fallback = false;
    long long panels = 0;
};

/// Gauss-Legendre quadrature of f * test along W with panel splits at the
/// backward-orbit singularity crossings of f (the integrand is piecewise
/// smooth between them).
LineIntegralResult line_integral(const ScalarClosure& f, const TorusSegment& W,
                                 const CurveTest& test, const MapParams& p,
                                 const LineQuadratureOptions& opt = {});

/// max over the dictionary of |integral of f phi|: a lower bound of |f|_w.
double weak_norm_estimate(const ScalarClosure& f, const CurveDictionary& dict,
                          const MapParams& p, const LineQuadratureOptions& qopt = {});

/// Lower bound of the strong stable norm (Holder-normalised tests).
double strong_stable_estimate(const ScalarClosure& f, const CurveDictionary& dict,
                              const MapParams& p, const LineQuadratureOptions& qopt = {});

/// Lower bound of the strong unstable norm: sup over parallel equal-length
/// pairs of d^{-p} |int_W1 f - int_W2 f|.
double unstable_norm_estimate(const ScalarClosure& f, const PairDictionary& pairs,
                              NormParams np, const MapParams& p,
                              const LineQuadratureOptions& qopt = {});

struct TransferDecayOptions {
    long long piece_budget = 400'000'000;  // exact enumeration budget per curve set
    bool fit_skip_n0 = true;
};

struct TransferDecaySeries {
    std::vector<std::pair<int, double>> estimates;  // (n, weak estimate)
    int n_evaluated = 0;  // series may stop early when the budget binds
    bool budget_exhausted = false;
    DecayFit fit;
};

/// Weak-norm estimates of f o T^{-n} for n = 0..n_max. For a plain finite
/// Fourier field the line integrals are evaluated exactly piece-by-piece on
/// the generation decomposition (closed forms per Fourier mode per test), so
/// the geometric decay is visible far below composite-quadrature noise.
TransferDecaySeries transfer_decay_series(const ScalarClosure& f, int n_max,
                                          const CurveDictionary& dict, const MapParams& p,
                                          const TransferDecayOptions& opt = {});

}  // namespace batlab
