#pragma once

#include <vector>

#include "batlab/decay_fit.hpp"
#include "batlab/evolution.hpp"
#include "batlab/scalar_field.hpp"

namespace batlab {

/// @file diagnostics.hpp
/// Quantitative mixing and spectrum diagnostics: correlation decay series,
/// projected (mollified) correlations and their off-diagonal sums, the
/// cumulative spectrum curve with its log N fit, and the energy-flux budget.

struct MixingPoint {
    int n;
    double value;
    bool alias;  // expansion alpha^{2n} exceeds M/4 at this grid
};

struct MixingSeries {
    std::vector<MixingPoint> points;
    DecayFit fit;            // over alias-free points
    DecayFit fit_all;        // over everything above the floor
    int M = 0;
    double alpha = 0.0;
};

/// |<f o T^{-n}, g>| for n = 0..n_max by streaming grid quadrature.
/// Pre: f, g mean-zero.
MixingSeries correlation_series(const ScalarClosure& f, const ScalarClosure& g, int n_max,
                                int M, const MapParams& p);

/// |<f o T^{-n}, g o Phi_{0,t}>|; t must lie in [1/2 + alpha^{-1/2}, 1].
double flowed_correlation(const ScalarClosure& f, const ScalarClosure& g, int n, double t,
                          int M, const MapParams& p);

struct ProjectedCorrelation {
    double value = 0.0;
    bool alias_n = false;
    bool alias_m = false;
};

/// int P_{<=N}(f o T^{-n}) P_{<=N}(g o T^{-m}) via sample -> FFT -> multiplier.
ProjectedCorrelation projected_correlation(const ScalarClosure& f, const ScalarClosure& g,
                                           int n, int m, const KernelSpec& ker, int M,
                                           const MapParams& p);

struct DualityCheck {
    double spectral_route = 0.0;  // k-space with the multiplier split phi * phi
    double physical_route = 0.0;  // P^2 on one factor, grid product
};

/// The same projected correlation through two algebraically different
/// pipelines; they agree to round-off when the FFT bridge is consistent.
DualityCheck projected_duality_check(const ScalarClosure& f, const ScalarClosure& g, int n,
                                     int m, const KernelSpec& ker, int M, const MapParams& p);

struct OffDiagonalConfig {
    int N = 32;
    int n_max = 4;
    double rate_c = 0.25;  // fallback decay rate for the threshold index
    double n_star(double alpha) const;
};

struct OffDiagonalSum {
    double value = 0.0;     // |sum_{n=1}^{n_max} sum_{m<n} <P f_n, P f_m>|
    double diagonal = 0.0;  // sum_{n=0}^{n_max} ||P f_n||^2
    std::vector<double> pair_terms;  // row-major over (n, m), m < n
    bool any_alias = false;
};

/// Truncated off-diagonal double sum of the projected series.
/// Pre: f mean-zero, unit L2.
OffDiagonalSum offdiagonal_sum(const ScalarClosure& f, const KernelSpec& ker,
                               const OffDiagonalConfig& cfg, int M, const MapParams& p);

struct BatchelorReport {
    double alpha = 0.0;
    int n_steps = 0;
    int M = 0;
    std::vector<CumulativeMass> masses;
    double slope = 0.0;  // d mass / d log N over the fit window
    double intercept = 0.0;
    double r_squared = 0.0;
    double slope_log_alpha = 0.0;
    bool field_alias = false;  // the sampled partial sum exceeded the guard
    int fit_n_lo = 4;          // fit window: cutoffs in [4, M/8]
    int fit_n_hi = 0;
};

/// Cumulative mass of the truncated series over the cutoffs, with the
/// ordinary least-squares fit of mass against log N.
/// Pre: f mean-zero, unit L2; cutoffs < M/2.
BatchelorReport batchelor_curve(const ScalarClosure& f, int n_steps,
                                const std::vector<int>& cutoffs, int M, const MapParams& p);

struct FluxTerm {
    double value = 0.0;
    double error_estimate = 0.0;  // node-doubling difference
};

struct FluxReport {
    FluxTerm first_term;  // double time integral of the within-period input
    FluxTerm n0_term;
    std::vector<FluxTerm> tail_terms;          // n = 1..n_max
    std::vector<std::pair<int, double>> T_N;   // flux through each cutoff
    double limit_estimate = 0.0;               // first + n0 + tails
    double last_tail_magnitude = 0.0;          // truncation-error proxy
};

struct FluxOptions {
    int n_max = 6;
    int quad_points = 32;  // per time panel
    int M = 1024;
};

/// Energy-flux budget for separable forcing: the double-integral first term,
/// the n = 0 term, the mixing tail, and T_N from the truncated limit state.
FluxReport flux_report(const ForcingSpec& F, const std::vector<int>& cutoffs,
                       const MapParams& p, const FluxOptions& opt = {});

}  // namespace batlab
