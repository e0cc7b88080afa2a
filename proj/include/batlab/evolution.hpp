#pragma once

#include <functional>
#include <optional>
#include <variant>

#include "batlab/scalar_field.hpp"

namespace batlab {

/// @file evolution.hpp
/// The forced evolution: the discrete iteration rho -> rho o T^{-1} + f,
/// partial sums of the limiting series, the continuous-time Duhamel solution,
/// the per-period effective forcing, and the pulsed diffusion step.

/// Smooth time profile supported in (1/2, 1). The default is the normalised
/// bump c * exp(-1/(1 - (4t-3)^2)), symmetric about t = 3/4 with unit integral.
struct EtaProfile {
    double scale = 1.0;
    double operator()(double t) const;
    /// integral over (1/2, 1); 1 for the default profile
    double integral() const;
    /// integral of eta(t) (t - 1/2) dt; 1/4 for the default (symmetric) profile
    double first_moment() const;
    static EtaProfile default_profile();
};

struct PulsedForcing {
    ScalarClosure f;
};

struct SeparableForcing {
    EtaProfile eta;
    ScalarClosure h;      // 1-D mean-zero profile in y, unit L^2(T) norm
    double h_l2 = 1.0;    // cached norm of h
};

struct GeneralForcing {
    std::function<ScalarClosure(double t)> field;  // t in [0,1), period 1
};

struct ForcingSpec {
    std::variant<PulsedForcing, SeparableForcing, GeneralForcing> kind;

    static ForcingSpec pulsed(ScalarClosure f);
    /// validates mean-zero h and ||h||_{L^2} = 1 within 1e-10
    static ForcingSpec separable(EtaProfile eta, ScalarClosure h);
    static ForcingSpec general(std::function<ScalarClosure(double)> field);
    /// default separable forcing: default eta, h = sqrt(2) sin(2 pi y)
    static ForcingSpec default_separable();

    bool is_separable() const { return std::holds_alternative<SeparableForcing>(kind); }
    const SeparableForcing& as_separable() const { return std::get<SeparableForcing>(kind); }
    /// F_t as a closure (zero outside the support for separable forcing)
    ScalarClosure at_time(double t) const;
};

struct EvolutionConfig {
    double alpha;
    int n_steps = 1;
    double kappa = 0.0;  // pulsed diffusivity; > 0 forces grid-based state
    int grid_M = 256;
};

/// K(rho) = rho o T^{-1} + f.
ScalarClosure discrete_step(const ScalarClosure& rho, const ScalarClosure& f,
                            const MapParams& p);

/// sum_{k=0}^{n} f o T^{-k}.
ScalarClosure partial_sum_rho(const ScalarClosure& f, int n, const MapParams& p);

/// Heat multiplier exp(-4 pi^2 kappa |k|^2) applied in spectral space.
GridField pulsed_diffusion_step(const GridField& rho, double kappa);

struct QuadratureResult {
    ScalarClosure value;
    double error_estimate = 0.0;  // node-doubling difference, L2-ish proxy
};

/// f_alpha = int_0^1 F_s o phi_{1,s} ds. Separable forcing reduces to the
/// closed form h(y) * int(eta); general forcing integrates by Gauss-Legendre
/// panels split at s = 1/2 (the velocity switch).
QuadratureResult effective_forcing(const ForcingSpec& F, const MapParams& p,
                                   int quad_points = 64);

struct ContinuousOptions {
    int quad_points = 64;
    /// when set, bypass the separable closed form so the quadrature path is
    /// exercised (used by the cross-check tests)
    bool force_quadrature = false;
};

/// rho(n + tau) = rho0 o T^{-n} o phi_{tau,0} + int_0^tau F_s o phi_{tau,s} ds
///             + sum_{k<n} f_alpha o T^{-k} o phi_{tau,0}.
ScalarClosure continuous_solution(const ScalarClosure& rho0, const ForcingSpec& F, double t,
                                  const MapParams& p, const ContinuousOptions& opt = {});

}  // namespace batlab
