#pragma once

#include <complex>
#include <memory>
#include <utility>
#include <vector>

#include "batlab/torus_map.hpp"

namespace batlab {

/// @file scalar_field.hpp
/// Scalar-field representations: exact backward-characteristic closures,
/// sampled grids, unitary spectra, sharp and mollified projections, and
/// Sobolev norms. Closures are evaluated exactly (no interpolation): a
/// closure is a finite Fourier sum composed with a chain of exact point
/// transforms, plus a linear combination of sub-closures sharing the chain.

using Complex = std::complex<double>;

/// One Fourier mode: coefficient of e^{2 pi i k.z}. Real fields carry the
/// two-sided, conjugate-symmetric list, so spectra match the DFT directly.
struct Mode {
    int kx = 0;
    int ky = 0;
    Complex amp;
};

/// One step of a point-transform chain, applied to the evaluation point.
struct OrbitStep {
    enum class Kind {
        inverse_map,  // z -> T^{-1} z
        forward_map,  // z -> T z
        shear_x,      // x += amount * |y - 1/2|   (amount may be negative)
        shear_y,      // y += amount * |x - 1/2|
    };
    Kind kind;
    double amount = 0.0;  // alpha for map steps, shear amplitude otherwise
};

class ScalarClosure {
public:
    ScalarClosure() = default;
    explicit ScalarClosure(std::vector<Mode> modes) : modes_(std::move(modes)) {}

    /// value(z) = sum of modes at w + sum coeff * term(w), w = chain(z).
    double value(TorusPoint z) const;

    const std::vector<Mode>& modes() const { return modes_; }
    const std::vector<OrbitStep>& orbit() const { return orbit_; }
    const std::vector<std::pair<double, std::shared_ptr<const ScalarClosure>>>& terms() const {
        return terms_;
    }

    void push_step(OrbitStep s) { orbit_.push_back(s); }
    void add_term(double coeff, std::shared_ptr<const ScalarClosure> f) {
        terms_.emplace_back(coeff, std::move(f));
    }

    /// True when no constituent carries a k = 0 mode (means are preserved by
    /// every transform in the chain, all of which are measure-preserving).
    bool mean_zero() const;

    /// L^2 norm from the mode list alone; only valid for chains of
    /// measure-preserving steps (all of ours are), where it is exact.
    double l2_norm() const;

    /// Conservative gradient-scale factor used by the aliasing guard:
    /// full map steps contribute alpha^2, shears max(1, |amount|).
    double expansion_factor() const;

    /// Deepest count of consecutive inverse-map steps in the tree; used to
    /// locate singularity crossings for panel-split line quadrature.
    int backward_depth() const;

    /// Largest |k| component over all constituent modes.
    int max_abs_mode() const;

    // -- constructors for common fields --
    static ScalarClosure zero();
    static ScalarClosure constant(double c);
    /// sqrt(2) sin(2 pi k y), unit L^2, mean zero.
    static ScalarClosure sine_y(int k = 1, double amplitude = 1.0);
    /// sqrt(2) sin(2 pi k x).
    static ScalarClosure sine_x(int k = 1, double amplitude = 1.0);
    /// sqrt(2) cos(2 pi (kx x + ky y)).
    static ScalarClosure cosine(int kx, int ky, double amplitude = 1.0);
    /// Real field from a one-sided list: f = sum Re(2 a_k e^{2 pi i k.z}).
    static ScalarClosure from_half_modes(const std::vector<Mode>& half);

private:
    std::vector<Mode> modes_;
    std::vector<OrbitStep> orbit_;
    std::vector<std::pair<double, std::shared_ptr<const ScalarClosure>>> terms_;
};

TorusPoint apply_orbit(const std::vector<OrbitStep>& orbit, TorusPoint z);

/// f composed with T^{-n}: the evaluation point is pulled back n steps.
ScalarClosure pullback(const ScalarClosure& f, int n, const MapParams& p);
/// f composed with phi_{t,s} = (Phi_{s,t})^{-1}, 0 <= s <= t <= 1.
ScalarClosure compose_inverse_flow(const ScalarClosure& f, double t, double s,
                                   const MapParams& p);
/// f composed with Phi_{0,t}, t in [0,1].
ScalarClosure compose_forward_flow(const ScalarClosure& f, double t, const MapParams& p);

/// M x M samples at z_ij = (i/M, j/M), row-major in y: values[iy*M + ix].
struct GridField {
    int M = 0;
    std::vector<double> values;
    bool alias_flag = false;  // expansion_factor > M/4 at sampling time
    double& at(int ix, int iy) { return values[static_cast<std::size_t>(iy) * M + ix]; }
    double at(int ix, int iy) const { return values[static_cast<std::size_t>(iy) * M + ix]; }
    double mean() const;
};

/// FFT-layout coefficients, unitary in the Parseval sense:
/// sum_k |c(k)|^2 = (1/M^2) sum_z |g(z)|^2.
struct SpectralField {
    int M = 0;
    std::vector<Complex> coeff;  // index [ky*M + kx], FFT frequency order
    bool alias_flag = false;
    Complex& at(int kx, int ky) { return coeff[static_cast<std::size_t>(ky) * M + kx]; }
    Complex at(int kx, int ky) const { return coeff[static_cast<std::size_t>(ky) * M + kx]; }
    /// signed frequency of index i in [0, M)
    static int freq(int i, int M) { return i < M / 2 ? i : i - M; }
    double l2_norm() const;
};

/// Exact evaluation of f on the grid; parallel over rows. M must be a power
/// of two >= 8.
GridField sample(const ScalarClosure& f, int M);

SpectralField to_spectrum(const GridField& g);
GridField from_spectrum(const SpectralField& s);

/// Zero all coefficients with |k| > N (Euclidean). Rejects N >= M/2.
SpectralField project_sharp(const SpectralField& s, int N);

/// Smooth low-pass profile: the tensor bump kernel, unit mass, even,
/// supported in [-1,1]^2. phi_hat is its continuous Fourier transform,
/// computed once by quadrature and cached with cubic interpolation.
struct KernelSpec {
    int N = 1;
    explicit KernelSpec(int cutoff);
    /// 1-D transform of the bump profile (real, even, phi_hat(0) = 1).
    static double phi_hat_1d(double u);
    /// 2-D multiplier at integer frequency k for this cutoff.
    double multiplier(int kx, int ky) const;
};

/// Multiply coefficient k by phi_hat(k/N) (the P_{<=N} smoothing).
SpectralField project_mollified(const SpectralField& s, const KernelSpec& ker);

/// ( sum_k (1+|k|^2)^order |c(k)|^2 )^{1/2}; order may be negative.
double sobolev_norm(const SpectralField& s, double order);

/// ||Pi_{<=N} s||^2 for each cutoff; nondecreasing in N.
struct CumulativeMass {
    int N;
    double mass;
    bool alias_flag;
};
std::vector<CumulativeMass> cumulative_mass(const SpectralField& s,
                                            const std::vector<int>& cutoffs);

/// (1/M^2) sum a*b; rectangle rule, spectrally accurate for smooth periodic
/// integrands. Throws on dimension mismatch.
double inner_product(const GridField& a, const GridField& b);

/// Streaming quadrature of (1/M^2) sum f(z_ij) g(z_ij) without materialising
/// grids; deterministic row-ordered reduction.
double correlate(const ScalarClosure& f, const ScalarClosure& g, int M);

}  // namespace batlab
