#include "batlab/evolution.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include "batlab/parallel.hpp"

namespace batlab {

namespace {

double bump01(double u) {  // exp(-1/(1-u^2)) on (-1,1)
    double u2 = u * u;
    if (u2 >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - u2));
}

// integral of bump01 over (-1,1), computed once
double bump_mass() {
    static const double mass = [] {
        // composite Simpson, plenty for a C^infty integrand
        const int n = 1 << 14;
        double h = 2.0 / n;
        KahanSum s;
        for (int i = 0; i <= n; ++i) {
            double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
            s.add(w * bump01(-1.0 + i * h));
        }
        return s.value() * h / 3.0;
    }();
    return mass;
}

constexpr int kGL = 16;
const double kGLx[kGL] = {
    -0.9894009349916499, -0.9445750230732326, -0.8656312023878318, -0.7554044083550030,
    -0.6178762444026438, -0.4580167776572274, -0.2816035507792589, -0.0950125098376374,
    0.0950125098376374,  0.2816035507792589,  0.4580167776572274,  0.6178762444026438,
    0.7554044083550030,  0.8656312023878318,  0.9445750230732326,  0.9894009349916499};
const double kGLw[kGL] = {
    0.0271524594117541, 0.0622535239386479, 0.0951585116824928, 0.1246289712555339,
    0.1495959888165767, 0.1691565193950025, 0.1826034150449236, 0.1894506104550685,
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};

// Gauss-Legendre nodes/weights over [a,b] with ceil(points/16) panels.
void gl_nodes(double a, double b, int points, std::vector<double>& xs, std::vector<double>& ws) {
    xs.clear();
    ws.clear();
    if (b <= a) return;
    int panels = std::max(1, (points + kGL - 1) / kGL);
    double h = (b - a) / panels;
    for (int p = 0; p < panels; ++p) {
        double lo = a + p * h;
        for (int q = 0; q < kGL; ++q) {
            xs.push_back(lo + 0.5 * h * (kGLx[q] + 1.0));
            ws.push_back(0.5 * h * kGLw[q]);
        }
    }
}

}  // namespace

double EtaProfile::operator()(double t) const {
    return scale * bump01(4.0 * t - 3.0);
}

double EtaProfile::integral() const { return scale * bump_mass() / 4.0; }

double EtaProfile::first_moment() const {
    // int eta(t)(t - 1/2) dt; the default bump is symmetric about 3/4, so this
    // equals integral()/4, but compute it by quadrature to stay general
    std::vector<double> xs, ws;
    gl_nodes(0.5, 1.0, 128, xs, ws);
    KahanSum s;
    for (std::size_t i = 0; i < xs.size(); ++i) s.add(ws[i] * (*this)(xs[i]) * (xs[i] - 0.5));
    return s.value();
}

EtaProfile EtaProfile::default_profile() {
    EtaProfile e;
    e.scale = 4.0 / bump_mass();  // unit integral over (1/2, 1)
    return e;
}

ForcingSpec ForcingSpec::pulsed(ScalarClosure f) { return {PulsedForcing{std::move(f)}}; }

ForcingSpec ForcingSpec::separable(EtaProfile eta, ScalarClosure h) {
    if (!h.mean_zero()) throw std::invalid_argument("separable forcing: h must be mean-zero");
    double l2 = h.l2_norm();
    if (std::fabs(l2 - 1.0) > 1e-10)
        throw std::invalid_argument("separable forcing: h must have unit L2 norm");
    for (const auto& m : h.modes())
        if (m.kx != 0) throw std::invalid_argument("separable forcing: h must depend on y only");
    return {SeparableForcing{eta, std::move(h), l2}};
}

ForcingSpec ForcingSpec::general(std::function<ScalarClosure(double)> field) {
    return {GeneralForcing{std::move(field)}};
}

ForcingSpec ForcingSpec::default_separable() {
    return separable(EtaProfile::default_profile(), ScalarClosure::sine_y());
}

ScalarClosure ForcingSpec::at_time(double t) const {
    t -= std::floor(t);
    if (const auto* sep = std::get_if<SeparableForcing>(&kind)) {
        double e = sep->eta(t);
        if (e == 0.0) return ScalarClosure::zero();
        ScalarClosure f;
        f.add_term(e, std::make_shared<ScalarClosure>(sep->h));
        return f;
    }
    if (const auto* gen = std::get_if<GeneralForcing>(&kind)) return gen->field(t);
    throw std::logic_error("at_time is not defined for pulsed forcing (a Dirac comb)");
}

ScalarClosure discrete_step(const ScalarClosure& rho, const ScalarClosure& f,
                            const MapParams& p) {
    ScalarClosure out;
    out.add_term(1.0, std::make_shared<ScalarClosure>(pullback(rho, 1, p)));
    out.add_term(1.0, std::make_shared<ScalarClosure>(f));
    return out;
}

ScalarClosure partial_sum_rho(const ScalarClosure& f, int n, const MapParams& p) {
    if (n < 0) throw std::invalid_argument("partial_sum_rho: n must be >= 0");
    ScalarClosure out;
    auto base = std::make_shared<ScalarClosure>(f);
    out.add_term(1.0, base);
    for (int k = 1; k <= n; ++k)
        out.add_term(1.0, std::make_shared<ScalarClosure>(pullback(f, k, p)));
    return out;
}

GridField pulsed_diffusion_step(const GridField& rho, double kappa) {
    if (kappa < 0.0) throw std::invalid_argument("pulsed_diffusion_step: kappa must be >= 0");
    if (kappa == 0.0) return rho;
    SpectralField s = to_spectrum(rho);
    int M = s.M;
    const double c = -4.0 * M_PI * M_PI * kappa;
    for (int iy = 0; iy < M; ++iy) {
        double ky = SpectralField::freq(iy, M);
        for (int ix = 0; ix < M; ++ix) {
            double kx = SpectralField::freq(ix, M);
            s.at(ix, iy) *= std::exp(c * (kx * kx + ky * ky));
        }
    }
    return from_spectrum(s);
}

namespace {

// Quadrature form of int_a^b F_s o phi_{t,s} ds as a closure.
ScalarClosure duhamel_quadrature(const ForcingSpec& F, double t, const MapParams& p,
                                 int quad_points) {
    ScalarClosure out;
    if (t <= 0.0) return out;
    // panel split at the velocity switch
    std::vector<double> xs, ws, xs2, ws2;
    gl_nodes(0.0, std::min(t, 0.5), quad_points, xs, ws);
    gl_nodes(0.5, t, quad_points, xs2, ws2);
    xs.insert(xs.end(), xs2.begin(), xs2.end());
    ws.insert(ws.end(), ws2.begin(), ws2.end());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double s = xs[i];
        ScalarClosure Fs = F.at_time(s);
        if (Fs.modes().empty() && Fs.terms().empty()) continue;
        out.add_term(ws[i],
                     std::make_shared<ScalarClosure>(compose_inverse_flow(Fs, t, s, p)));
    }
    return out;
}

double closure_scale(const ScalarClosure& c) {
    // crude magnitude proxy used only for quadrature error estimates
    double s = 0.0;
    for (const auto& m : c.modes()) s += std::abs(m.amp);
    for (const auto& [w, t] : c.terms()) s += std::fabs(w) * closure_scale(*t);
    return s;
}

}  // namespace

QuadratureResult effective_forcing(const ForcingSpec& F, const MapParams& p, int quad_points) {
    QuadratureResult res;
    if (const auto* pulse = std::get_if<PulsedForcing>(&F.kind)) {
        res.value = pulse->f;  // delta at the period end: no flow applied
        return res;
    }
    if (F.is_separable()) {
        // F_s = eta(s) h(y) with s in (1/2,1); phi_{1,s} moves only x there,
        // so f_alpha = h(y) * int(eta) exactly, independent of alpha.
        const auto& sep = F.as_separable();
        ScalarClosure out;
        out.add_term(sep.eta.integral(), std::make_shared<ScalarClosure>(sep.h));
        res.value = out;
        return res;
    }
    res.value = duhamel_quadrature(F, 1.0, p, quad_points);
    ScalarClosure refined = duhamel_quadrature(F, 1.0, p, 2 * quad_points);
    res.error_estimate = std::fabs(closure_scale(refined) - closure_scale(res.value));
    return res;
}

ScalarClosure continuous_solution(const ScalarClosure& rho0, const ForcingSpec& F, double t,
                                  const MapParams& p, const ContinuousOptions& opt) {
    if (t < 0.0) throw std::invalid_argument("continuous_solution: t must be >= 0");
    int n = static_cast<int>(std::floor(t));
    double tau = t - n;

    ScalarClosure falpha;
    if (F.is_separable() && opt.force_quadrature) {
        ForcingSpec as_general = ForcingSpec::general([&F](double s) { return F.at_time(s); });
        falpha = effective_forcing(as_general, p, opt.quad_points).value;
    } else if (!std::holds_alternative<PulsedForcing>(F.kind)) {
        falpha = effective_forcing(F, p, opt.quad_points).value;
    } else {
        falpha = std::get<PulsedForcing>(F.kind).f;
    }

    ScalarClosure out;
    // rho0 o T^{-n} o phi_{tau,0}
    {
        ScalarClosure head = pullback(rho0, n, p);
        if (tau > 0.0) head = compose_inverse_flow(head, tau, 0.0, p);
        out.add_term(1.0, std::make_shared<ScalarClosure>(head));
    }
    // int_0^tau F_s o phi_{tau,s} ds
    if (tau > 0.0 && !std::holds_alternative<PulsedForcing>(F.kind)) {
        ScalarClosure mid = duhamel_quadrature(F, tau, p, opt.quad_points);
        out.add_term(1.0, std::make_shared<ScalarClosure>(mid));
    }
    // sum_{k=0}^{n-1} f_alpha o T^{-k} o phi_{tau,0}
    for (int k = 0; k < n; ++k) {
        ScalarClosure term = pullback(falpha, k, p);
        if (tau > 0.0) term = compose_inverse_flow(term, tau, 0.0, p);
        out.add_term(1.0, std::make_shared<ScalarClosure>(term));
    }
    return out;
}

}  // namespace batlab
