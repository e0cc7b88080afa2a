#include "batlab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "batlab/parallel.hpp"

namespace batlab {

namespace {

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

void gl_nodes(double a, double b, int points, std::vector<double>& xs,
              std::vector<double>& ws) {
    xs.clear();
    ws.clear();
    if (b <= a) return;
    int panels = std::max(1, (points + kGL - 1) / kGL);
    double h = (b - a) / panels;
    for (int pnl = 0; pnl < panels; ++pnl) {
        double lo = a + pnl * h;
        for (int q = 0; q < kGL; ++q) {
            xs.push_back(lo + 0.5 * h * (kGLx[q] + 1.0));
            ws.push_back(0.5 * h * kGLw[q]);
        }
    }
}

bool alias_at(const MapParams& p, int n, int M) {
    return std::pow(p.alpha, 2.0 * n) > M / 4.0;
}

}  // namespace

MixingSeries correlation_series(const ScalarClosure& f, const ScalarClosure& g, int n_max,
                                int M, const MapParams& p) {
    if (!f.mean_zero() || !g.mean_zero())
        throw std::invalid_argument("correlation_series: f and g must be mean-zero");
    MixingSeries out;
    out.M = M;
    out.alpha = p.alpha;
    for (int n = 0; n <= n_max; ++n) {
        double v = correlate(pullback(f, n, p), g, M);
        out.points.push_back({n, std::fabs(v), alias_at(p, n, M)});
    }
    std::vector<std::pair<int, double>> clean, all;
    for (const auto& pt : out.points) {
        all.emplace_back(pt.n, pt.value);
        if (!pt.alias) clean.emplace_back(pt.n, pt.value);
    }
    out.fit = fit_exponential_decay(clean);
    out.fit_all = fit_exponential_decay(all);
    return out;
}

double flowed_correlation(const ScalarClosure& f, const ScalarClosure& g, int n, double t,
                          int M, const MapParams& p) {
    double lo = 0.5 + 1.0 / std::sqrt(p.alpha);
    if (t < lo - 1e-12 || t > 1.0 + 1e-12)
        throw std::invalid_argument(
            "flowed_correlation: t must lie in [1/2 + alpha^{-1/2}, 1]");
    return correlate(pullback(f, n, p), compose_forward_flow(g, t, p), M);
}

namespace {

SpectralField mollified_spectrum(const ScalarClosure& f, int n, const KernelSpec& ker, int M,
                                 const MapParams& p) {
    return project_mollified(to_spectrum(sample(pullback(f, n, p), M)), ker);
}

double spectra_inner(const SpectralField& a, const SpectralField& b) {
    KahanSum acc;
    std::size_t n = a.coeff.size();
    for (std::size_t i = 0; i < n; ++i)
        acc.add((a.coeff[i] * std::conj(b.coeff[i])).real());
    return acc.value();
}

}  // namespace

ProjectedCorrelation projected_correlation(const ScalarClosure& f, const ScalarClosure& g,
                                           int n, int m, const KernelSpec& ker, int M,
                                           const MapParams& p) {
    if (!f.mean_zero() || !g.mean_zero())
        throw std::invalid_argument("projected_correlation: fields must be mean-zero");
    ProjectedCorrelation out;
    out.alias_n = alias_at(p, n, M);
    out.alias_m = alias_at(p, m, M);
    SpectralField fa = mollified_spectrum(f, n, ker, M, p);
    SpectralField gb = mollified_spectrum(g, m, ker, M, p);
    out.value = spectra_inner(fa, gb);
    return out;
}

DualityCheck projected_duality_check(const ScalarClosure& f, const ScalarClosure& g, int n,
                                     int m, const KernelSpec& ker, int M, const MapParams& p) {
    DualityCheck out;
    out.spectral_route = projected_correlation(f, g, n, m, ker, M, p).value;
    // physical route: P^2 applied to one factor, then a plain grid product
    SpectralField fa =
        project_mollified(mollified_spectrum(f, n, ker, M, p), ker);  // phi_hat^2
    GridField pf = from_spectrum(fa);
    GridField gg = sample(pullback(g, m, p), M);
    out.physical_route = inner_product(pf, gg);
    return out;
}

double OffDiagonalConfig::n_star(double alpha) const {
    return 3.0 * std::log(static_cast<double>(N)) / (rate_c * std::log(alpha));
}

OffDiagonalSum offdiagonal_sum(const ScalarClosure& f, const KernelSpec& ker,
                               const OffDiagonalConfig& cfg, int M, const MapParams& p) {
    if (cfg.n_max < 1) throw std::invalid_argument("offdiagonal_sum: n_max must be >= 1");
    OffDiagonalSum out;
    // cache the mollified spectra when they fit comfortably in memory
    double bytes = static_cast<double>(cfg.n_max + 1) * M * M * 16.0;
    bool cached = bytes < 3e9;
    std::vector<SpectralField> spectra;
    if (cached) {
        for (int n = 0; n <= cfg.n_max; ++n)
            spectra.push_back(mollified_spectrum(f, n, ker, M, p));
    }
    KahanSum total, diag;
    for (int n = 0; n <= cfg.n_max; ++n) {
        SpectralField sn = cached ? spectra[static_cast<std::size_t>(n)]
                                  : mollified_spectrum(f, n, ker, M, p);
        diag.add(spectra_inner(sn, sn));
        out.any_alias = out.any_alias || alias_at(p, n, M);
        for (int m = 0; m < n; ++m) {
            SpectralField sm = cached ? spectra[static_cast<std::size_t>(m)]
                                      : mollified_spectrum(f, m, ker, M, p);
            double term = spectra_inner(sn, sm);
            out.pair_terms.push_back(term);
            total.add(term);
        }
    }
    out.value = std::fabs(total.value());
    out.diagonal = diag.value();
    return out;
}

BatchelorReport batchelor_curve(const ScalarClosure& f, int n_steps,
                                const std::vector<int>& cutoffs, int M, const MapParams& p) {
    if (!f.mean_zero()) throw std::invalid_argument("batchelor_curve: f must be mean-zero");
    if (cutoffs.empty()) throw std::invalid_argument("batchelor_curve: cutoffs are empty");
    BatchelorReport rep;
    rep.alpha = p.alpha;
    rep.n_steps = n_steps;
    rep.M = M;
    rep.fit_n_hi = M / 8;

    ScalarClosure rho = partial_sum_rho(f, n_steps, p);
    GridField grid = sample(rho, M);
    rep.field_alias = grid.alias_flag;
    SpectralField spec = to_spectrum(grid);
    std::vector<int> sorted = cutoffs;
    std::sort(sorted.begin(), sorted.end());
    rep.masses = cumulative_mass(spec, sorted);

    // OLS of mass against log N over the window [4, M/8]: small cutoffs sit in
    // the forcing band, large ones in the under-resolved alias zone
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int used = 0;
    for (const auto& cm : rep.masses) {
        if (cm.N < rep.fit_n_lo || cm.N > rep.fit_n_hi) continue;
        double x = std::log(static_cast<double>(cm.N));
        sx += x;
        sy += cm.mass;
        sxx += x * x;
        sxy += x * cm.mass;
        ++used;
    }
    if (used >= 2) {
        double denom = used * sxx - sx * sx;
        rep.slope = (used * sxy - sx * sy) / denom;
        rep.intercept = (sy - rep.slope * sx) / used;
        double mean = sy / used, ss_res = 0, ss_tot = 0;
        for (const auto& cm : rep.masses) {
            if (cm.N < rep.fit_n_lo || cm.N > rep.fit_n_hi) continue;
            double x = std::log(static_cast<double>(cm.N));
            double e = cm.mass - (rep.intercept + rep.slope * x);
            ss_res += e * e;
            ss_tot += (cm.mass - mean) * (cm.mass - mean);
        }
        rep.r_squared = ss_tot > 0 ? std::max(0.0, 1.0 - ss_res / ss_tot) : 1.0;
        rep.slope_log_alpha = rep.slope * std::log(p.alpha);
    }
    return rep;
}

namespace {

// <closure, F_t> on the grid, with F_t = eta(t) h for separable forcing.
double forcing_inner(const ScalarClosure& lhs, const SeparableForcing& sep, double t, int M) {
    double e = sep.eta(t);
    if (e == 0.0) return 0.0;
    return e * correlate(lhs, sep.h, M);
}

}  // namespace

FluxReport flux_report(const ForcingSpec& F, const std::vector<int>& cutoffs,
                       const MapParams& p, const FluxOptions& opt) {
    if (!F.is_separable())
        throw std::invalid_argument("flux_report: separable forcing required");
    const SeparableForcing& sep = F.as_separable();
    FluxReport rep;

    ScalarClosure falpha = effective_forcing(F, p).value;

    // first term: double integral over 0 < s < t < 1 of <F_s o phi_{t,s}, F_t>;
    // the integrand is supported where both times sit in the eta window
    auto first_term_at = [&](int pts) {
        std::vector<double> ts, tw;
        gl_nodes(0.5, 1.0, pts, ts, tw);
        KahanSum acc;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            double t = ts[i];
            std::vector<double> ss, sw;
            gl_nodes(0.5, t, pts, ss, sw);
            KahanSum inner;
            for (std::size_t j = 0; j < ss.size(); ++j) {
                ScalarClosure Fs = F.at_time(ss[j]);
                ScalarClosure moved = compose_inverse_flow(Fs, t, ss[j], p);
                inner.add(sw[j] * forcing_inner(moved, sep, t, opt.M));
            }
            acc.add(tw[i] * inner.value());
        }
        return acc.value();
    };
    rep.first_term.value = first_term_at(opt.quad_points);
    rep.first_term.error_estimate =
        std::fabs(first_term_at(2 * opt.quad_points) - rep.first_term.value);

    // n-th tail term: int_0^1 <f_alpha o T^{-n} o phi_{t,0}, F_t> dt
    auto tail_at = [&](int n, int pts) {
        std::vector<double> ts, tw;
        gl_nodes(0.5, 1.0, pts, ts, tw);
        KahanSum acc;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            ScalarClosure term = compose_inverse_flow(pullback(falpha, n, p), ts[i], 0.0, p);
            acc.add(tw[i] * forcing_inner(term, sep, ts[i], opt.M));
        }
        return acc.value();
    };
    rep.n0_term.value = tail_at(0, opt.quad_points);
    rep.n0_term.error_estimate = std::fabs(tail_at(0, 2 * opt.quad_points) - rep.n0_term.value);
    for (int n = 1; n <= opt.n_max; ++n) {
        FluxTerm t;
        t.value = tail_at(n, opt.quad_points);
        t.error_estimate = std::fabs(tail_at(n, opt.quad_points * 2) - t.value);
        rep.tail_terms.push_back(t);
    }
    if (!rep.tail_terms.empty())
        rep.last_tail_magnitude = std::fabs(rep.tail_terms.back().value);

    KahanSum limit;
    limit.add(rep.first_term.value);
    limit.add(rep.n0_term.value);
    for (const auto& t : rep.tail_terms) limit.add(t.value);
    rep.limit_estimate = limit.value();

    // T_N = int_0^1 <Pi_{<=N} rho(t), F_t> dt from the truncated limit state
    if (!cutoffs.empty()) {
        std::vector<int> sorted = cutoffs;
        std::sort(sorted.begin(), sorted.end());
        std::vector<double> ts, tw;
        gl_nodes(0.5, 1.0, opt.quad_points, ts, tw);
        std::vector<KahanSum> per_cutoff(sorted.size());
        for (std::size_t i = 0; i < ts.size(); ++i) {
            double t = ts[i];
            double e = sep.eta(t);
            if (e == 0.0) continue;
            // rho(t) truncated: Duhamel within the period + n_max pulled terms
            ScalarClosure rho;
            {
                std::vector<double> ss, sw;
                gl_nodes(0.5, t, opt.quad_points, ss, sw);
                for (std::size_t j = 0; j < ss.size(); ++j) {
                    ScalarClosure Fs = F.at_time(ss[j]);
                    if (Fs.modes().empty() && Fs.terms().empty()) continue;
                    rho.add_term(sw[j], std::make_shared<ScalarClosure>(
                                            compose_inverse_flow(Fs, t, ss[j], p)));
                }
                for (int n = 0; n <= opt.n_max; ++n)
                    rho.add_term(1.0, std::make_shared<ScalarClosure>(compose_inverse_flow(
                                          pullback(falpha, n, p), t, 0.0, p)));
            }
            SpectralField spec = to_spectrum(sample(rho, opt.M));
            // <Pi_N rho, F_t> = eta(t) sum_{|k| <= N} rho_hat(k) conj(h_hat(k))
            for (std::size_t c = 0; c < sorted.size(); ++c) {
                long long n2 = static_cast<long long>(sorted[c]) * sorted[c];
                KahanSum dot;
                for (const Mode& hm : sep.h.modes()) {
                    if (static_cast<long long>(hm.kx) * hm.kx +
                            static_cast<long long>(hm.ky) * hm.ky >
                        n2)
                        continue;
                    Complex rk = spec.at((hm.kx % opt.M + opt.M) % opt.M,
                                         (hm.ky % opt.M + opt.M) % opt.M);
                    dot.add((rk * std::conj(hm.amp)).real());
                }
                per_cutoff[c].add(tw[i] * e * dot.value());
            }
        }
        for (std::size_t c = 0; c < sorted.size(); ++c)
            rep.T_N.emplace_back(sorted[c], per_cutoff[c].value());
    }
    return rep;
}

}  // namespace batlab
