#pragma once

#include <cmath>
#include <utility>
#include <vector>

namespace batlab {

/// Least-squares exponential fit: log|value| against n, above a floor.
struct DecayFit {
    std::vector<std::pair<int, double>> samples;
    double rate = 0.0;       // base-e decay per step (positive = decaying)
    double intercept = 0.0;  // fitted log|value| at n = 0
    double r_squared = 0.0;
    int used_points = 0;
};

inline DecayFit fit_exponential_decay(std::vector<std::pair<int, double>> samples,
                                      double floor = 1e-13) {
    DecayFit fit;
    fit.samples = std::move(samples);
    std::vector<std::pair<double, double>> pts;
    for (const auto& [n, v] : fit.samples)
        if (std::fabs(v) > floor) pts.emplace_back(static_cast<double>(n), std::log(std::fabs(v)));
    fit.used_points = static_cast<int>(pts.size());
    if (pts.size() < 2) return fit;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto& [x, y] : pts) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double n = static_cast<double>(pts.size());
    double denom = n * sxx - sx * sx;
    if (denom == 0.0) return fit;
    double slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - slope * sx) / n;
    fit.rate = -slope;
    double ss_res = 0, ss_tot = 0, mean = sy / n;
    for (auto& [x, y] : pts) {
        double pred = fit.intercept + slope * x;
        ss_res += (y - pred) * (y - pred);
        ss_tot += (y - mean) * (y - mean);
    }
    fit.r_squared = ss_tot > 0 ? std::max(0.0, 1.0 - ss_res / ss_tot) : 1.0;
    return fit;
}

}  // namespace batlab
