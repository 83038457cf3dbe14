#include "rwre/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rwre {

Estimate mean_se(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("empty sample");
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double n = static_cast<double>(xs.size());
    const double var = xs.size() > 1 ? ss / (n - 1.0) : 0.0;
    return {mean, std::sqrt(var / n)};
}

LineFit least_squares(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("least_squares needs >= 2 paired points");
    const double n = static_cast<double>(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw std::invalid_argument("degenerate abscissae");
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

double ks_distance_geometric(std::span<const std::uint64_t> samples, double rho) {
    if (samples.empty()) throw std::invalid_argument("empty sample");
    if (!(rho > 0.0) || !(rho <= 1.0)) throw std::invalid_argument("rho outside (0,1]");
    std::vector<std::uint64_t> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const auto k = sorted[i];
        // F(k) = 1 - (1-rho)^{k+1}
        const double model = 1.0 - std::pow(1.0 - rho, static_cast<double>(k) + 1.0);
        const double emp_before = static_cast<double>(i) / n;
        const double emp_after = static_cast<double>(j) / n;
        d = std::max(d, std::fabs(emp_after - model));
        const double model_before = 1.0 - std::pow(1.0 - rho, static_cast<double>(k));
        d = std::max(d, std::fabs(emp_before - model_before));
        i = j;
    }
    return d;
}

double ks_critical_value(double alpha, std::size_t n) {
    return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(static_cast<double>(n));
}

}  // namespace rwre
