#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace rwre {

struct Estimate {
    double value = 0.0;
    double se = 0.0;  // standard error of the mean
};

Estimate mean_se(std::span<const double> xs);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

LineFit least_squares(std::span<const double> xs, std::span<const double> ys);

// One-sample Kolmogorov-Smirnov distance between the empirical law of
// non-negative integer samples and Geometric(rho) on {0,1,2,...} with
// P(X >= j) = (1-rho)^j.
double ks_distance_geometric(std::span<const std::uint64_t> samples, double rho);

// Asymptotic critical value at level alpha for n samples.
double ks_critical_value(double alpha, std::size_t n);

}  // namespace rwre
