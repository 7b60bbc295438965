#pragma once

#include <vector>

namespace mg {

double mean(const std::vector<double>& v);
double sample_sd(const std::vector<double>& v);  // n-1 denominator

/// Fourth standardized central moment minus 3 (0 for a Gaussian).
double excess_kurtosis(const std::vector<double>& v);

/// Kolmogorov-Smirnov distance between the sample and N(mu, sd^2).
double ks_statistic_normal(std::vector<double> sample, double mu, double sd);

/// Ordinary least squares y = intercept + slope * x with the usual
/// residual-based standard error on the slope.
struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
};
FitResult linear_fit(const std::vector<double>& x, const std::vector<double>& y);

/// Equal-width histogram normalized to unit integral.
struct Histogram {
    std::vector<double> center;
    std::vector<double> density;
    double bin_width = 0.0;
};
Histogram histogram(const std::vector<double>& v, int bins, double lo, double hi);

}  // namespace mg
