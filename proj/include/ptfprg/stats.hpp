#pragma once

#include <cstdint>
#include <vector>

namespace ptfprg {

// Standard normal CDF.
double norm_cdf(double x);

// Standard normal density.
double norm_pdf(double x);

// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
// Series for x < a+1, Lentz continued fraction otherwise; absolute error ~1e-14.
double gamma_p(double a, double x);

// Chi-squared CDF with k degrees of freedom.
double chi2_cdf(double k, double x);

// Two-sided Kolmogorov-Smirnov distance between a sample and the standard
// normal CDF. Sorts a copy of the sample.
double ks_statistic_normal(std::vector<double> sample);

// Standard error of the mean of a +/-1 sample with acceptance fraction p_hat:
// sqrt(4 p(1-p) / trials).
double sign_mean_stderr(double p_hat, long long trials);

}  // namespace ptfprg
