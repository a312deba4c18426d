#include "ptfprg/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ptfprg {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }

// Series expansion P(a,x) = x^a e^-x / Gamma(a) * sum x^n / (a(a+1)...(a+n))
static double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Modified Lentz continued fraction for Q(a,x) = 1 - P(a,x)
static double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 500; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

double gamma_p(double a, double x) {
    if (a <= 0.0) throw std::invalid_argument("gamma_p: a must be positive");
    if (x < 0.0) throw std::invalid_argument("gamma_p: x must be nonnegative");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_cf(a, x);
}

double chi2_cdf(double k, double x) {
    if (x <= 0.0) return 0.0;
    return gamma_p(0.5 * k, 0.5 * x);
}

double ks_statistic_normal(std::vector<double> sample) {
    if (sample.empty()) throw std::invalid_argument("ks_statistic_normal: empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (size_t i = 0; i < sample.size(); ++i) {
        double f = norm_cdf(sample[i]);
        double above = (static_cast<double>(i) + 1.0) / n - f;
        double below = f - static_cast<double>(i) / n;
        d = std::max(d, std::max(above, below));
    }
    return d;
}

double sign_mean_stderr(double p_hat, long long trials) {
    if (trials <= 0) throw std::invalid_argument("sign_mean_stderr: trials must be positive");
    double v = 4.0 * p_hat * (1.0 - p_hat) / static_cast<double>(trials);
    return std::sqrt(std::max(v, 0.0));
}

}  // namespace ptfprg
