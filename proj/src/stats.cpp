#include "mrcp/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mrcp {

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p outside (0,1)");

    // Acklam coefficients
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};

    const double plow = 0.02425;
    double x;
    if (p < plow) {
        double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        double q = p - 0.5;
        double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    // One Halley refinement against the exact cdf.
    double e = normal_cdf(x) - p;
    double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
    return x;
}

double student_t3_cdf(double x) {
    // F(x) = 1/2 + (1/pi) * ( (x/sqrt(3)) / (1 + x^2/3) + atan(x/sqrt(3)) )
    const double s = x / std::sqrt(3.0);
    return 0.5 + (s / (1.0 + x * x / 3.0) + std::atan(s)) / M_PI;
}

double student_t3_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("student_t3_quantile: p outside (0,1)");
    double lo = -1e3, hi = 1e3;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (student_t3_cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double weighted_quantile(std::vector<WeightedValue> pool, double level) {
    if (pool.empty()) throw std::invalid_argument("weighted_quantile: empty pool");
    if (!(level > 0.0 && level <= 1.0))
        throw std::invalid_argument("weighted_quantile: level outside (0,1]");
    std::sort(pool.begin(), pool.end(),
              [](const WeightedValue& a, const WeightedValue& b) { return a.value < b.value; });
    long double total = 0.0L;
    for (const auto& p : pool) total += p.weight;
    const long double target = static_cast<long double>(level) * total;
    const long double tol = 1e-12L * std::max<long double>(total, 1.0L);
    long double cum = 0.0L;
    for (const auto& p : pool) {
        cum += p.weight;
        if (cum >= target - tol) return p.value;
    }
    return pool.back().value;
}

double weighted_quantile(const Eigen::VectorXd& values, const Eigen::VectorXd& weights,
                         double level) {
    if (values.size() != weights.size())
        throw std::invalid_argument("weighted_quantile: size mismatch");
    std::vector<WeightedValue> pool(static_cast<std::size_t>(values.size()));
    for (Eigen::Index i = 0; i < values.size(); ++i)
        pool[static_cast<std::size_t>(i)] = {values[i], weights[i]};
    return weighted_quantile(std::move(pool), level);
}

double quantile(const Eigen::VectorXd& values, double level) {
    return weighted_quantile(values, Eigen::VectorXd::Ones(values.size()), level);
}

double conformal_level(std::size_t n_eff, double tau, bool conservative) {
    if (n_eff == 0) throw std::invalid_argument("conformal_level: empty calibration set");
    const double rank = std::ceil((static_cast<double>(n_eff) + 1.0) * tau);
    const double denom = conservative ? static_cast<double>(n_eff)
                                      : static_cast<double>(n_eff) + 1.0;
    return std::min(1.0, rank / denom);
}

}  // namespace mrcp
