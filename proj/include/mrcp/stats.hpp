#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <vector>

namespace mrcp {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// standard normal cdf via erfc
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Inverse standard normal cdf: Acklam's rational approximation polished with
// one Halley step against erfc, giving near machine precision on (0,1).
double normal_quantile(double p);

// Student-t cdf and two-sided quantile for 3 degrees of freedom (closed-form cdf).
double student_t3_cdf(double x);
double student_t3_quantile(double p);

// check loss rho_tau(u) = u * (tau - 1{u<0}) and its subgradient psi_tau
inline double check_loss(double u, double tau) { return u * (tau - (u < 0.0 ? 1.0 : 0.0)); }
inline double psi(double u, double tau) { return tau - (u < 0.0 ? 1.0 : 0.0); }

// One (value, weight) atom of a score distribution.
struct WeightedValue {
    double value;
    double weight;
};

// Generalized-inverse quantile of a weighted sample: the smallest value whose
// cumulative weight reaches level * total_weight. Ties accumulate leftward.
// A tiny relative tolerance absorbs roundoff in the cumulative sums so that
// exact-rational thresholds (e.g. level 0.9 over 10 unit weights) resolve the
// way integer arithmetic would.
double weighted_quantile(std::vector<WeightedValue> pool, double level);

// Convenience overloads for plain vectors with unit weights.
double weighted_quantile(const Eigen::VectorXd& values, const Eigen::VectorXd& weights,
                         double level);
double quantile(const Eigen::VectorXd& values, double level);

// Split-conformal rank convention: the tau-quantile over n calibration values
// is taken at level ceil((n+1)*tau)/(n+1), i.e. the ceil((n+1)tau)-th order
// statistic. With `conservative` the level is ceil((n+1)*tau)/n, clipped to 1.
double conformal_level(std::size_t n_eff, double tau, bool conservative = false);

}  // namespace mrcp
