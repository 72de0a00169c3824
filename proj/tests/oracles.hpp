// Test-only reference implementations, independent of the library's solve
// paths: bisection on EL first-order conditions, Gaussian elimination for
// normal equations, gradient descent on the stacked imputation objective, and
// brute-force scans for quantile-type minimizers.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace oracle {

// dF/drho for the one-column EL objective F(rho) = -(1/m) sum log(1 + rho v_i)
inline double el_derivative_1d(const Eigen::VectorXd& v, double rho) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) acc += v[i] / (1.0 + rho * v[i]);
    return -acc / static_cast<double>(v.size());
}

// feasible open interval of rho for one column
inline std::pair<double, double> el_feasible_1d(const Eigen::VectorXd& v) {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (v[i] > 0.0) lo = std::max(lo, -1.0 / v[i]);
        if (v[i] < 0.0) hi = std::min(hi, -1.0 / v[i]);
    }
    return {lo, hi};
}

// Root of dF/drho by bisection; requires mixed-sign v (interior minimum).
inline double el_rho_1d(const Eigen::VectorXd& v) {
    auto [lo, hi] = el_feasible_1d(v);
    if (!std::isfinite(lo) || !std::isfinite(hi))
        throw std::invalid_argument("el_rho_1d: column must have both signs");
    const double width = hi - lo;
    double a = lo + 1e-12 * width, b = hi - 1e-12 * width;
    for (int i = 0; i < 300; ++i) {
        const double mid = 0.5 * (a + b);
        (el_derivative_1d(v, mid) < 0.0 ? a : b) = mid;
    }
    return 0.5 * (a + b);
}

// Two-column EL minimizer by nested bisection: the inner problem minimizes
// over rho2 at fixed rho1 (monotone partial derivative), and by the envelope
// theorem the outer derivative is dF/drho1 evaluated at the inner optimum.
inline double el_partial(const Eigen::MatrixXd& v, const Eigen::Vector2d& rho, int coord) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < v.rows(); ++i)
        acc += v(i, coord) / (1.0 + rho[0] * v(i, 0) + rho[1] * v(i, 1));
    return -acc / static_cast<double>(v.rows());
}

inline double el_inner_rho2(const Eigen::MatrixXd& v, double rho1) {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        const double c = 1.0 + rho1 * v(i, 0);
        if (v(i, 1) > 0.0) lo = std::max(lo, -c / v(i, 1));
        if (v(i, 1) < 0.0) hi = std::min(hi, -c / v(i, 1));
        if (v(i, 1) == 0.0 && c <= 0.0) throw std::runtime_error("infeasible rho1");
    }
    if (!(lo < hi)) throw std::runtime_error("empty inner interval");
    const double width = hi - lo;
    double a = lo + 1e-12 * width, b = hi - 1e-12 * width;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (a + b);
        ((el_partial(v, {rho1, mid}, 1) < 0.0) ? a : b) = mid;
    }
    return 0.5 * (a + b);
}

inline Eigen::Vector2d el_rho_2d(const Eigen::MatrixXd& v, double rho1_lo = -20.0,
                                 double rho1_hi = 20.0) {
    auto outer_deriv = [&](double rho1) {
        const double rho2 = el_inner_rho2(v, rho1);
        return el_partial(v, {rho1, rho2}, 0);
    };
    double a = rho1_lo, b = rho1_hi;
    // shrink the bracket until both inner problems are feasible
    for (int guard = 0; guard < 200; ++guard) {
        try {
            outer_deriv(a);
            break;
        } catch (...) {
            a = 0.5 * (a);
            a = (a == 0.0) ? -1e-6 : a * 0.5;
        }
    }
    for (int guard = 0; guard < 200; ++guard) {
        try {
            outer_deriv(b);
            break;
        } catch (...) {
            b = (b == 0.0) ? 1e-6 : b * 0.5;
        }
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (a + b);
        (outer_deriv(mid) < 0.0 ? a : b) = mid;
    }
    const double rho1 = 0.5 * (a + b);
    return {rho1, el_inner_rho2(v, rho1)};
}

// Gaussian elimination with partial pivoting (dense square systems).
inline Eigen::VectorXd gauss_solve(Eigen::MatrixXd a, Eigen::VectorXd b) {
    const Eigen::Index n = a.rows();
    for (Eigen::Index c = 0; c < n; ++c) {
        Eigen::Index piv = c;
        for (Eigen::Index r = c + 1; r < n; ++r)
            if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
        if (a(piv, c) == 0.0) throw std::runtime_error("gauss_solve: singular");
        a.row(c).swap(a.row(piv));
        std::swap(b[c], b[piv]);
        for (Eigen::Index r = c + 1; r < n; ++r) {
            const double f = a(r, c) / a(c, c);
            a.row(r).tail(n - c) -= f * a.row(c).tail(n - c);
            b[r] -= f * b[c];
        }
    }
    Eigen::VectorXd x(n);
    for (Eigen::Index r = n - 1; r >= 0; --r) {
        double acc = b[r];
        for (Eigen::Index c = r + 1; c < n; ++c) acc -= a(r, c) * x[c];
        x[r] = acc / a(r, r);
    }
    return x;
}

// Stacked least-squares objective of the imputation estimator:
//   sum_{observed} (y - z.mu)^2 + sum_{missing} (1/T) sum_t (draw - z.mu)^2
struct StackedObjective {
    Eigen::MatrixXd z_obs;
    Eigen::VectorXd y_obs;
    Eigen::MatrixXd z_mis;
    Eigen::MatrixXd draws;  // T x n_mis

    double value(const Eigen::VectorXd& mu) const {
        double acc = (y_obs - z_obs * mu).squaredNorm();
        const double inv_t = 1.0 / static_cast<double>(draws.rows());
        const Eigen::VectorXd pred = z_mis * mu;
        for (Eigen::Index j = 0; j < z_mis.rows(); ++j)
            for (Eigen::Index t = 0; t < draws.rows(); ++t) {
                const double d = draws(t, j) - pred[j];
                acc += inv_t * d * d;
            }
        return acc;
    }

    Eigen::VectorXd gradient(const Eigen::VectorXd& mu) const {
        Eigen::VectorXd g = -2.0 * z_obs.transpose() * (y_obs - z_obs * mu);
        const double inv_t = 1.0 / static_cast<double>(draws.rows());
        const Eigen::VectorXd pred = z_mis * mu;
        for (Eigen::Index j = 0; j < z_mis.rows(); ++j) {
            double resid_sum = 0.0;
            for (Eigen::Index t = 0; t < draws.rows(); ++t) resid_sum += draws(t, j) - pred[j];
            g -= 2.0 * inv_t * resid_sum * z_mis.row(j).transpose();
        }
        return g;
    }
};

// Steepest descent with an exact parabolic line search (the stacked objective
// is quadratic, so three evaluations pin the optimal step).
inline Eigen::VectorXd descend(const StackedObjective& obj, Eigen::Index p, int iters = 50000) {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(p);
    for (int it = 0; it < iters; ++it) {
        const Eigen::VectorXd g = obj.gradient(mu);
        if (g.norm() < 1e-11) break;
        const double h = 1.0 / std::max(1.0, g.norm());
        const double f0 = obj.value(mu);
        const double f1 = obj.value(mu - h * g);
        const double f2 = obj.value(mu - 2.0 * h * g);
        const double a = (f2 - 2.0 * f1 + f0) / (2.0 * h * h);
        const double b = (4.0 * f1 - 3.0 * f0 - f2) / (2.0 * h);
        if (!(a > 0.0)) break;
        mu -= (-b / (2.0 * a)) * g;
    }
    return mu;
}

// Pooled check-loss risk over (value, weight) atoms.
inline double pooled_check_loss(const std::vector<std::pair<double, double>>& pool, double q,
                                double tau) {
    double acc = 0.0, wsum = 0.0;
    for (const auto& [v, w] : pool) {
        const double u = v - q;
        acc += w * u * (tau - (u < 0.0 ? 1.0 : 0.0));
        wsum += w;
    }
    return acc / wsum;
}

// Minimal pooled check-loss over all pooled values (the minimizer set always
// contains an atom).
inline double grid_scan_min_check_loss(const std::vector<std::pair<double, double>>& pool,
                                       double tau) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [v, w] : pool) best = std::min(best, pooled_check_loss(pool, v, tau));
    return best;
}

}  // namespace oracle
