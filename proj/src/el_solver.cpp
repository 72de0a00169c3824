#include "mrcp/el_solver.hpp"

#include <cmath>
#include <string>

#include "mrcp/errors.hpp"

namespace mrcp {

namespace {

// Columns that are (numerically exact) linear combinations of earlier kept
// columns, including all-zero columns. Modified Gram-Schmidt with a relative
// tolerance on the residual norm.
std::vector<Eigen::Index> independent_columns(const Eigen::MatrixXd& v, double rel_tol,
                                              std::vector<Eigen::Index>& dropped) {
    std::vector<Eigen::Index> kept;
    std::vector<Eigen::VectorXd> basis;
    double scale = 0.0;
    for (Eigen::Index c = 0; c < v.cols(); ++c) scale = std::max(scale, v.col(c).norm());
    if (scale == 0.0) scale = 1.0;
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
        Eigen::VectorXd res = v.col(c);
        for (const auto& b : basis) res -= b.dot(v.col(c)) * b;
        if (res.norm() > rel_tol * scale) {
            kept.push_back(c);
            basis.push_back(res / res.norm());
        } else {
            dropped.push_back(c);
        }
    }
    return kept;
}

double objective(const Eigen::MatrixXd& v, const Eigen::VectorXd& rho) {
    const Eigen::VectorXd t = (v * rho).array() + 1.0;
    double f = 0.0;
    for (Eigen::Index i = 0; i < t.size(); ++i) f -= std::log(t[i]);
    return f / static_cast<double>(v.rows());
}

}  // namespace

ELSolution solve_el(const MomentMatrix& moments, double tol, int max_iter,
                    const Eigen::VectorXd* start) {
    if (tol <= 0.0) throw argument_error("solve_el: tol must be positive");
    const Eigen::Index m = moments.rows();
    const Eigen::Index d_full = moments.cols();
    if (m < 1) throw argument_error("solve_el: empty moment matrix");

    ELSolution sol;
    Eigen::MatrixXd v;
    std::vector<Eigen::Index> kept;
    if (d_full > 0) {
        kept = independent_columns(moments.v, 1e-12, sol.dropped_columns);
        v.resize(m, static_cast<Eigen::Index>(kept.size()));
        for (std::size_t j = 0; j < kept.size(); ++j) v.col(static_cast<Eigen::Index>(j)) =
            moments.v.col(kept[j]);
    }
    const Eigen::Index d = v.cols();

    Eigen::VectorXd rho = Eigen::VectorXd::Zero(d);
    if (start != nullptr && d_full > 0) {
        if (start->size() != d_full) throw argument_error("solve_el: bad start size");
        for (std::size_t j = 0; j < kept.size(); ++j)
            rho[static_cast<Eigen::Index>(j)] = (*start)[kept[j]];
        if ((((v * rho).array() + 1.0) <= 0.0).any())
            rho.setZero();  // infeasible warm start; fall back to the origin
    }

    const double inv_m = 1.0 / static_cast<double>(m);
    double f = (d > 0) ? objective(v, rho) : 0.0;
    sol.objective_trace.push_back(f);

    int it = 0;
    if (d > 0) {
        for (;; ++it) {
            const Eigen::VectorXd t = (v * rho).array() + 1.0;
            const Eigen::MatrixXd vt = v.array().colwise() / t.array();  // rows v_i / t_i
            const Eigen::VectorXd grad = -inv_m * vt.colwise().sum().transpose();
            if (grad.norm() <= tol) break;
            if (it >= max_iter)
                throw convergence_error("solve_el: max_iter exceeded, |grad| = " +
                                        std::to_string(grad.norm()));

            Eigen::MatrixXd hess = inv_m * (vt.transpose() * vt);
            Eigen::VectorXd step;
            double boost = 0.0;
            for (;;) {
                Eigen::LDLT<Eigen::MatrixXd> ldlt(
                    hess + boost * Eigen::MatrixXd::Identity(d, d));
                step = ldlt.solve(-grad);
                if (ldlt.info() == Eigen::Success && step.allFinite() &&
                    grad.dot(step) < 0.0)
                    break;
                boost = (boost == 0.0) ? 1e-10 * hess.trace() / static_cast<double>(d)
                                       : boost * 10.0;
                if (!(boost > 0.0) || boost > 1e12 * hess.trace())
                    throw solver_error("solve_el: cannot form a descent direction");
            }

            const double slope = grad.dot(step);
            const double slack = 1e-15 * (std::abs(f) + 1.0);  // rounding headroom
            double alpha = 1.0;
            bool accepted = false;
            for (int h = 0; h < 60; ++h) {
                const Eigen::VectorXd cand = rho + alpha * step;
                if ((((v * cand).array() + 1.0) > 0.0).all()) {
                    const double fc = objective(v, cand);
                    if (fc <= f + 1e-4 * alpha * slope + slack) {
                        rho = cand;
                        f = fc;
                        accepted = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            if (!accepted)
                throw solver_error("solve_el: no feasible descent step after 60 halvings");
            sol.objective_trace.push_back(f);
        }
    }

    sol.iterations = it;
    sol.objective = f;
    sol.rho = Eigen::VectorXd::Zero(d_full);
    for (std::size_t j = 0; j < kept.size(); ++j) sol.rho[kept[j]] =
        rho[static_cast<Eigen::Index>(j)];

    Eigen::VectorXd w(m);
    if (d > 0) {
        const Eigen::VectorXd t = (v * rho).array() + 1.0;
        w = inv_m / t.array();
    } else {
        w.setConstant(inv_m);
    }
    // At a genuine optimum sum w = 1 + rho . grad, so a gross violation means
    // the objective ran away along an unbalanceable direction.
    const double total = w.sum();
    if (std::abs(total - 1.0) > 1e-3)
        throw solver_error("solve_el: moments cannot be balanced (objective unbounded)");
    w /= total;  // |sum w - 1| would otherwise only be O(tol * |rho|)
    sol.weights = std::move(w);
    return sol;
}

}  // namespace mrcp
