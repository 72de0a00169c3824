#include "mrcp/working_models.hpp"

#include <cmath>
#include <string>

#include "mrcp/errors.hpp"
#include "mrcp/rng.hpp"
#include "mrcp/stats.hpp"

namespace mrcp {

double PropensityModel::predict(const Dataset& ds, Eigen::Index row) const {
    return sigmoid(design_row(ds, row, spec).dot(coef));
}

double OutcomeModel::predict(const Dataset& ds, Eigen::Index row) const {
    return design_row(ds, row, spec).dot(coef);
}

double PerModelEstimate::predict(const Dataset& ds, Eigen::Index row) const {
    return design_row(ds, row, spec).dot(mu);
}

Eigen::Index ImputationDraws::column_of(Eigen::Index row) const {
    if (lookup_.empty())
        for (std::size_t c = 0; c < target_idx.size(); ++c)
            lookup_.emplace(target_idx[c], static_cast<Eigen::Index>(c));
    auto it = lookup_.find(row);
    if (it == lookup_.end())
        throw argument_error("ImputationDraws: no draws for row " + std::to_string(row));
    return it->second;
}

namespace {

double bernoulli_loglik(const Eigen::VectorXd& eta, const Eigen::VectorXd& rvec) {
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        // r*eta - log(1+exp(eta)), computed stably
        const double e = eta[i];
        ll += rvec[i] * e - (e > 0.0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e)));
    }
    return ll;
}

}  // namespace

PropensityModel fit_propensity(const Dataset& ds, const IndexList& idx, const ModelSpec& spec) {
    if (idx.empty()) throw argument_error("fit_propensity: empty index set");
    Eigen::VectorXd rvec(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i)
        rvec[static_cast<Eigen::Index>(i)] = ds.r[idx[i]];
    if (rvec.minCoeff() == rvec.maxCoeff())
        throw fit_error("fit_propensity: all rows share one response class (separation)");

    const Eigen::MatrixXd z = design_matrix(ds, idx, spec);
    const Eigen::Index p = z.cols();
    Eigen::VectorXd a = Eigen::VectorXd::Zero(p);
    double ll = bernoulli_loglik(z * a, rvec);

    for (int it = 0; it < 100; ++it) {
        const Eigen::VectorXd eta = z * a;
        Eigen::VectorXd prob(eta.size()), wgt(eta.size());
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            double pi = sigmoid(eta[i]);
            pi = std::min(1.0 - 1e-12, std::max(1e-12, pi));
            prob[i] = pi;
            wgt[i] = pi * (1.0 - pi);
        }
        const Eigen::VectorXd grad = z.transpose() * (rvec - prob);
        if (grad.norm() <= 1e-8) {
            PropensityModel model{spec, a, true};
            return model;
        }
        const Eigen::MatrixXd info = z.transpose() * wgt.asDiagonal() * z;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
        Eigen::VectorXd step = ldlt.solve(grad);
        if (ldlt.info() != Eigen::Success || !step.allFinite())
            throw fit_error("fit_propensity: singular information matrix");

        // step-halving when the likelihood would decrease; the slack keeps
        // rounding noise near the optimum from stalling the full Newton step
        const double slack = 1e-9 * (std::abs(ll) + 1.0);
        double alpha = 1.0;
        Eigen::VectorXd cand;
        double ll_new;
        for (int h = 0;; ++h) {
            cand = a + alpha * step;
            ll_new = bernoulli_loglik(z * cand, rvec);
            if (ll_new >= ll - slack || h >= 40) break;
            alpha *= 0.5;
        }
        a = cand;
        if (a.lpNorm<Eigen::Infinity>() > 1e3 && ll_new >= ll)
            throw fit_error("fit_propensity: perfect separation (coefficients diverging)");
        ll = ll_new;
    }
    throw fit_error("fit_propensity: IRLS did not converge in 100 iterations");
}

OutcomeModel fit_outcome(const Dataset& ds, const IndexList& idx, const ModelSpec& spec) {
    IndexList cc;
    for (auto i : idx)
        if (ds.r[i] == 1) cc.push_back(i);
    const auto need = spec.columns.size() + 2;
    if (cc.size() < need)
        throw argument_error("fit_outcome: need at least " + std::to_string(need) +
                             " complete cases, have " + std::to_string(cc.size()));

    const Eigen::MatrixXd z = design_matrix(ds, cc, spec);
    Eigen::VectorXd y(static_cast<Eigen::Index>(cc.size()));
    for (std::size_t i = 0; i < cc.size(); ++i) y[static_cast<Eigen::Index>(i)] = ds.y[cc[i]];

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
    if (qr.rank() < z.cols()) {
        // name the columns pivoted out of the basis
        std::string which;
        const auto perm = qr.colsPermutation().indices();
        for (Eigen::Index j = qr.rank(); j < z.cols(); ++j) {
            const Eigen::Index col = perm[j];
            if (!which.empty()) which += ", ";
            which += (col == 0) ? "intercept"
                                : ds.covariate_names[spec.columns[static_cast<std::size_t>(
                                      col - 1)]];
        }
        throw fit_error("fit_outcome: rank-deficient design; collinear columns: " + which);
    }
    const Eigen::VectorXd b = qr.solve(y);
    const double rss = (y - z * b).squaredNorm();
    OutcomeModel model;
    model.spec = spec;
    model.coef = b;
    model.sigma = std::sqrt(rss / static_cast<double>(cc.size()));
    model.fitted = true;
    return model;
}

ImputationDraws draw_imputations(const OutcomeModel& model, const Dataset& ds,
                                 const IndexList& target_idx, Eigen::Index T,
                                 std::uint64_t seed, int model_index) {
    if (T < 1) throw argument_error("draw_imputations: T must be >= 1");
    ImputationDraws draws;
    draws.target_idx = target_idx;
    draws.model_index = model_index;
    draws.seed = seed;
    const auto n = static_cast<Eigen::Index>(target_idx.size());
    Eigen::VectorXd pred(n);
    for (Eigen::Index c = 0; c < n; ++c) pred[c] = model.predict(ds, target_idx[c]);
    draws.values.resize(T, n);
    Rng rng(seed);
    for (Eigen::Index t = 0; t < T; ++t)
        for (Eigen::Index c = 0; c < n; ++c)
            draws.values(t, c) = pred[c] + model.sigma * rng.normal();
    return draws;
}

PerModelEstimate per_model_estimate(const Dataset& ds, const IndexList& idx,
                                    const ImputationDraws& draws, const ModelSpec& mu_spec,
                                    Loss loss) {
    (void)loss;  // least_squares is the only member
    const Eigen::Index p = static_cast<Eigen::Index>(mu_spec.columns.size()) + 1;
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(p);
    const double inv_t = 1.0 / static_cast<double>(draws.T());
    for (auto i : idx) {
        const Eigen::VectorXd z = design_row(ds, i, mu_spec);
        gram.noalias() += z * z.transpose();  // total weight 1 either way
        if (ds.r[i] == 1) {
            rhs.noalias() += z * ds.y[i];
        } else {
            const Eigen::Index c = draws.column_of(i);
            rhs.noalias() += z * (draws.values.col(c).sum() * inv_t);
        }
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    const Eigen::VectorXd mu = ldlt.solve(rhs);
    if (ldlt.info() != Eigen::Success || !mu.allFinite() ||
        (gram * mu - rhs).norm() > 1e-6 * std::max(1.0, rhs.norm()))
        throw fit_error("per_model_estimate: rank-deficient design");
    return PerModelEstimate{mu_spec, mu};
}

}  // namespace mrcp
