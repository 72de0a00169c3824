#include "mrcp/mr_regression.hpp"

#include <string>

#include "mrcp/errors.hpp"

namespace mrcp {

double MRFit::predict(const Dataset& ds, Eigen::Index row) const {
    return design_row(ds, row, spec).dot(beta);
}

double MRFit::predict(const Eigen::VectorXd& covariates) const {
    if (covariates.size() + 1 != beta.size())
        throw argument_error("MRFit::predict: covariate length mismatch");
    double v = beta[0];
    for (Eigen::Index j = 0; j < covariates.size(); ++j) v += beta[j + 1] * covariates[j];
    return v;
}

MomentMatrix build_train_moments(const Dataset& ds, const IndexList& train_idx,
                                 const std::vector<PropensityModel>& propensities,
                                 const std::vector<OutcomeWorking>& outcomes) {
    const auto n_tra = static_cast<Eigen::Index>(train_idx.size());
    if (n_tra == 0) throw argument_error("build_train_moments: empty training set");
    for (const auto& pm : propensities)
        if (!pm.fitted) throw argument_error("build_train_moments: unfitted propensity model");

    const auto d = static_cast<Eigen::Index>(propensities.size() + outcomes.size());
    Eigen::MatrixXd cols(n_tra, d);  // moment values over all training rows
    Eigen::Index c = 0;
    for (const auto& pm : propensities) {
        for (Eigen::Index i = 0; i < n_tra; ++i) cols(i, c) = pm.predict(ds, train_idx[i]);
        ++c;
    }
    for (const auto& ow : outcomes) {
        const double inv_t = 1.0 / static_cast<double>(ow.draws.T());
        for (Eigen::Index i = 0; i < n_tra; ++i) {
            const Eigen::Index col = ow.draws.column_of(train_idx[i]);
            const double mean_draw = ow.draws.values.col(col).sum() * inv_t;
            cols(i, c) = mean_draw - ow.estimate.predict(ds, train_idx[i]);
        }
        ++c;
    }
    const Eigen::RowVectorXd centers = cols.colwise().mean();

    Eigen::Index m = 0;
    for (auto i : train_idx) m += (ds.r[i] == 1);
    MomentMatrix mm;
    mm.v.resize(m, d);
    Eigen::Index row = 0;
    for (Eigen::Index i = 0; i < n_tra; ++i)
        if (ds.r[train_idx[i]] == 1) mm.v.row(row++) = cols.row(i) - centers;
    return mm;
}

MRFit mr_fit(const Dataset& ds, const IndexList& train_idx, const ELSolution& el) {
    IndexList cc;
    for (auto i : train_idx)
        if (ds.r[i] == 1) cc.push_back(i);
    if (static_cast<Eigen::Index>(cc.size()) != el.weights.size())
        throw argument_error("mr_fit: weights not aligned with complete cases (" +
                             std::to_string(cc.size()) + " vs " +
                             std::to_string(el.weights.size()) + ")");

    MRFit fit;
    fit.spec = full_spec(ds);
    fit.train_weights = el;
    const Eigen::MatrixXd z = design_matrix(ds, cc, fit.spec);
    Eigen::VectorXd y(static_cast<Eigen::Index>(cc.size()));
    for (std::size_t i = 0; i < cc.size(); ++i) y[static_cast<Eigen::Index>(i)] = ds.y[cc[i]];

    const Eigen::MatrixXd zw = el.weights.asDiagonal() * z;
    const Eigen::MatrixXd gram = z.transpose() * zw;
    const Eigen::VectorXd rhs = zw.transpose() * y;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
    fit.beta = ldlt.solve(rhs);
    if (ldlt.info() != Eigen::Success || !fit.beta.allFinite() ||
        (gram * fit.beta - rhs).norm() > 1e-6 * std::max(1.0, rhs.norm()))
        throw fit_error("mr_fit: rank-deficient weighted design");
    return fit;
}

}  // namespace mrcp
