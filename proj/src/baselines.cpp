#include "mrcp/baselines.hpp"

#include <cmath>
#include <vector>

#include "mrcp/errors.hpp"
#include "mrcp/stats.hpp"

namespace mrcp {

PredictionInterval IntervalModel::predict(const Eigen::VectorXd& covariates) const {
    if (covariates.size() + 1 != beta.size())
        throw argument_error("IntervalModel::predict: covariate length mismatch");
    double center = beta[0];
    for (Eigen::Index j = 0; j < covariates.size(); ++j) center += beta[j + 1] * covariates[j];
    return PredictionInterval{center, half_width};
}

IntervalModel split_conformal_cc(const Eigen::VectorXd& center_beta, const Dataset& ds,
                                 const IndexList& calib_idx, double tau,
                                 bool finite_sample_correction) {
    std::vector<WeightedValue> pool;
    const ModelSpec spec = full_spec(ds);
    for (auto i : calib_idx) {
        if (ds.r[i] != 1) continue;
        const double pred = design_row(ds, i, spec).dot(center_beta);
        pool.push_back({std::abs(ds.y[i] - pred), 1.0});
    }
    if (pool.empty()) throw argument_error("split_conformal_cc: no complete calibration cases");
    IntervalModel im;
    im.beta = center_beta;
    im.level = conformal_level(pool.size(), tau, finite_sample_correction);
    im.half_width = weighted_quantile(std::move(pool), im.level);
    return im;
}

IntervalModel impute_sc(const ConformityScores& scores, const MRFit& fit, double tau,
                        Eigen::Index model_index, bool finite_sample_correction) {
    if (model_index < 0 || model_index >= scores.models())
        throw argument_error("impute_sc: bad model index");
    const auto& dsc = scores.draw_scores[static_cast<std::size_t>(model_index)];
    const Eigen::Index T = dsc.rows();
    std::vector<WeightedValue> pool;
    for (Eigen::Index j = 0; j < scores.m_cal(); ++j) pool.push_back({scores.observed[j], 1.0});
    const double w = 1.0 / static_cast<double>(T);
    for (Eigen::Index pos = 0; pos < scores.n_cal(); ++pos) {
        if (scores.r[static_cast<std::size_t>(pos)] == 1) continue;
        for (Eigen::Index t = 0; t < T; ++t) pool.push_back({dsc(t, pos), w});
    }
    if (pool.empty()) throw argument_error("impute_sc: empty calibration set");
    IntervalModel im;
    im.beta = fit.beta;
    im.level = conformal_level(static_cast<std::size_t>(scores.n_cal()), tau,
                               finite_sample_correction);
    im.half_width = weighted_quantile(std::move(pool), im.level);
    return im;
}

IntervalModel impute_sc(const Dataset& ds, const IndexList& calib_idx,
                        const OutcomeModel& outcome_model, const MRFit& fit, double tau,
                        Eigen::Index T, std::uint64_t seed, bool finite_sample_correction) {
    const auto scores = conformity_scores(fit, ds, calib_idx, {outcome_model}, T, seed);
    return impute_sc(scores, fit, tau, 0, finite_sample_correction);
}

}  // namespace mrcp
