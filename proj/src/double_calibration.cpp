#include "mrcp/double_calibration.hpp"

#include <cmath>
#include <string>

#include "mrcp/errors.hpp"
#include "mrcp/rng.hpp"
#include "mrcp/stats.hpp"

namespace mrcp {

ConformityScores conformity_scores(const MRFit& fit, const Dataset& ds,
                                   const IndexList& calib_idx,
                                   const std::vector<OutcomeModel>& outcome_models,
                                   Eigen::Index T, std::uint64_t seed) {
    if (T < 1) throw argument_error("conformity_scores: T must be >= 1");
    ConformityScores s;
    s.calib_idx = calib_idx;
    const Eigen::Index n = s.n_cal();
    s.r.resize(calib_idx.size());

    Eigen::VectorXd mu(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        mu[i] = fit.predict(ds, calib_idx[i]);
        s.r[static_cast<std::size_t>(i)] = ds.r[calib_idx[i]];
        if (ds.r[calib_idx[i]] == 1) s.complete_pos.push_back(i);
    }
    s.observed.resize(s.m_cal());
    for (Eigen::Index j = 0; j < s.m_cal(); ++j) {
        const Eigen::Index pos = s.complete_pos[static_cast<std::size_t>(j)];
        s.observed[j] = std::abs(ds.y[calib_idx[pos]] - mu[pos]);
    }

    const auto K = static_cast<Eigen::Index>(outcome_models.size());
    s.imputed.resize(K, n);
    s.draw_scores.resize(static_cast<std::size_t>(K));
    for (Eigen::Index k = 0; k < K; ++k) {
        const auto draws = draw_imputations(outcome_models[static_cast<std::size_t>(k)], ds,
                                            calib_idx, T,
                                            derive_seed(seed, "calib-imputation", static_cast<std::uint64_t>(k)),
                                            static_cast<int>(k));
        Eigen::MatrixXd sc = (draws.values.rowwise() - mu.transpose()).cwiseAbs();
        s.imputed.row(k) = sc.colwise().mean();
        s.draw_scores[static_cast<std::size_t>(k)] = std::move(sc);
    }
    return s;
}

double model_wise_quantile(const ConformityScores& scores, Eigen::Index k, double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw argument_error("model_wise_quantile: tau outside (0,1)");
    if (k < 0 || k >= scores.models()) throw argument_error("model_wise_quantile: bad model index");
    const auto& dsc = scores.draw_scores[static_cast<std::size_t>(k)];
    const Eigen::Index T = dsc.rows();
    std::vector<WeightedValue> pool;
    pool.reserve(static_cast<std::size_t>(scores.m_cal() +
                                          (scores.n_cal() - scores.m_cal()) * T));
    for (Eigen::Index j = 0; j < scores.m_cal(); ++j) pool.push_back({scores.observed[j], 1.0});
    const double w = 1.0 / static_cast<double>(T);
    for (Eigen::Index pos = 0; pos < scores.n_cal(); ++pos) {
        if (scores.r[static_cast<std::size_t>(pos)] == 1) continue;
        for (Eigen::Index t = 0; t < T; ++t) pool.push_back({dsc(t, pos), w});
    }
    if (pool.empty()) throw argument_error("model_wise_quantile: empty pool");
    return weighted_quantile(std::move(pool), tau);
}

double model_psi(const ConformityScores& scores, Eigen::Index k, Eigen::Index pos, double q,
                 double tau) {
    const auto& dsc = scores.draw_scores[static_cast<std::size_t>(k)];
    double acc = 0.0;
    for (Eigen::Index t = 0; t < dsc.rows(); ++t) acc += psi(dsc(t, pos) - q, tau);
    return acc / static_cast<double>(dsc.rows());
}

double psi_moment(const ConformityScores& scores, Eigen::Index k, double q_k, double tau) {
    double acc = 0.0;
    Eigen::Index obs = 0;
    for (Eigen::Index pos = 0; pos < scores.n_cal(); ++pos) {
        if (scores.r[static_cast<std::size_t>(pos)] == 1)
            acc += psi(scores.observed[obs++] - q_k, tau);
        else
            acc += model_psi(scores, k, pos, q_k, tau);
    }
    return acc / static_cast<double>(scores.n_cal());
}

MomentMatrix calib_moments(const Dataset& ds, const IndexList& calib_idx,
                           const std::vector<PropensityModel>& propensities,
                           const ConformityScores& scores, const Eigen::VectorXd& q_k,
                           const Eigen::VectorXd& xi_k, double tau, PsiVariant variant,
                           Eigen::VectorXd* psi_centers_out, Eigen::VectorXd* theta_out) {
    const auto J = static_cast<Eigen::Index>(propensities.size());
    const Eigen::Index K = scores.models();
    if (q_k.size() != K || xi_k.size() != K)
        throw argument_error("calib_moments: q_k/xi_k length mismatch");
    const Eigen::Index n = scores.n_cal();
    const Eigen::Index m = scores.m_cal();

    Eigen::MatrixXd pi_vals(n, J);
    for (Eigen::Index j = 0; j < J; ++j)
        for (Eigen::Index pos = 0; pos < n; ++pos)
            pi_vals(pos, j) = propensities[static_cast<std::size_t>(j)].predict(ds, calib_idx[pos]);
    const Eigen::RowVectorXd theta = pi_vals.colwise().mean();
    if (theta_out != nullptr) *theta_out = theta.transpose();

    // psi entries of complete cases; centering per variant
    Eigen::MatrixXd psi_vals(m, K);
    Eigen::VectorXd centers(K);
    for (Eigen::Index k = 0; k < K; ++k) {
        if (variant == PsiVariant::imputed) {
            // model-implied per-draw mean psi, centered by its mean over the
            // whole calibration set (same construction as theta_j)
            double mean_all = 0.0;
            for (Eigen::Index pos = 0; pos < n; ++pos)
                mean_all += model_psi(scores, k, pos, q_k[k], tau);
            centers[k] = mean_all / static_cast<double>(n);
            for (Eigen::Index j = 0; j < m; ++j)
                psi_vals(j, k) =
                    model_psi(scores, k, scores.complete_pos[static_cast<std::size_t>(j)],
                              q_k[k], tau);
        } else {
            centers[k] = xi_k[k];
            for (Eigen::Index j = 0; j < m; ++j)
                psi_vals(j, k) = psi(scores.observed[j] - q_k[k], tau);
        }
    }
    if (psi_centers_out != nullptr) *psi_centers_out = centers;

    MomentMatrix mm;
    mm.v.resize(m, J + K);
    for (Eigen::Index j = 0; j < m; ++j) {
        const Eigen::Index pos = scores.complete_pos[static_cast<std::size_t>(j)];
        mm.v.row(j).head(J) = pi_vals.row(pos) - theta;
        mm.v.row(j).tail(K) = psi_vals.row(j) - centers.transpose();
    }
    return mm;
}

double solve_q_mr(const Eigen::VectorXd& observed_scores, const Eigen::VectorXd& d,
                  double level) {
    if (observed_scores.size() == 0) throw argument_error("solve_q_mr: no observed scores");
    if (d.size() != observed_scores.size()) throw argument_error("solve_q_mr: weight mismatch");
    if (d.minCoeff() <= 0.0) throw argument_error("solve_q_mr: weights must be positive");
    return weighted_quantile(observed_scores, d, level);
}

CalibrationResult calibrate_with_scores(const Dataset& ds, const IndexList& calib_idx,
                                        const std::vector<PropensityModel>& propensities,
                                        const ConformityScores& scores, double tau,
                                        const CalibrationOptions& options) {
    if (!(tau > 0.0 && tau < 1.0)) throw argument_error("calibrate: tau outside (0,1)");
    CalibrationResult res;
    res.n_cal = scores.n_cal();
    res.m_cal = scores.m_cal();
    if (res.m_cal == 0) throw argument_error("calibrate: no complete calibration cases");

    const Eigen::Index K = scores.models();
    res.q_k.resize(K);
    res.xi_k.resize(K);
    for (Eigen::Index k = 0; k < K; ++k) {
        res.q_k[k] = model_wise_quantile(scores, k, tau);
        res.xi_k[k] = psi_moment(scores, k, res.q_k[k], tau);
    }

    MomentMatrix mm = calib_moments(ds, calib_idx, propensities, scores, res.q_k,
                                    res.xi_k, tau, options.psi_variant,
                                    &res.psi_centers, &res.theta_j);
    // A column whose complete-case entries are single-signed can never be
    // balanced by positive weights. Zero it so the solver drops and reports it
    // as a degenerate direction instead of running off to the boundary.
    for (Eigen::Index c = 0; c < mm.cols(); ++c) {
        const double lo = mm.v.col(c).minCoeff();
        const double hi = mm.v.col(c).maxCoeff();
        const double eps = 1e-12 * std::max(std::abs(lo), std::abs(hi));
        if (lo >= -eps || hi <= eps) mm.v.col(c).setZero();
    }
    res.el = solve_el(mm);
    res.d = res.el.weights;
    res.lambda = res.el.rho;

    res.level = conformal_level(static_cast<std::size_t>(res.n_cal), tau,
                                options.finite_sample_correction);
    res.q_mr = solve_q_mr(scores.observed, res.d, res.level);
    return res;
}

CalibrationResult calibrate(const MRFit& fit, const Dataset& ds, const IndexList& calib_idx,
                            const std::vector<PropensityModel>& propensities,
                            const std::vector<OutcomeModel>& outcome_models, double tau,
                            Eigen::Index T, std::uint64_t seed,
                            const CalibrationOptions& options) {
    const auto scores = conformity_scores(fit, ds, calib_idx, outcome_models, T, seed);
    return calibrate_with_scores(ds, calib_idx, propensities, scores, tau, options);
}

PredictionInterval predict_interval(const MRFit& fit, const Eigen::VectorXd& covariates,
                                    const CalibrationResult& result) {
    return PredictionInterval{fit.predict(covariates), result.q_mr};
}

}  // namespace mrcp
