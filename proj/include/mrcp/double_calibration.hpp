#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mrcp/dataset.hpp"
#include "mrcp/el_solver.hpp"
#include "mrcp/mr_regression.hpp"
#include "mrcp/working_models.hpp"

namespace mrcp {

// Conformity scores over the calibration set.
//
// Observed scores |y_i - mu(x_i)| exist for complete cases only. Imputed
// scores exist for every calibration row and every outcome model k: the
// per-draw scores |Yhat_i^(t,k) - mu(x_i)| are kept (they are what the
// check-loss pooling and the psi moments consume, mirroring how the training
// stage averages the loss over draws rather than the draws inside the loss),
// and `imputed` stores their T-average as the per-row score summary.
struct ConformityScores {
    IndexList calib_idx;
    std::vector<std::uint8_t> r;              // observation flags over calib_idx
    std::vector<Eigen::Index> complete_pos;   // positions within calib_idx with r = 1
    Eigen::VectorXd observed;                 // aligned with complete_pos
    Eigen::MatrixXd imputed;                  // K x n_cal, T-averaged scores
    std::vector<Eigen::MatrixXd> draw_scores; // K entries of T x n_cal

    Eigen::Index n_cal() const { return static_cast<Eigen::Index>(calib_idx.size()); }
    Eigen::Index m_cal() const { return static_cast<Eigen::Index>(complete_pos.size()); }
    Eigen::Index models() const { return static_cast<Eigen::Index>(draw_scores.size()); }
};

// Which score enters the psi entry of a complete calibration case in the
// calibration moment matrix. `imputed` (default) uses the model-implied
// per-draw mean psi, a pure function of x_i; `observed` uses the indicator
// psi of the realized score.
enum class PsiVariant { imputed, observed };

struct CalibrationOptions {
    PsiVariant psi_variant = PsiVariant::imputed;
    // Final-quantile level convention: ceil((n_eff+1)*tau)/(n_eff+1) by
    // default; the conservative flag switches to ceil((n_eff+1)*tau)/n_eff.
    bool finite_sample_correction = false;
};

struct CalibrationResult {
    Eigen::VectorXd q_k;          // model-wise quantiles
    Eigen::VectorXd xi_k;         // centered psi moments at q_k
    Eigen::VectorXd theta_j;      // calibration-set propensity means
    Eigen::VectorXd psi_centers;  // centering constants of the psi columns
    Eigen::VectorXd d;            // EL weights on complete calibration cases
    Eigen::VectorXd lambda;       // EL multiplier
    double q_mr = 0.0;            // calibrated conformity quantile
    double level = 0.0;           // effective quantile level used for q_mr
    ELSolution el;                // full solver output (diagnostics)
    Eigen::Index n_cal = 0, m_cal = 0;
};

struct PredictionInterval {
    double center = 0.0;
    double half_width = 0.0;
    double lower() const { return center - half_width; }
    double upper() const { return center + half_width; }
};

// Observed scores for complete calibration cases and per-draw/averaged
// imputed scores for all calibration rows. Draw streams are derived from
// `seed` per model, so results are deterministic and independent of K order.
ConformityScores conformity_scores(const MRFit& fit, const Dataset& ds,
                                   const IndexList& calib_idx,
                                   const std::vector<OutcomeModel>& outcome_models,
                                   Eigen::Index T, std::uint64_t seed);

// Model-wise tau-quantile: minimizer of the pooled check-loss risk
//   (1/n_cal) sum_i [ r_i rho_tau(eps_i - q) + (1-r_i) (1/T) sum_t rho_tau(eps_it - q) ]
// realized as the weighted generalized-inverse quantile of the pool (observed
// scores at weight 1, per-draw imputed scores at weight 1/T).
double model_wise_quantile(const ConformityScores& scores, Eigen::Index k, double tau);

// Centered psi moment at q_k over the whole calibration set; observed rows
// contribute psi of the realized score, missing rows the per-draw mean psi.
double psi_moment(const ConformityScores& scores, Eigen::Index k, double q_k, double tau);

// Per-draw mean psi of model k at threshold q for one calibration position.
double model_psi(const ConformityScores& scores, Eigen::Index k, Eigen::Index pos, double q,
                 double tau);

// Calibration-stage moment matrix over complete calibration cases: propensity
// columns pi_j(x_i) - theta_j (theta over all calibration rows) followed by
// one psi column per outcome model. With PsiVariant::imputed the psi entries
// are the model-implied per-draw means centered by their full-calibration
// mean; with PsiVariant::observed they are psi of the realized score centered
// by xi_k. psi_centers_out (optional) receives the centering constants.
MomentMatrix calib_moments(const Dataset& ds, const IndexList& calib_idx,
                           const std::vector<PropensityModel>& propensities,
                           const ConformityScores& scores, const Eigen::VectorXd& q_k,
                           const Eigen::VectorXd& xi_k, double tau,
                           PsiVariant variant = PsiVariant::imputed,
                           Eigen::VectorXd* psi_centers_out = nullptr,
                           Eigen::VectorXd* theta_out = nullptr);

// Smallest observed score whose cumulative weight reaches `level`: the left
// endpoint of the root set of sum_i d_i psi_tau(eps_i - q) = 0, ties leftward.
double solve_q_mr(const Eigen::VectorXd& observed_scores, const Eigen::VectorXd& d,
                  double level);

// Full second calibration stage: scores -> model-wise quantiles -> moments ->
// EL weights -> calibrated quantile.
CalibrationResult calibrate(const MRFit& fit, const Dataset& ds, const IndexList& calib_idx,
                            const std::vector<PropensityModel>& propensities,
                            const std::vector<OutcomeModel>& outcome_models, double tau,
                            Eigen::Index T, std::uint64_t seed,
                            const CalibrationOptions& options = {});

// Same, starting from scores already computed.
CalibrationResult calibrate_with_scores(const Dataset& ds, const IndexList& calib_idx,
                                        const std::vector<PropensityModel>& propensities,
                                        const ConformityScores& scores, double tau,
                                        const CalibrationOptions& options = {});

PredictionInterval predict_interval(const MRFit& fit, const Eigen::VectorXd& covariates,
                                    const CalibrationResult& result);

}  // namespace mrcp
