#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "mrcp/dataset.hpp"
#include "mrcp/double_calibration.hpp"
#include "mrcp/mr_regression.hpp"

namespace mrcp {

enum class BaselineKind { split_conformal_cc, impute_sc };

// A fitted interval constructor: linear center plus constant half-width.
struct IntervalModel {
    Eigen::VectorXd beta;  // center coefficients over (1, x)
    double half_width = 0.0;
    double level = 0.0;

    PredictionInterval predict(const Eigen::VectorXd& covariates) const;
};

// Split conformal on complete calibration cases: the half-width is the
// generalized-inverse quantile of the observed scores |y_i - beta . x_i| at
// the conformal level for m_cal points, uniform weights.
IntervalModel split_conformal_cc(const Eigen::VectorXd& center_beta, const Dataset& ds,
                                 const IndexList& calib_idx, double tau,
                                 bool finite_sample_correction = false);

// Impute-then-split-conformal: missing calibration scores are replaced by the
// designated outcome model's imputed scores (per-draw, weight 1/T) and the
// quantile is taken over the pooled vector at the conformal level for n_cal.
IntervalModel impute_sc(const Dataset& ds, const IndexList& calib_idx,
                        const OutcomeModel& outcome_model, const MRFit& fit, double tau,
                        Eigen::Index T, std::uint64_t seed,
                        bool finite_sample_correction = false);

// Same, reusing scores already drawn for the calibration stage.
IntervalModel impute_sc(const ConformityScores& scores, const MRFit& fit, double tau,
                        Eigen::Index model_index = 0, bool finite_sample_correction = false);

}  // namespace mrcp
