#pragma once

#include <Eigen/Dense>
#include <vector>

#include "mrcp/dataset.hpp"
#include "mrcp/el_solver.hpp"
#include "mrcp/working_models.hpp"

namespace mrcp {

// One fitted imputation route: the outcome model, its Monte Carlo draws over
// the training rows, and the per-model least-squares estimate mu-hat_k.
struct OutcomeWorking {
    OutcomeModel model;
    ImputationDraws draws;
    PerModelEstimate estimate;
};

// Multiple-robust regression fit: EL-weighted least squares on complete
// training cases.
struct MRFit {
    Eigen::VectorXd beta;     // prediction function is beta . (1, x)
    ModelSpec spec;           // full covariate class
    ELSolution train_weights;

    double predict(const Dataset& ds, Eigen::Index row) const;
    double predict(const Eigen::VectorXd& covariates) const;  // raw covariate vector
};

// Training-stage moment matrix over the complete cases of train_idx. Row i
// holds pi_j(x_i) - theta_j for each propensity model, then g_k(x_i) - eta_k
// for each outcome route, where g_k(x_i) is the T-draw mean of
// (Yhat_i^t - mu_k(x_i)) and theta/eta average over all training rows.
// Draws must cover every training row (observed and missing alike).
MomentMatrix build_train_moments(const Dataset& ds, const IndexList& train_idx,
                                 const std::vector<PropensityModel>& propensities,
                                 const std::vector<OutcomeWorking>& outcomes);

// Weighted least squares of y on (1, x) over complete training cases with the
// EL weights; closed form via the weighted normal equations.
MRFit mr_fit(const Dataset& ds, const IndexList& train_idx, const ELSolution& el);

}  // namespace mrcp
