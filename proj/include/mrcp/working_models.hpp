#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <unordered_map>

#include "mrcp/dataset.hpp"

namespace mrcp {

// Logistic working model for P(R = 1 | X), fitted by maximum likelihood.
struct PropensityModel {
    ModelSpec spec;
    Eigen::VectorXd coef;  // a-hat, intercept first
    bool fitted = false;

    double predict(const Dataset& ds, Eigen::Index row) const;
};

// Gaussian working model for Y | X: linear mean plus N(0, sigma^2) residual.
struct OutcomeModel {
    ModelSpec spec;
    Eigen::VectorXd coef;  // b-hat, intercept first
    double sigma = 0.0;    // MLE residual sd (denominator m, not m - p)
    bool fitted = false;

    double predict(const Dataset& ds, Eigen::Index row) const;
};

// T Monte Carlo outcome draws for each target row, from one outcome model.
struct ImputationDraws {
    Eigen::MatrixXd values;  // T x n_target
    IndexList target_idx;
    int model_index = 0;
    std::uint64_t seed = 0;

    Eigen::Index T() const { return values.rows(); }
    // column holding draws for dataset row `row`; throws if absent
    Eigen::Index column_of(Eigen::Index row) const;

  private:
    mutable std::unordered_map<Eigen::Index, Eigen::Index> lookup_;
};

// Least-squares fit of the prediction function on observed outcomes plus
// Monte Carlo imputations (mu-hat_k).
struct PerModelEstimate {
    ModelSpec spec;           // function class of mu (full covariates by default)
    Eigen::VectorXd mu;       // fitted coefficients
    double predict(const Dataset& ds, Eigen::Index row) const;
};

// Bernoulli maximum likelihood by iteratively reweighted least squares.
// Converges to gradient norm <= 1e-8 (at most 100 iterations), halving the
// step while the log-likelihood decreases. Detects perfect separation
// (coefficients diverging past 1e3 with the likelihood still improving) and
// singular information matrices.
PropensityModel fit_propensity(const Dataset& ds, const IndexList& idx, const ModelSpec& spec);

// Gaussian conditional MLE on the complete cases among idx: OLS coefficients
// and sigma = sqrt(RSS / m). Requires at least |columns| + 2 complete cases.
OutcomeModel fit_outcome(const Dataset& ds, const IndexList& idx, const ModelSpec& spec);

// values(t, i) = x_i . coef + sigma * z with independent standard normal z,
// deterministic in seed (row-major draw order: t outer, target inner).
ImputationDraws draw_imputations(const OutcomeModel& model, const Dataset& ds,
                                 const IndexList& target_idx, Eigen::Index T,
                                 std::uint64_t seed, int model_index = 0);

enum class Loss { least_squares };

// Minimizes
//   sum_{r=1} L(y_i - mu(x_i)) + sum_{r=0} (1/T) sum_t L(Yhat_i^t - mu(x_i))
// over linear mu. For least squares this is a single weighted OLS on the
// stacked system (each imputed replicate carries weight 1/T).
PerModelEstimate per_model_estimate(const Dataset& ds, const IndexList& idx,
                                    const ImputationDraws& draws, const ModelSpec& mu_spec,
                                    Loss loss = Loss::least_squares);

}  // namespace mrcp
