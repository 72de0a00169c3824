#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace mrcp {

using IndexList = std::vector<Eigen::Index>;

// Regression sample with outcomes missing at random. Covariates are always
// fully observed; y[i] is meaningful only where r[i] == 1 (it is NaN
// elsewhere). Immutable after construction.
struct Dataset {
    Eigen::MatrixXd x;                       // n x p covariates, no intercept column
    Eigen::VectorXd y;                       // NaN where r == 0
    std::vector<std::uint8_t> r;             // 1 = outcome observed
    std::vector<std::string> covariate_names;
    std::string y_name = "y";

    Eigen::Index n() const { return x.rows(); }
    Eigen::Index p() const { return x.cols(); }
    Eigen::Index observed_count() const;

    // throws if the invariants above are violated
    void validate() const;

    static Dataset make(Eigen::MatrixXd x, Eigen::VectorXd y, std::vector<std::uint8_t> r,
                        std::vector<std::string> names = {}, std::string y_name = "y");
};

// Disjoint train/calibration partition of 0..n-1.
struct SplitIndices {
    IndexList train;
    IndexList calib;
};

enum class ModelKind { propensity, outcome };

// Which covariate columns enter a working model; the intercept is implicit
// and always prepended when the design matrix is built.
struct ModelSpec {
    ModelKind kind = ModelKind::outcome;
    std::vector<Eigen::Index> columns;

    void validate(const Dataset& ds) const;
};

// n_idx x (1 + |spec.columns|) design matrix with a leading column of ones.
Eigen::MatrixXd design_matrix(const Dataset& ds, const IndexList& idx, const ModelSpec& spec);
Eigen::VectorXd design_row(const Dataset& ds, Eigen::Index row, const ModelSpec& spec);

ModelSpec full_spec(const Dataset& ds, ModelKind kind = ModelKind::outcome);

// CSV ingestion. Header row required; all cells numeric except that the y
// column may be empty (missing). An optional r column (0/1) overrides the
// empty-cell convention; y must then be present wherever r = 1, and any y
// value on an r = 0 row is discarded.
Dataset load_csv(const std::string& path, const std::string& y_column,
                 const std::string& r_column = "");

// Writes covariates, y and r with 17 significant digits so that
// load(save(ds)) reproduces the dataset bit-exactly.
void save_csv(const Dataset& ds, const std::string& path);

// Uniform random permutation, then prefix split: the first
// floor(fraction * n) rows become the training set. Deterministic in seed.
SplitIndices split(const Dataset& ds, double fraction, std::uint64_t seed);

}  // namespace mrcp
