#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mrcp/dataset.hpp"
#include "mrcp/double_calibration.hpp"

namespace mrcp {

enum class NoiseKind { gaussian_unit, student_t3_unit_variance, hetero_gaussian };

// Error-term choices: A is N(0,1) with sigma 1, B is t3 scaled to unit
// variance with sigma 1, C is N(0, (0.6+0.2|x1|)^2) with sigma 0.6.
struct ScenarioSpec {
    char id = 'A';
    double sigma = 1.0;
    NoiseKind noise = NoiseKind::gaussian_unit;

    static ScenarioSpec standard(char id, double c_sigma = 0.6);
};

// Which candidate working models are handed to the learner.
struct SettingSpec {
    std::string id = "S1";
    bool use_pi1 = true, use_pi2 = true, use_a1 = true, use_a2 = true;

    static SettingSpec standard(const std::string& id);
};

enum class Method { cm_mrl, impute_sc, sc_cc, oracle };

const char* method_name(Method m);
std::optional<Method> method_from_name(const std::string& name);

struct ExperimentSummary {
    Method method;
    std::string setting;
    char scenario;
    double coverage_mean = 0.0, coverage_sd = 0.0;
    double length_mean = 0.0, length_sd = 0.0;
    int replicates = 0;
    bool failed = false;
    std::string first_error;  // diagnostic from the first failing replicate
};

struct ReplicateRow {
    Method method;
    std::string setting;
    char scenario;
    int replicate;
    double coverage, length;
    bool failed = false;
};

// Covariates X1 ~ N(5,1), X2 ~ Bernoulli(1/2), X3, X4 ~ N(0,1);
// Y = 3.5 + 0.5 X1 + 2 X2 + X3 + X4 + sigma * eps;
// logit P(R=1|X) = 3.5 - 5 X2. Deterministic in seed.
Dataset generate_data(Eigen::Index n, const ScenarioSpec& scenario, std::uint64_t seed);

// Same generator and stream, but every outcome is retained (r set to 1);
// used for coverage evaluation where the harness plays oracle.
Dataset generate_oracle_data(Eigen::Index n, const ScenarioSpec& scenario, std::uint64_t seed);

// True regression coefficients (intercept, X1..X4) of the generator.
Eigen::VectorXd true_beta();

// Candidate model column sets for a setting: propensity specs then outcome
// specs, in the fixed order pi1, pi2, a1, a2 restricted by the flags.
std::pair<std::vector<ModelSpec>, std::vector<ModelSpec>> candidate_models(
    const Dataset& ds, const SettingSpec& setting);

// Population tau-quantile of |noise| for a scenario (analytic for A and B,
// quadrature plus bisection for C).
double oracle_half_width(const ScenarioSpec& scenario, double tau);

struct HarnessOptions {
    double tau = 0.9;
    Eigen::Index T = 100;
    Eigen::Index n_eval = 2000;
    CalibrationOptions calibration{};
    Eigen::Index impute_model_index = 0;  // which outcome model Impute-SC uses
};

struct ReplicateResult {
    std::array<double, 4> coverage{};  // indexed by Method
    std::array<double, 4> length{};
};

// One full replicate: generate, half-split, fit the working models and the MR
// regression on train, calibrate, and evaluate every method's interval on a
// fresh sample whose outcomes are all known to the harness.
ReplicateResult run_replicate(Eigen::Index n, const ScenarioSpec& scenario,
                              const SettingSpec& setting, std::uint64_t seed,
                              const HarnessOptions& options);

struct ExperimentConfig {
    Eigen::Index n = 1600;
    int replicates = 50;
    std::uint64_t master_seed = 42;
    std::vector<std::string> settings = {"S1", "S2", "S3", "S4"};
    std::vector<char> scenarios = {'A', 'B', 'C'};
    std::vector<Method> methods = {Method::cm_mrl, Method::impute_sc, Method::sc_cc,
                                   Method::oracle};
    int threads = 1;
    double scenario_c_sigma = 0.6;
    HarnessOptions options{};
};

struct ExperimentResult {
    std::vector<ExperimentSummary> summaries;   // cell-major, methods in config order
    std::vector<ReplicateRow> rows;             // per replicate per cell per method
    bool any_failure = false;
};

// Monte Carlo grid over settings x scenarios. Replicate seeds derive from
// (master_seed, setting, scenario, replicate), so results are independent of
// execution order and thread count.
ExperimentResult run_experiment(const ExperimentConfig& config);

// CSV emitters (17 significant digits, stable ordering).
void write_summary_csv(std::ostream& out, const ExperimentResult& result);
void write_lengths_csv(std::ostream& out, const ExperimentResult& result);

}  // namespace mrcp
