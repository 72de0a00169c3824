#include "mrcp/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "mrcp/baselines.hpp"
#include "mrcp/errors.hpp"
#include "mrcp/rng.hpp"
#include "mrcp/sim_harness.hpp"

namespace mrcp {

namespace {

struct CommonFlags {
    double tau = 0.9;
    long long T = 100;
    std::uint64_t seed = 42;
    std::string out_dir = ".";
    std::string psi_variant = "imputed";
    bool finite_sample_correction = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--tau", f.tau, "Target coverage level")->check(CLI::Range(1e-6, 1.0 - 1e-6));
    cmd->add_option("--T", f.T, "Monte Carlo imputation draws per row")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", f.seed, "Master seed");
    cmd->add_option("--out-dir", f.out_dir, "Output directory");
    cmd->add_option("--psi-variant", f.psi_variant,
                    "Score entry of complete cases in the calibration moments")
        ->check(CLI::IsMember({"imputed", "observed"}));
    cmd->add_flag("--finite-sample-correction", f.finite_sample_correction,
                  "Use the conservative ceil((n+1)tau)/n quantile level");
}

CalibrationOptions calibration_options(const CommonFlags& f) {
    CalibrationOptions opt;
    opt.psi_variant = (f.psi_variant == "observed") ? PsiVariant::observed : PsiVariant::imputed;
    opt.finite_sample_correction = f.finite_sample_correction;
    return opt;
}

std::vector<Eigen::Index> parse_columns(const std::string& list, const Dataset& ds,
                                        const std::string& what) {
    std::vector<Eigen::Index> cols;
    std::stringstream ss(list);
    std::string name;
    while (std::getline(ss, name, ',')) {
        auto b = name.find_first_not_of(" \t");
        auto e = name.find_last_not_of(" \t");
        if (b == std::string::npos) continue;
        name = name.substr(b, e - b + 1);
        bool found = false;
        for (Eigen::Index j = 0; j < ds.p(); ++j)
            if (ds.covariate_names[static_cast<std::size_t>(j)] == name) {
                cols.push_back(j);
                found = true;
                break;
            }
        if (!found)
            throw argument_error(what + ": unknown covariate '" + name + "'");
    }
    if (cols.empty()) throw argument_error(what + ": no covariates given");
    return cols;
}

int cmd_simulate(const CommonFlags& common, ExperimentConfig config, std::ostream& err) {
    config.options.tau = common.tau;
    config.options.T = common.T;
    config.master_seed = common.seed;
    config.options.calibration = calibration_options(common);

    const ExperimentResult result = run_experiment(config);

    namespace fs = std::filesystem;
    fs::create_directories(common.out_dir);
    {
        std::ofstream out(fs::path(common.out_dir) / "summary.csv");
        write_summary_csv(out, result);
    }
    {
        std::ofstream out(fs::path(common.out_dir) / "lengths.csv");
        write_lengths_csv(out, result);
    }
    for (const auto& s : result.summaries)
        if (s.failed)
            err << "cell_failed setting=" << s.setting << " scenario=" << s.scenario
                << " method=" << method_name(s.method) << " error=\"" << s.first_error
                << "\"\n";
    return result.any_failure ? 1 : 0;
}

// Covariate rows to predict; the outcome column is optional here.
Eigen::MatrixXd load_prediction_rows(const std::string& path, const Dataset& train,
                                     const std::string& y_col, const std::string& r_col) {
    std::ifstream probe(path);
    if (!probe) throw parse_error("cannot open " + path);
    std::string header;
    std::getline(probe, header);
    probe.close();
    const bool has_y = header.find(y_col) != std::string::npos;

    Dataset fresh;
    if (has_y) {
        const bool has_r = !r_col.empty() && header.find(r_col) != std::string::npos;
        fresh = load_csv(path, y_col, has_r ? r_col : "");
    } else {
        // append a virtual all-missing outcome so the loader applies
        namespace fs = std::filesystem;
        const fs::path tmp = fs::temp_directory_path() /
                             ("mrcp_pred_" + std::to_string(fnv1a(path)) + ".csv");
        std::ifstream in(path);
        std::ofstream out(tmp);
        std::string line;
        bool first = true;
        while (std::getline(in, line)) {
            while (!line.empty() && (line.back() == '\r' || line.back() == '\n'))
                line.pop_back();
            if (line.empty()) continue;
            out << line << ',' << (first ? y_col : "") << '\n';
            first = false;
        }
        out.close();
        fresh = load_csv(tmp.string(), y_col, "");
        fs::remove(tmp);
    }
    if (fresh.covariate_names != train.covariate_names)
        throw argument_error("predict: covariate schema mismatch between training and new CSV");
    return fresh.x;
}

int cmd_predict(const CommonFlags& common, const std::string& train_path,
                const std::string& new_path, const std::string& y_col, const std::string& r_col,
                const std::vector<std::string>& prop_flags,
                const std::vector<std::string>& out_flags, double split_fraction,
                const std::string& out_path, std::ostream& out_stream, std::ostream& err) {
    const Dataset train = load_csv(train_path, y_col, r_col);
    const Eigen::MatrixXd fresh_x = load_prediction_rows(new_path, train, y_col, r_col);

    std::vector<ModelSpec> prop_specs, out_specs;
    for (const auto& f : prop_flags)
        prop_specs.push_back({ModelKind::propensity, parse_columns(f, train, "--propensity-model")});
    for (const auto& f : out_flags)
        out_specs.push_back({ModelKind::outcome, parse_columns(f, train, "--outcome-model")});
    if (prop_specs.empty()) prop_specs.push_back(full_spec(train, ModelKind::propensity));
    if (out_specs.empty()) out_specs.push_back(full_spec(train, ModelKind::outcome));

    const SplitIndices idx = split(train, split_fraction, derive_seed(common.seed, {"split"}));

    std::vector<PropensityModel> props;
    for (const auto& spec : prop_specs) props.push_back(fit_propensity(train, idx.train, spec));
    std::vector<OutcomeModel> out_models;
    std::vector<OutcomeWorking> outcomes;
    const ModelSpec mu_spec = full_spec(train);
    for (std::size_t k = 0; k < out_specs.size(); ++k) {
        OutcomeWorking ow;
        ow.model = fit_outcome(train, idx.train, out_specs[k]);
        ow.draws = draw_imputations(ow.model, train, idx.train, common.T,
                                    derive_seed(common.seed, "train-imputation", k),
                                    static_cast<int>(k));
        ow.estimate = per_model_estimate(train, idx.train, ow.draws, mu_spec);
        out_models.push_back(ow.model);
        outcomes.push_back(std::move(ow));
    }

    const ELSolution train_el = solve_el(build_train_moments(train, idx.train, props, outcomes));
    const MRFit fit = mr_fit(train, idx.train, train_el);
    const CalibrationResult cal =
        calibrate(fit, train, idx.calib, props, out_models, common.tau, common.T,
                  derive_seed(common.seed, {"calib"}), calibration_options(common));

    // diagnostics as key=value lines on stderr; stdout stays machine-readable
    err << "q_mr=" << cal.q_mr << "\n";
    err << "lambda_norm=" << cal.lambda.norm() << "\n";
    err << "el_iterations=" << cal.el.iterations << "\n";
    err << "train_el_iterations=" << fit.train_weights.iterations << "\n";
    for (Eigen::Index k = 0; k < cal.q_k.size(); ++k)
        err << "q_" << (k + 1) << "=" << cal.q_k[k] << "\n";
    if (!cal.el.dropped_columns.empty()) {
        err << "dropped_calibration_moments=";
        for (std::size_t i = 0; i < cal.el.dropped_columns.size(); ++i)
            err << (i ? "," : "") << cal.el.dropped_columns[i];
        err << "\n";
    }
    if (!fit.train_weights.dropped_columns.empty()) {
        err << "dropped_train_moments=";
        for (std::size_t i = 0; i < fit.train_weights.dropped_columns.size(); ++i)
            err << (i ? "," : "") << fit.train_weights.dropped_columns[i];
        err << "\n";
    }

    std::ofstream file;
    std::ostream* sink = &out_stream;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) throw argument_error("predict: cannot write '" + out_path + "'");
        sink = &file;
    }
    char buf[40];
    *sink << "prediction,lower,upper\n";
    for (Eigen::Index i = 0; i < fresh_x.rows(); ++i) {
        const PredictionInterval pi =
            predict_interval(fit, fresh_x.row(i).transpose(), cal);
        std::snprintf(buf, sizeof buf, "%.17g", pi.center);
        *sink << buf << ',';
        std::snprintf(buf, sizeof buf, "%.17g", pi.lower());
        *sink << buf << ',';
        std::snprintf(buf, sizeof buf, "%.17g", pi.upper());
        *sink << buf << '\n';
    }
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multiple-robust conformal prediction intervals for outcomes missing at random"};
    app.require_subcommand(1);
    // config keys live under [simulate] / [predict] sections; flags win
    app.set_config("--config", "", "Config file (TOML/INI, one section per subcommand)");

    CommonFlags common;

    auto* sim = app.add_subcommand("simulate", "Run the Monte Carlo experiment grid");
    sim->configurable();
    sim->fallthrough(true);
    add_common(sim, common);
    ExperimentConfig config;
    std::vector<std::string> method_names = {"CM-MRL", "Impute-SC", "SC-CC", "Oracle"};
    long long n = 1600, n_eval = 2000;
    sim->add_option("--n", n, "Sample size per replicate")->check(CLI::Range(2LL, 100000000LL));
    sim->add_option("--n-eval", n_eval, "Fresh evaluation points per replicate")
        ->check(CLI::PositiveNumber);
    sim->add_option("--replicates", config.replicates, "Monte Carlo replicates per cell")
        ->check(CLI::PositiveNumber);
    sim->add_option("--settings", config.settings, "Subset of S1 S2 S3 S4")
        ->delimiter(',')
        ->check(CLI::IsMember({"S1", "S2", "S3", "S4"}));
    std::vector<std::string> scen_names = {"A", "B", "C"};
    sim->add_option("--scenarios", scen_names, "Subset of A B C")
        ->delimiter(',')
        ->check(CLI::IsMember({"A", "B", "C"}));
    sim->add_option("--methods", method_names, "Subset of CM-MRL Impute-SC SC-CC Oracle")
        ->delimiter(',')
        ->check(CLI::IsMember({"CM-MRL", "Impute-SC", "SC-CC", "Oracle"}));
    sim->add_option("--threads", config.threads, "Worker threads")->check(CLI::PositiveNumber);
    sim->add_option("--scenario-c-sigma", config.scenario_c_sigma,
                    "Sigma multiplier of scenario C");
    sim->add_option("--impute-model-index", config.options.impute_model_index,
                    "Outcome model used by Impute-SC (0-based)");

    auto* pred = app.add_subcommand("predict", "Fit and calibrate on a CSV, emit intervals");
    pred->configurable();
    pred->fallthrough(true);
    add_common(pred, common);
    std::string train_path, new_path, y_col = "y", r_col, out_path;
    std::vector<std::string> prop_flags, out_flags;
    double split_fraction = 0.5;
    pred->add_option("--train", train_path, "Training CSV (may contain missing outcomes)")
        ->required();
    pred->add_option("--new", new_path, "CSV of rows to predict")->required();
    pred->add_option("--y-col", y_col, "Outcome column name");
    pred->add_option("--r-col", r_col, "Observation-indicator column name (optional)");
    pred->add_option("--propensity-model", prop_flags,
                     "Covariates of one propensity model (comma separated; repeatable)");
    pred->add_option("--outcome-model", out_flags,
                     "Covariates of one outcome model (comma separated; repeatable)");
    pred->add_option("--split-fraction", split_fraction, "Training fraction of the split")
        ->check(CLI::Range(1e-6, 1.0 - 1e-6));
    pred->add_option("--out", out_path, "Intervals CSV path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {  // --help
            out << app.help();
            return 0;
        }
        err << "error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (sim->parsed()) {
            config.n = static_cast<Eigen::Index>(n);
            config.options.n_eval = static_cast<Eigen::Index>(n_eval);
            config.scenarios.clear();
            for (const auto& s : scen_names) config.scenarios.push_back(s[0]);
            config.methods.clear();
            for (const auto& m : method_names) config.methods.push_back(*method_from_name(m));
            return cmd_simulate(common, std::move(config), err);
        }
        return cmd_predict(common, train_path, new_path, y_col, r_col, prop_flags, out_flags,
                           split_fraction, out_path, out, err);
    } catch (const argument_error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const parse_error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const consistency_error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace mrcp
