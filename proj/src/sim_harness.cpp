#include "mrcp/sim_harness.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <thread>

#include "mrcp/baselines.hpp"
#include "mrcp/errors.hpp"
#include "mrcp/rng.hpp"
#include "mrcp/stats.hpp"

namespace mrcp {

ScenarioSpec ScenarioSpec::standard(char id, double c_sigma) {
    switch (id) {
        case 'A': return {'A', 1.0, NoiseKind::gaussian_unit};
        case 'B': return {'B', 1.0, NoiseKind::student_t3_unit_variance};
        case 'C': return {'C', c_sigma, NoiseKind::hetero_gaussian};
        default: throw argument_error(std::string("unknown scenario '") + id + "'");
    }
}

SettingSpec SettingSpec::standard(const std::string& id) {
    if (id == "S1") return {id, true, true, true, true};
    if (id == "S2") return {id, true, false, true, true};
    if (id == "S3") return {id, true, true, false, true};
    if (id == "S4") return {id, true, true, true, false};
    throw argument_error("unknown setting '" + id + "'");
}

const char* method_name(Method m) {
    switch (m) {
        case Method::cm_mrl: return "CM-MRL";
        case Method::impute_sc: return "Impute-SC";
        case Method::sc_cc: return "SC-CC";
        case Method::oracle: return "Oracle";
    }
    return "?";
}

std::optional<Method> method_from_name(const std::string& name) {
    for (Method m : {Method::cm_mrl, Method::impute_sc, Method::sc_cc, Method::oracle})
        if (name == method_name(m)) return m;
    return std::nullopt;
}

Eigen::VectorXd true_beta() {
    Eigen::VectorXd b(5);
    b << 3.5, 0.5, 2.0, 1.0, 1.0;
    return b;
}

namespace {

// covariates, latent outcomes, and observation flags before masking
struct RawSample {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    std::vector<std::uint8_t> r;
};

RawSample generate_raw(Eigen::Index n, const ScenarioSpec& scenario, std::uint64_t seed) {
    if (n < 1) throw argument_error("generate_data: n must be >= 1");
    Rng rng(seed);
    RawSample s;
    s.x.resize(n, 4);
    s.y.resize(n);
    s.r.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x1 = rng.normal(5.0, 1.0);
        const double x2 = rng.bernoulli(0.5) ? 1.0 : 0.0;
        const double x3 = rng.normal();
        const double x4 = rng.normal();
        s.x(i, 0) = x1;
        s.x(i, 1) = x2;
        s.x(i, 2) = x3;
        s.x(i, 3) = x4;
        double eps = 0.0;
        switch (scenario.noise) {
            case NoiseKind::gaussian_unit: eps = rng.normal(); break;
            case NoiseKind::student_t3_unit_variance:
                eps = rng.student_t3() / std::sqrt(3.0);  // Var(t3) = 3
                break;
            case NoiseKind::hetero_gaussian:
                eps = (0.6 + 0.2 * std::abs(x1)) * rng.normal();
                break;
        }
        s.y[i] = 3.5 + 0.5 * x1 + 2.0 * x2 + x3 + x4 + scenario.sigma * eps;
        s.r[static_cast<std::size_t>(i)] = rng.bernoulli(sigmoid(3.5 - 5.0 * x2)) ? 1 : 0;
    }
    return s;
}

Dataset dataset_from(RawSample s) {
    Dataset ds;
    ds.x = std::move(s.x);
    ds.y = std::move(s.y);
    ds.r = std::move(s.r);
    ds.covariate_names = {"x1", "x2", "x3", "x4"};
    return ds;
}

}  // namespace

Dataset generate_data(Eigen::Index n, const ScenarioSpec& scenario, std::uint64_t seed) {
    Dataset ds = dataset_from(generate_raw(n, scenario, seed));
    for (Eigen::Index i = 0; i < ds.n(); ++i)
        if (ds.r[static_cast<std::size_t>(i)] == 0)
            ds.y[i] = std::numeric_limits<double>::quiet_NaN();
    return ds;
}

Dataset generate_oracle_data(Eigen::Index n, const ScenarioSpec& scenario, std::uint64_t seed) {
    Dataset ds = dataset_from(generate_raw(n, scenario, seed));
    std::fill(ds.r.begin(), ds.r.end(), std::uint8_t{1});
    return ds;
}

std::pair<std::vector<ModelSpec>, std::vector<ModelSpec>> candidate_models(
    const Dataset& ds, const SettingSpec& setting) {
    (void)ds;
    std::vector<ModelSpec> props, outs;
    if (setting.use_pi1) props.push_back({ModelKind::propensity, {1}});
    if (setting.use_pi2) props.push_back({ModelKind::propensity, {0, 1, 2, 3}});
    if (setting.use_a1) outs.push_back({ModelKind::outcome, {0, 1, 2, 3}});
    if (setting.use_a2) outs.push_back({ModelKind::outcome, {0, 1, 2}});
    return {std::move(props), std::move(outs)};
}

namespace {

// P(|noise| <= q) for scenario C: average the Gaussian band probability over
// X1 ~ N(5,1) by Simpson's rule on [-8, 8].
double hetero_band_probability(double q, double sigma) {
    const int steps = 1600;
    const double lo = -8.0, hi = 8.0;
    const double h = (hi - lo) / steps;
    auto f = [&](double u) {
        const double sd = sigma * (0.6 + 0.2 * std::abs(5.0 + u));
        const double phi = std::exp(-0.5 * u * u) / std::sqrt(2.0 * M_PI);
        return phi * (2.0 * normal_cdf(q / sd) - 1.0);
    };
    double acc = f(lo) + f(hi);
    for (int i = 1; i < steps; ++i) acc += f(lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

}  // namespace

double oracle_half_width(const ScenarioSpec& scenario, double tau) {
    if (!(tau > 0.0 && tau < 1.0)) throw argument_error("oracle_half_width: tau outside (0,1)");
    switch (scenario.noise) {
        case NoiseKind::gaussian_unit:
            return scenario.sigma * normal_quantile(0.5 * (1.0 + tau));
        case NoiseKind::student_t3_unit_variance:
            return scenario.sigma * student_t3_quantile(0.5 * (1.0 + tau)) / std::sqrt(3.0);
        case NoiseKind::hetero_gaussian: {
            double lo = 0.0, hi = 50.0;
            for (int i = 0; i < 100; ++i) {
                const double mid = 0.5 * (lo + hi);
                (hetero_band_probability(mid, scenario.sigma) < tau ? lo : hi) = mid;
            }
            return 0.5 * (lo + hi);
        }
    }
    throw argument_error("oracle_half_width: unknown noise kind");
}

ReplicateResult run_replicate(Eigen::Index n, const ScenarioSpec& scenario,
                              const SettingSpec& setting, std::uint64_t seed,
                              const HarnessOptions& options) {
    const Dataset ds = generate_data(n, scenario, derive_seed(seed, {"data"}));
    const SplitIndices idx = split(ds, 0.5, derive_seed(seed, {"split"}));

    auto [prop_specs, out_specs] = candidate_models(ds, setting);
    std::vector<PropensityModel> props;
    props.reserve(prop_specs.size());
    for (const auto& spec : prop_specs) props.push_back(fit_propensity(ds, idx.train, spec));

    std::vector<OutcomeModel> out_models;
    std::vector<OutcomeWorking> outcomes;
    const ModelSpec mu_spec = full_spec(ds);
    for (std::size_t k = 0; k < out_specs.size(); ++k) {
        OutcomeWorking ow;
        ow.model = fit_outcome(ds, idx.train, out_specs[k]);
        ow.draws = draw_imputations(ow.model, ds, idx.train, options.T,
                                    derive_seed(seed, "train-imputation", k),
                                    static_cast<int>(k));
        ow.estimate = per_model_estimate(ds, idx.train, ow.draws, mu_spec);
        out_models.push_back(ow.model);
        outcomes.push_back(std::move(ow));
    }

    const MomentMatrix train_moments = build_train_moments(ds, idx.train, props, outcomes);
    const ELSolution train_el = solve_el(train_moments);
    const MRFit fit = mr_fit(ds, idx.train, train_el);

    const auto scores = conformity_scores(fit, ds, idx.calib, out_models, options.T,
                                          derive_seed(seed, {"calib"}));
    const CalibrationResult cal =
        calibrate_with_scores(ds, idx.calib, props, scores, options.tau, options.calibration);

    const IntervalModel sc =  // MR center with the unweighted complete-case quantile
        split_conformal_cc(fit.beta, ds, idx.calib, options.tau,
                           options.calibration.finite_sample_correction);
    const IntervalModel imp = impute_sc(scores, fit, options.tau, options.impute_model_index,
                                        options.calibration.finite_sample_correction);
    const double q_star = oracle_half_width(scenario, options.tau);
    const Eigen::VectorXd beta0 = true_beta();

    const Dataset eval = generate_oracle_data(options.n_eval, scenario,
                                              derive_seed(seed, {"eval"}));

    ReplicateResult res{};
    const ModelSpec fullc = full_spec(eval);
    Eigen::Index covered[4] = {0, 0, 0, 0};
    for (Eigen::Index i = 0; i < eval.n(); ++i) {
        const Eigen::VectorXd xi = eval.x.row(i).transpose();
        const double y0 = eval.y[i];
        const double mu_mr = fit.predict(xi);
        const double mu_star = design_row(eval, i, fullc).dot(beta0);
        if (std::abs(y0 - mu_mr) <= cal.q_mr) ++covered[0];
        if (std::abs(y0 - mu_mr) <= imp.half_width) ++covered[1];
        if (std::abs(y0 - mu_mr) <= sc.half_width) ++covered[2];
        if (std::abs(y0 - mu_star) <= q_star) ++covered[3];
    }
    const double denom = static_cast<double>(eval.n());
    res.coverage = {covered[0] / denom, covered[1] / denom, covered[2] / denom,
                    covered[3] / denom};
    res.length = {2.0 * cal.q_mr, 2.0 * imp.half_width, 2.0 * sc.half_width, 2.0 * q_star};
    return res;
}

namespace {

struct CellTask {
    std::size_t setting_i, scenario_i;
    int replicate;
};

double sample_sd(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double acc = 0.0;
    for (double x : v) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
    if (config.replicates < 1) throw argument_error("run_experiment: replicates must be >= 1");
    const std::size_t n_cells = config.settings.size() * config.scenarios.size();
    const std::size_t n_tasks = n_cells * static_cast<std::size_t>(config.replicates);

    std::vector<CellTask> tasks;
    tasks.reserve(n_tasks);
    for (std::size_t si = 0; si < config.settings.size(); ++si)
        for (std::size_t ci = 0; ci < config.scenarios.size(); ++ci)
            for (int rep = 0; rep < config.replicates; ++rep) tasks.push_back({si, ci, rep});

    struct TaskOutcome {
        ReplicateResult res{};
        bool failed = false;
        std::string error;
    };
    std::vector<TaskOutcome> outcomes(n_tasks);

    auto worker_body = [&](std::size_t t) {
        const CellTask& task = tasks[t];
        const auto& sid = config.settings[task.setting_i];
        const char cid = config.scenarios[task.scenario_i];
        const std::uint64_t seed = derive_seed(
            config.master_seed,
            {"replicate", sid, std::string_view(&cid, 1), std::to_string(task.replicate)});
        try {
            const ScenarioSpec scenario = ScenarioSpec::standard(cid, config.scenario_c_sigma);
            const SettingSpec setting = SettingSpec::standard(sid);
            outcomes[t].res = run_replicate(config.n, scenario, setting, seed, config.options);
        } catch (const std::exception& e) {
            outcomes[t].failed = true;
            outcomes[t].error = e.what();
        }
    };

    const int threads = std::max(1, config.threads);
    if (threads == 1) {
        for (std::size_t t = 0; t < n_tasks; ++t) worker_body(t);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int w = 0; w < threads; ++w)
            pool.emplace_back([&] {
                for (std::size_t t = next.fetch_add(1); t < n_tasks; t = next.fetch_add(1))
                    worker_body(t);
            });
        for (auto& th : pool) th.join();
    }

    ExperimentResult out;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t si = 0; si < config.settings.size(); ++si) {
        for (std::size_t ci = 0; ci < config.scenarios.size(); ++ci) {
            const std::size_t base =
                (si * config.scenarios.size() + ci) * static_cast<std::size_t>(config.replicates);
            bool cell_failed = false;
            std::string first_error;
            for (int rep = 0; rep < config.replicates; ++rep) {
                const auto& oc = outcomes[base + static_cast<std::size_t>(rep)];
                if (oc.failed && !cell_failed) first_error = oc.error;
                cell_failed = cell_failed || oc.failed;
            }

            for (Method m : config.methods) {
                const auto mi = static_cast<std::size_t>(m);
                std::vector<double> covs, lens;
                for (int rep = 0; rep < config.replicates; ++rep) {
                    const auto& oc = outcomes[base + static_cast<std::size_t>(rep)];
                    ReplicateRow row;
                    row.method = m;
                    row.setting = config.settings[si];
                    row.scenario = config.scenarios[ci];
                    row.replicate = rep;
                    row.failed = oc.failed;
                    row.coverage = oc.failed ? nan : oc.res.coverage[mi];
                    row.length = oc.failed ? nan : oc.res.length[mi];
                    out.rows.push_back(row);
                    if (!oc.failed) {
                        covs.push_back(oc.res.coverage[mi]);
                        lens.push_back(oc.res.length[mi]);
                    }
                }
                ExperimentSummary s;
                s.method = m;
                s.setting = config.settings[si];
                s.scenario = config.scenarios[ci];
                s.replicates = static_cast<int>(covs.size());
                s.failed = cell_failed;
                s.first_error = first_error;
                if (cell_failed || covs.empty()) {
                    s.coverage_mean = s.coverage_sd = s.length_mean = s.length_sd = nan;
                } else {
                    double cm = 0.0, lm = 0.0;
                    for (double c : covs) cm += c;
                    for (double l : lens) lm += l;
                    cm /= static_cast<double>(covs.size());
                    lm /= static_cast<double>(lens.size());
                    s.coverage_mean = cm;
                    s.length_mean = lm;
                    s.coverage_sd = sample_sd(covs, cm);
                    s.length_sd = sample_sd(lens, lm);
                }
                out.summaries.push_back(s);
                out.any_failure = out.any_failure || cell_failed;
            }
        }
    }
    return out;
}

namespace {

void put(std::ostream& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
}

}  // namespace

void write_summary_csv(std::ostream& out, const ExperimentResult& result) {
    out << "method,setting,scenario,coverage_mean,coverage_sd,length_mean,length_sd,replicates\n";
    for (const auto& s : result.summaries) {
        out << method_name(s.method) << ',' << s.setting << ',' << s.scenario << ',';
        put(out, s.coverage_mean);
        out << ',';
        put(out, s.coverage_sd);
        out << ',';
        put(out, s.length_mean);
        out << ',';
        put(out, s.length_sd);
        out << ',' << s.replicates << '\n';
    }
}

void write_lengths_csv(std::ostream& out, const ExperimentResult& result) {
    out << "method,setting,scenario,replicate,coverage,length\n";
    for (const auto& r : result.rows) {
        out << method_name(r.method) << ',' << r.setting << ',' << r.scenario << ','
            << r.replicate << ',';
        put(out, r.coverage);
        out << ',';
        put(out, r.length);
        out << '\n';
    }
}

}  // namespace mrcp
