#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mrcp/errors.hpp"
#include "mrcp/rng.hpp"
#include "mrcp/sim_harness.hpp"
#include "mrcp/stats.hpp"
#include "mrcp/working_models.hpp"
#include "oracles.hpp"

using namespace mrcp;

namespace {

IndexList all_rows(const Dataset& ds) {
    IndexList idx(static_cast<std::size_t>(ds.n()));
    for (Eigen::Index i = 0; i < ds.n(); ++i) idx[static_cast<std::size_t>(i)] = i;
    return idx;
}

}  // namespace

TEST_CASE("intercept-only propensity recovers logit of the observed share") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(12, 1);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(12);
    std::vector<std::uint8_t> r(12, 0);
    for (int i = 0; i < 6; ++i) r[static_cast<std::size_t>(i)] = 1;
    for (int i = 0; i < 12; ++i)
        if (r[static_cast<std::size_t>(i)] == 0) y[i] = std::nan("");
    const Dataset ds = Dataset::make(x, y, r);
    const PropensityModel pm =
        fit_propensity(ds, all_rows(ds), ModelSpec{ModelKind::propensity, {}});
    CHECK(std::abs(pm.coef[0]) <= 1e-8);  // logit(0.5) = 0
}

TEST_CASE("logistic fit recovers the generator coefficients at n=50000") {
    const Dataset ds = generate_data(50000, ScenarioSpec::standard('A'), 2024);
    const PropensityModel pm =
        fit_propensity(ds, all_rows(ds), ModelSpec{ModelKind::propensity, {1}});
    CHECK(std::abs(pm.coef[0] - 3.5) <= 0.1);
    CHECK(std::abs(pm.coef[1] + 5.0) <= 0.1);

    // population mean observation probability: 0.5*sigmoid(3.5)+0.5*sigmoid(-1.5)
    double mean_p = 0.0;
    for (Eigen::Index i = 0; i < ds.n(); ++i) mean_p += pm.predict(ds, i);
    mean_p /= static_cast<double>(ds.n());
    CHECK(std::abs(mean_p - 0.5766) <= 0.01);
}

TEST_CASE("logistic score equations hold at the fit") {
    const Dataset ds = generate_data(3000, ScenarioSpec::standard('A'), 5);
    const auto idx = all_rows(ds);
    const ModelSpec spec{ModelKind::propensity, {0, 1, 2, 3}};
    const PropensityModel pm = fit_propensity(ds, idx, spec);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(pm.coef.size());
    for (auto i : idx)
        grad += design_row(ds, i, spec) * (double(ds.r[static_cast<std::size_t>(i)]) -
                                           pm.predict(ds, i));
    CHECK(grad.norm() <= 1e-8);
    for (auto i : idx) {
        const double p = pm.predict(ds, i);
        CHECK(p > 0.0);
        CHECK(p < 1.0);
    }
}

TEST_CASE("single-class data is rejected as separation") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(20, 1);
    const Dataset ds = Dataset::make(x, Eigen::VectorXd::Zero(20),
                                     std::vector<std::uint8_t>(20, 1));
    CHECK_THROWS_AS(fit_propensity(ds, all_rows(ds), ModelSpec{ModelKind::propensity, {0}}),
                    fit_error);
}

TEST_CASE("separable data is detected while diverging") {
    // a small covariate scale forces the separating coefficient past the guard
    Eigen::MatrixXd x(40, 1);
    std::vector<std::uint8_t> r(40);
    Eigen::VectorXd y(40);
    for (int i = 0; i < 40; ++i) {
        x(i, 0) = ((i < 20) ? -1.0 : 1.0) * 0.001 * (1.0 + 0.05 * i);
        r[static_cast<std::size_t>(i)] = (i < 20) ? 0 : 1;
        y[i] = (i < 20) ? std::nan("") : 1.0;
    }
    const Dataset ds = Dataset::make(x, y, r);
    CHECK_THROWS_AS(fit_propensity(ds, all_rows(ds), ModelSpec{ModelKind::propensity, {0}}),
                    fit_error);
}

TEST_CASE("noiseless outcome fit interpolates exactly") {
    Eigen::MatrixXd x(6, 1);
    x << 0, 1, 2, 3, 4, 5;
    Eigen::VectorXd y = 1.0 + 2.0 * x.col(0).array();
    const Dataset ds = Dataset::make(x, y, std::vector<std::uint8_t>(6, 1));
    const OutcomeModel om = fit_outcome(ds, all_rows(ds), ModelSpec{ModelKind::outcome, {0}});
    CHECK(std::abs(om.coef[0] - 1.0) <= 1e-10);
    CHECK(std::abs(om.coef[1] - 2.0) <= 1e-10);
    CHECK(om.sigma <= 1e-10);
}

TEST_CASE("outcome fit recovers the generator coefficients at n=50000") {
    const Dataset ds = generate_data(50000, ScenarioSpec::standard('A'), 77);
    const OutcomeModel om =
        fit_outcome(ds, all_rows(ds), ModelSpec{ModelKind::outcome, {0, 1, 2, 3}});
    const Eigen::VectorXd beta0 = true_beta();
    for (Eigen::Index j = 0; j < 5; ++j) CHECK(std::abs(om.coef[j] - beta0[j]) <= 0.05);
    CHECK(om.sigma == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("outcome fit matches an independent normal-equations solve") {
    Eigen::MatrixXd x(6, 2);
    x << 0.3, 1.2, -0.5, 0.4, 1.7, -0.9, 0.1, 0.0, -1.1, 2.2, 0.8, -0.3;
    Eigen::VectorXd y(6);
    y << 1.0, 0.2, -0.7, 2.5, 0.9, -1.4;
    const Dataset ds = Dataset::make(x, y, std::vector<std::uint8_t>(6, 1));
    const ModelSpec spec{ModelKind::outcome, {0, 1}};
    const OutcomeModel om = fit_outcome(ds, all_rows(ds), spec);

    const Eigen::MatrixXd z = design_matrix(ds, all_rows(ds), spec);
    const Eigen::VectorXd ref = oracle::gauss_solve(z.transpose() * z, z.transpose() * y);
    CHECK((om.coef - ref).lpNorm<Eigen::Infinity>() <= 1e-10);

    // residual orthogonality to every included column
    const Eigen::VectorXd resid = y - z * om.coef;
    for (Eigen::Index c = 0; c < z.cols(); ++c)
        CHECK(std::abs(resid.dot(z.col(c))) <= 1e-8 * z.col(c).norm() * resid.norm() + 1e-10);
}

TEST_CASE("sigma uses the MLE denominator") {
    Eigen::MatrixXd x(4, 1);
    x << 0, 0, 0, 0;
    Eigen::VectorXd y(4);
    y << 1.0, 2.0, 3.0, 6.0;  // mean 3, squared deviations 4+1+0+9
    const Dataset ds = Dataset::make(x, y, std::vector<std::uint8_t>(4, 1));
    const OutcomeModel om = fit_outcome(ds, all_rows(ds), ModelSpec{ModelKind::outcome, {}});
    CHECK(om.sigma == doctest::Approx(std::sqrt(14.0 / 4.0)).epsilon(1e-12));
}

TEST_CASE("collinear designs name the offending columns") {
    Eigen::MatrixXd x(10, 2);
    for (int i = 0; i < 10; ++i) {
        x(i, 0) = i;
        x(i, 1) = 2.0 * i;  // copy of column 0
    }
    Eigen::VectorXd y = x.col(0);
    Dataset ds = Dataset::make(x, y, std::vector<std::uint8_t>(10, 1), {"a", "b"});
    CHECK_THROWS_WITH_AS(fit_outcome(ds, all_rows(ds), ModelSpec{ModelKind::outcome, {0, 1}}),
                         doctest::Contains("collinear"), fit_error);
}

TEST_CASE("too few complete cases is a precondition failure") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(6, 2);
    Eigen::VectorXd y = Eigen::VectorXd::Random(6);
    std::vector<std::uint8_t> r = {1, 1, 1, 0, 0, 0};
    for (int i = 3; i < 6; ++i) y[i] = std::nan("");
    const Dataset ds = Dataset::make(x, y, r);
    CHECK_THROWS_AS(fit_outcome(ds, all_rows(ds), ModelSpec{ModelKind::outcome, {0, 1}}),
                    argument_error);
}

TEST_CASE("degenerate draws equal the point prediction") {
    Eigen::MatrixXd x(3, 1);
    x << 1, 2, 3;
    const Dataset ds = Dataset::make(x, Eigen::VectorXd::Ones(3),
                                     std::vector<std::uint8_t>(3, 1));
    OutcomeModel om;
    om.spec = ModelSpec{ModelKind::outcome, {0}};
    om.coef = Eigen::VectorXd(2);
    om.coef << 0.5, 2.0;
    om.sigma = 0.0;
    om.fitted = true;
    const ImputationDraws draws = draw_imputations(om, ds, all_rows(ds), 5, 42);
    for (Eigen::Index t = 0; t < 5; ++t)
        for (Eigen::Index i = 0; i < 3; ++i)
            CHECK(draws.values(t, i) == 0.5 + 2.0 * ds.x(i, 0));
}

TEST_CASE("draws are deterministic and match their law") {
    Eigen::MatrixXd x(1, 1);
    x << 2.0;
    const Dataset ds = Dataset::make(x, Eigen::VectorXd::Ones(1),
                                     std::vector<std::uint8_t>(1, 1));
    OutcomeModel om;
    om.spec = ModelSpec{ModelKind::outcome, {0}};
    om.coef = Eigen::VectorXd(2);
    om.coef << 1.0, 3.0;  // prediction 7
    om.sigma = 2.0;
    om.fitted = true;

    const Eigen::Index T = 100000;
    const ImputationDraws a = draw_imputations(om, ds, {0}, T, 9001);
    const ImputationDraws b = draw_imputations(om, ds, {0}, T, 9001);
    CHECK(a.values == b.values);

    const double mean = a.values.col(0).mean();
    CHECK(std::abs(mean - 7.0) <= 4.0 * om.sigma / std::sqrt(double(T)));
    const double var = (a.values.col(0).array() - mean).square().sum() / double(T - 1);
    CHECK(std::abs(var - 4.0) <= 4.0 * 4.0 * std::sqrt(2.0 / double(T)));

    CHECK_THROWS_AS(draw_imputations(om, ds, {0}, 0, 1), argument_error);
}

TEST_CASE("per-model estimate reduces to the complete-case fit when nothing is missing") {
    const Dataset ds = generate_data(300, ScenarioSpec::standard('A'), 31);
    Dataset full = ds;  // force everything observed
    for (Eigen::Index i = 0; i < full.n(); ++i)
        if (full.r[static_cast<std::size_t>(i)] == 0) {
            full.r[static_cast<std::size_t>(i)] = 1;
            full.y[i] = 1.0 + full.x(i, 0);
        }
    const auto idx = all_rows(full);
    const ModelSpec spec = full_spec(full);
    const OutcomeModel om = fit_outcome(full, idx, spec);
    const ImputationDraws draws = draw_imputations(om, full, idx, 3, 8);
    const PerModelEstimate pme = per_model_estimate(full, idx, draws, spec);
    CHECK((pme.mu - om.coef).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("deterministic imputations reproduce the completed-data fit") {
    const Dataset ds = generate_data(200, ScenarioSpec::standard('A'), 17);
    const auto idx = all_rows(ds);
    const ModelSpec spec = full_spec(ds);

    OutcomeModel om;  // true conditional mean with zero residual sd
    om.spec = spec;
    om.coef = true_beta();
    om.sigma = 0.0;
    om.fitted = true;
    const ImputationDraws draws = draw_imputations(om, ds, idx, 4, 3);
    const PerModelEstimate pme = per_model_estimate(ds, idx, draws, spec);

    Eigen::MatrixXd z = design_matrix(ds, idx, spec);
    Eigen::VectorXd y_completed(ds.n());
    for (Eigen::Index i = 0; i < ds.n(); ++i)
        y_completed[i] = ds.r[static_cast<std::size_t>(i)] == 1 ? ds.y[i]
                                                                : om.predict(ds, i);
    const Eigen::VectorXd ref =
        oracle::gauss_solve(z.transpose() * z, z.transpose() * y_completed);
    CHECK((pme.mu - ref).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("stacked solve agrees with descent on the imputation objective") {
    const Dataset ds = generate_data(10, ScenarioSpec::standard('A'), 11);
    const auto idx = all_rows(ds);
    const ModelSpec spec{ModelKind::outcome, {0, 1}};
    OutcomeModel om;
    om.spec = spec;
    om.coef = Eigen::VectorXd(3);
    om.coef << 4.0, 0.6, 1.5;
    om.sigma = 0.8;
    om.fitted = true;
    const ImputationDraws draws = draw_imputations(om, ds, idx, 7, 12345);
    const PerModelEstimate pme = per_model_estimate(ds, idx, draws, spec);

    oracle::StackedObjective obj;
    IndexList obs, mis;
    for (auto i : idx) (ds.r[static_cast<std::size_t>(i)] == 1 ? obs : mis).push_back(i);
    obj.z_obs = design_matrix(ds, obs, spec);
    obj.y_obs.resize(static_cast<Eigen::Index>(obs.size()));
    for (std::size_t i = 0; i < obs.size(); ++i) obj.y_obs[static_cast<Eigen::Index>(i)] =
        ds.y[obs[i]];
    obj.z_mis = design_matrix(ds, mis, spec);
    obj.draws.resize(draws.T(), static_cast<Eigen::Index>(mis.size()));
    for (std::size_t j = 0; j < mis.size(); ++j)
        obj.draws.col(static_cast<Eigen::Index>(j)) = draws.values.col(draws.column_of(mis[j]));

    const Eigen::VectorXd mu_gd = oracle::descend(obj, 3);
    CHECK((pme.mu - mu_gd).lpNorm<Eigen::Infinity>() <= 1e-6);
}
