#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "boed/oracles.hpp"
#include "boed/tuner.hpp"
#include "support.hpp"

#include <cmath>

using namespace boed;

namespace {

const double kCa = 1.959963984540054;

PilotConstants constants(Estimator e, double c1, double c2, double c4) {
    PilotConstants c;
    c.variant = e;
    c.c1 = c1;
    c.c2 = c2;
    c.c4 = c4;
    return c;
}

PilotConstants meshed(PilotConstants c, double c3, double eta, double gamma) {
    c.meshed = true;
    c.c3 = c3;
    c.eta = eta;
    c.gamma = gamma;
    c.mesh_min = 1e-6;
    c.mesh_max = 1.0;
    return c;
}

double log_slope(double x0, double y0, double x1, double y1) {
    return std::log(y1 / y0) / std::log(x1 / x0);
}

}  // namespace

TEST_CASE("closed-form settings on hand-checked constants") {
    OptimalSetting o = optimal_setting(constants(Estimator::dlmc, 1.0, 0.0, 1.0), 0.1, 0.05);
    CHECK(o.feasible);
    CHECK(o.solver == Solver::closed_form);
    CHECK(o.setting.kappa == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(o.setting.N == 865);
    CHECK(o.relaxed_work == doctest::Approx(864.3282346561782 * 30.0).epsilon(1e-10));

    o = optimal_setting(constants(Estimator::dlmcis, 1.0, 2.0, 0.5), 0.1, 0.05);
    CHECK(o.setting.kappa == doctest::Approx(0.6919688504283774).epsilon(1e-12));
    CHECK(o.setting.M == 17);
    CHECK(o.setting.N == 902);
    CHECK(o.relaxed_work == doctest::Approx(901.1249303793307 * 16.23212459828649).epsilon(1e-10));

    const PilotConstants m = meshed(constants(Estimator::dlmc, 1.0, 0.0, 1.0), 2.0, 1.0, 1.0);
    o = optimal_setting(m, 0.1, 0.05);
    CHECK(o.setting.kappa == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(o.setting.mesh.h == doctest::Approx(0.0125).epsilon(1e-12));
    CHECK(o.setting.M == 40);
    CHECK(o.setting.N == static_cast<std::int64_t>(std::ceil(std::pow(kCa / 0.05, 2))));
}

TEST_CASE("kappa stays in range and the closed form matches the numeric optimum") {
    for (double c1 : {0.5, 2.0})
        for (double c2 : {0.0, 0.3, 20.0})
            for (double c4 : {0.01, 1.0, 6.0})
                for (double tol : {1.0, 0.1, 0.01, 1e-3})
                    for (bool mesh : {false, true}) {
                        PilotConstants c = constants(Estimator::dlmcis, c1, c2, c4);
                        if (mesh) c = meshed(c, 0.5, 1.0, 1.0);
                        const OptimalSetting a = optimal_setting(c, tol, 0.05);
                        REQUIRE(a.feasible);
                        const double g = mesh ? 0.5 : 0.0;
                        CHECK(a.setting.kappa > 0.0);
                        CHECK(a.setting.kappa < 1.0 / (1.0 + g));
                        CHECK(satisfies_constraints(constraints_of(c), a.setting));
                        if (a.setting.M == 1 || a.setting.N == 1) continue;
                        const OptimalSetting b = numeric_fallback(work_model_of(c), constraints_of(c), tol, 0.05);
                        REQUIRE(b.feasible);
                        CHECK(std::abs(a.relaxed_work / b.relaxed_work - 1.0) <= 0.05);
                        CHECK(b.relaxed_work <= a.relaxed_work * (1.0 + 1e-3));
                    }
}

TEST_CASE("numeric fallback recovers the single-constraint optimum") {
    const PilotConstants c = constants(Estimator::dlmc, 1.5, 0.0, 2.0);
    const OptimalSetting b = numeric_fallback(work_model_of(c), constraints_of(c), 0.05, 0.05);
    REQUIRE(b.feasible);
    CHECK(b.solver == Solver::numeric_fallback);
    CHECK(b.setting.kappa == doctest::Approx(2.0 / 3.0).epsilon(1e-3));
    const double N = 1.5 * std::pow(kCa / (b.setting.kappa * 0.05), 2);
    CHECK(static_cast<double>(b.setting.N) == doctest::Approx(std::ceil(N)).epsilon(1e-3));
}

TEST_CASE("asymptotic scaling of N and M in TOL") {
    const PilotConstants c = constants(Estimator::dlmc, 1.0, 0.0, 6.0);
    const OptimalSetting a = optimal_setting(c, 1e-3, 0.05), b = optimal_setting(c, 2e-3, 0.05);
    CHECK(log_slope(1e-3, a.setting.N, 2e-3, b.setting.N) == doctest::Approx(-2.0).epsilon(0.05));
    CHECK(log_slope(1e-3, a.setting.M, 2e-3, b.setting.M) == doctest::Approx(-1.0).epsilon(0.1));
}

TEST_CASE("degenerate limits") {
    OptimalSetting o = optimal_setting(constants(Estimator::dlmc, 1.0, 2.0, 6.0), 1e3, 0.05);
    CHECK(o.setting.N == 1);
    CHECK(o.setting.M == 1);

    o = optimal_setting(constants(Estimator::dlmcis, 1.0, 0.0, 0.0), 0.01, 0.05);
    CHECK(o.setting.M == 1);
    CHECK(o.setting.kappa == 1.0);

    PilotConstants m = constants(Estimator::mcla, 0.5, 0.0, 0.0);
    m.repeats = 1;
    o = optimal_setting(m, 0.01, 0.05);
    CHECK(o.setting.kappa == 1.0);
    CHECK(o.setting.N == static_cast<std::int64_t>(std::ceil(0.5 * std::pow(kCa / 0.01, 2))));

    CHECK_THROWS_AS(optimal_setting(constants(Estimator::dlmc, 0.0, 0.0, 1.0), 0.1, 0.05), DegeneratePilotError);
    CHECK_THROWS_AS(optimal_setting(constants(Estimator::dlmc, 1.0, 0.0, 1.0), 0.0, 0.05), std::invalid_argument);
    CHECK_THROWS_AS(optimal_setting_dlmc(constants(Estimator::dlmcis, 1.0, 0.0, 1.0), 0.1, 0.05),
                    std::invalid_argument);
}

TEST_CASE("MCLA feasibility wall and forced kappa") {
    PilotConstants c = constants(Estimator::mcla, 0.4, 0.0, 0.0);
    c.c_la2 = 0.05;
    c.repeats = 1;
    const OptimalSetting no = optimal_setting(c, 0.04, 0.05);
    CHECK_FALSE(no.feasible);
    CHECK(no.message.find("C_la2") != std::string::npos);
    const OptimalSetting fallback = numeric_fallback(work_model_of(c), constraints_of(c), 0.04, 0.05);
    CHECK_FALSE(fallback.feasible);

    const OptimalSetting yes = optimal_setting(c, 0.1, 0.05);
    CHECK(yes.feasible);
    CHECK(yes.setting.kappa == doctest::Approx(0.5));
    CHECK(satisfies_constraints(constraints_of(c), yes.setting));

    CHECK(optimal_setting_mcla(c, 0.04, 0.05, 10).feasible);

    const OptimalSetting forced = optimal_setting(c, 0.04, 0.05, true);
    CHECK(forced.feasible);
    CHECK(forced.solver == Solver::forced_kappa1);
    CHECK_FALSE(forced.bias_constraint_enforced);
    CHECK(forced.setting.kappa == 1.0);
    CHECK(forced.setting.N == static_cast<std::int64_t>(std::ceil(0.4 * std::pow(kCa / 0.04, 2))));
    CHECK_FALSE(satisfies_constraints(constraints_of(c), forced.setting));
    CHECK(satisfies_constraints(constraints_of(c), forced.setting, false));
}

TEST_CASE("work model") {
    WorkModel w;
    w.nested = true;
    w.gamma = 1.0;
    w.outer_overhead = 3.0;
    EstimatorSetting s;
    s.N = 10;
    s.M = 5;
    s.mesh = Mesh::at(0.5);
    CHECK(predicted_work(w, s) == doctest::Approx(10 * (5 + 3) * 2.0));
    CHECK(relaxed_objective(w, 10, 5, 0.5) == doctest::Approx(100.0));
    w.nested = false;
    CHECK(predicted_work(w, s) == doctest::Approx(10 * 3 * 2.0));
}

TEST_CASE("pilot constants on the linear example") {
    const std::vector<double> ratios = sample_linear_gaussian_log_ratio(121.0, 0.01, 4.0, 2, 1000000, 5);
    const double oracle = testing::variance(ratios);
    CHECK(oracle == doctest::Approx(0.99).epsilon(0.05));
    const ExperimentSpec s = testing::example1();

    std::vector<double> dlmc_c1;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const PilotConstants is = estimate_constants_dlmcis(s, 100, 100, seed);
        CHECK(is.c1 > oracle / 2);
        CHECK(is.c1 < oracle * 2);
        CHECK(is.c2 >= 0.0);
        CHECK(is.c3 == 0.0);
        CHECK_FALSE(is.meshed);
        CHECK(is.outer_overhead > 1.0);
        dlmc_c1.push_back(estimate_constants_dlmc(s, 100, 1000, seed).c1);

        CHECK(estimate_constants_mcla(s, 2000, seed).c1 == doctest::Approx(0.5).epsilon(0.2));
    }
    // The Laplace fit is exact here, so the bias estimate is zero unless the
    // mean difference exceeds two standard errors by chance (about 5%).
    int zero = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const PilotConstants la = estimate_constants_mcla(s, 500, seed);
        zero += la.c_la2 == 0.0;
        CHECK(la.c_la2 < 0.02);
    }
    CHECK(zero >= 16);

    const double med = testing::median(dlmc_c1);
    CHECK(med > oracle / 2);
    CHECK(med < oracle * 2);
}

TEST_CASE("tuned kappa on the linear example is flat in TOL") {
    const ExperimentSpec s = testing::example1();
    const PilotConstants cd = estimate_constants_dlmc(s, 100, 100, 1);
    const PilotConstants ci = estimate_constants_dlmcis(s, 100, 100, 1);
    const PilotConstants cl = estimate_constants_mcla(s, 100, 1);
    for (double tol = 1e-5; tol <= 1.0; tol *= 10) {
        CHECK(std::abs(optimal_setting(cd, tol, 0.05).setting.kappa - 0.64) <= 0.1);
        CHECK(std::abs(optimal_setting(ci, tol, 0.05).setting.kappa - 0.67) <= 0.1);
        CHECK(optimal_setting(cl, tol, 0.05).setting.kappa >= 0.9);
    }
    for (double tol : {1.0, 0.1, 0.01}) {
        const OptimalSetting a = optimal_setting(cd, tol, 0.05);
        const OptimalSetting b = numeric_fallback(work_model_of(cd), constraints_of(cd), tol, 0.05);
        CHECK(std::abs(a.relaxed_work / b.relaxed_work - 1.0) <= 0.05);
    }
}

TEST_CASE("pilot errors") {
    const ExperimentSpec s = testing::example2();
    CHECK_THROWS_AS(estimate_constants_mcla(s, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(estimate_constants_dlmc(s, 1, 10, 1), std::invalid_argument);

    ExperimentSpec flat = s;
    flat.model = std::make_shared<testing::ConstantModel>();
    CHECK_THROWS_AS(estimate_constants_dlmc(flat, 50, 20, 1), DegeneratePilotError);
}

TEST_CASE("meshed pilot measures the discretization bias") {
    const ExperimentSpec s = testing::synthetic_mesh(1.0);
    PilotOptions o;
    const PilotConstants c = estimate_constants_dlmcis(s, 100, 20, 3, o);
    CHECK(c.meshed);
    CHECK(c.pilot_h == doctest::Approx(0.25));
    CHECK(c.c3 > 0.0);
    CHECK(c.gamma == 1.0);
    const OptimalSetting a = optimal_setting(c, 0.05, 0.05);
    CHECK(a.feasible);
    CHECK(a.setting.mesh.h >= 1e-6);
    CHECK(a.setting.mesh.h <= 1.0);
    CHECK(satisfies_constraints(constraints_of(c), a.setting));
    const OptimalSetting b = numeric_fallback(work_model_of(c), constraints_of(c), 0.05, 0.05);
    CHECK(std::abs(a.relaxed_work / b.relaxed_work - 1.0) <= 0.05);
}
