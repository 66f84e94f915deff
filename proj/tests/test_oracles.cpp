#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "boed/estimators.hpp"
#include "boed/oracles.hpp"
#include "support.hpp"

#include <cmath>
#include <numbers>

using namespace boed;
using testing::vec;

namespace {

double reference(const ExperimentSpec& s, int n = 1200) {
    return quadrature_eig(s, parameter_rule(s.prior, n), QuadratureRule::hermite(40));
}

}  // namespace

TEST_CASE("quadrature rules") {
    std::vector<double> x, w;
    QuadratureRule::legendre(5, -1.0, 1.0).nodes_weights(x, w);
    double s0 = 0.0, s8 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        CHECK(w[i] > 0.0);
        CHECK(std::abs(x[i]) < 1.0);
        s0 += w[i];
        s8 += w[i] * std::pow(x[i], 8);
    }
    CHECK(s0 == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(s8 == doctest::Approx(2.0 / 9.0).epsilon(1e-13));

    QuadratureRule::legendre(7, 2.0, 5.0).nodes_weights(x, w);
    double cube = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        CHECK(x[i] > 2.0);
        CHECK(x[i] < 5.0);
        cube += w[i] * x[i] * x[i] * x[i];
    }
    CHECK(cube == doctest::Approx((625.0 - 16.0) / 4.0).epsilon(1e-13));

    QuadratureRule::hermite(10).nodes_weights(x, w);
    double m0 = 0, m2 = 0, m4 = 0, m6 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        m0 += w[i];
        m2 += w[i] * x[i] * x[i];
        m4 += w[i] * std::pow(x[i], 4);
        m6 += w[i] * std::pow(x[i], 6);
    }
    CHECK(m0 == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(m2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m4 == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(m6 == doctest::Approx(15.0).epsilon(1e-12));

    QuadratureRule::trapezoid(101, 0.0, 1.0).nodes_weights(x, w);
    double lin = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) lin += w[i] * x[i];
    CHECK(lin == doctest::Approx(0.5).epsilon(1e-14));

    CHECK_THROWS_AS(QuadratureRule::legendre(1, 0.0, 1.0).validate(), std::invalid_argument);
    CHECK_THROWS_AS(QuadratureRule::legendre(4, 1.0, 0.0).validate(), std::invalid_argument);
}

TEST_CASE("closed-form linear-Gaussian EIG") {
    CHECK(linear_gaussian_eig(121.0, 0.01, 4.0, 2) == doctest::Approx(2.153415767).epsilon(1e-9));
    CHECK(linear_gaussian_eig(0.0, 0.01, 4.0, 2) == 0.0);
    const double gain = linear_gaussian_eig(121.0, 0.01, 4.0, 800) - linear_gaussian_eig(121.0, 0.01, 4.0, 200);
    CHECK(gain == doctest::Approx(0.5 * std::log(4.0)).epsilon(0.01));

    const std::vector<double> r = sample_linear_gaussian_log_ratio(121.0, 0.01, 4.0, 2, 1000000, 3);
    const double se = std::sqrt(testing::variance(r) / static_cast<double>(r.size()));
    CHECK(std::abs(testing::mean(r) - 2.153415767) < 3 * se);
}

TEST_CASE("quadrature evidence") {
    const ExperimentSpec s = testing::example1();
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const Dataset d = simulate_data(s, vec({0.9 + 0.05 * static_cast<double>(seed)}), seed);
        const double exact = linear_gaussian_log_evidence(121.0, 1.0, 0.01, 4.0, d.Y.col(0));
        CHECK(quadrature_evidence(s, d, parameter_rule(s.prior, 1200)) == doctest::Approx(exact).epsilon(1e-8));
    }

    ExperimentSpec flat = testing::example2();
    flat.model = std::make_shared<testing::ConstantModel>();
    Dataset d;
    d.Y = Matrix::Constant(1, 1, 0.6);
    const double c = log_likelihood_from_response(flat.noise, d.Y, vec({0.5}));
    CHECK(quadrature_evidence(flat, d, parameter_rule(flat.prior, 50)) == doctest::Approx(c).epsilon(1e-12));

    const ExperimentSpec nl = testing::example2(1.0, 1);
    const Dataset y = simulate_data(nl, vec({0.37}), 4);
    const double a = quadrature_evidence(nl, y, parameter_rule(nl.prior, 200));
    const double b = quadrature_evidence(nl, y, parameter_rule(nl.prior, 400));
    CHECK(std::abs(a - b) < 1e-8);

    ExperimentSpec two;
    two.model = std::make_shared<testing::SumModel>(2);
    two.prior = Prior::normal(Vector::Zero(2), Matrix::Identity(2, 2));
    two.noise = NoiseModel::scalar(1.0);
    two.design = vec({0.0});
    CHECK_THROWS_AS(quadrature_evidence(two, d, QuadratureRule::legendre(10, -1, 1)), std::invalid_argument);
}

TEST_CASE("quadrature EIG") {
    for (double xi : {10.0, 20.0, 30.0}) {
        const ExperimentSpec s = testing::example1(xi);
        const double sd = 2.0 + (xi - 10.0) / 10.0;
        const double exact = linear_gaussian_eig((1 + xi) * (1 + xi), 0.01, sd * sd, 2);
        CHECK(std::abs(reference(s) - exact) < 1e-4);
    }

    const ExperimentSpec nl = testing::example2(1.0, 1);
    const double coarse = reference(nl, 1200), fine = reference(nl, 2400);
    CHECK(coarse == doctest::Approx(2.27557096926).epsilon(1e-9));
    CHECK(coarse > 0.0);
    CHECK(std::isfinite(coarse));
    CHECK(std::abs(coarse - fine) < 1e-4);

    ExperimentSpec flat = testing::example2();
    flat.model = std::make_shared<testing::ConstantModel>();
    CHECK(std::abs(reference(flat, 200)) < 1e-8);
}

TEST_CASE("oracle EIG is non-negative and increases as the noise shrinks") {
    for (int repeats : {1, 10}) {
        double previous = -1.0;
        for (double var : {1.0, 1e-1, 1e-2, 1e-3, 1e-4}) {
            const double v = reference(testing::example2(0.5, repeats, var), 600);
            CHECK(v >= -1e-8);
            CHECK(v >= previous);
            previous = v;
        }
    }
    double previous = -1.0;
    for (double var : {100.0, 10.0, 4.0, 1.0, 0.1}) {
        ExperimentSpec s = testing::example1();
        s.noise = NoiseModel::scalar(var);
        const double v = reference(s, 600);
        CHECK(v >= -1e-8);
        CHECK(v >= previous);
        previous = v;
    }
}

TEST_CASE("replicate means of the estimators agree with the oracle") {
    struct Case {
        Estimator e;
        ExperimentSpec spec;
        std::int64_t N, M;
    };
    const ExperimentSpec ex1 = testing::example1(), ex2 = testing::example2(1.0, 1);
    const Case cases[] = {
        {Estimator::dlmc, ex1, 100, 1000},  {Estimator::dlmcis, ex1, 100, 20}, {Estimator::mcla, ex1, 100, 1},
        {Estimator::dlmc, ex2, 100, 1000},  {Estimator::dlmcis, ex2, 100, 20},
    };
    for (const Case& c : cases) {
        const double ref = reference(c.spec);
        std::vector<double> values;
        EstimatorSetting s;
        s.N = c.N;
        s.M = c.M;
        for (std::uint64_t r = 0; r < 100; ++r)
            values.push_back(run_estimator(c.e, c.spec, s, derive_seed(2024, r, Stream::replicate)).value);
        const double se = std::sqrt(testing::variance(values) / 100.0);
        INFO(to_string(c.e) << " on " << c.spec.model->name() << ": mean " << testing::mean(values) << " oracle "
                            << ref << " se " << se);
        CHECK(std::abs(testing::mean(values) - ref) <= 3.0 * se);
    }
}
