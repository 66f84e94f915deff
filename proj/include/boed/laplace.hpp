#pragma once

#include "boed/experiment.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace boed {

struct FdScheme {
    enum class Kind { forward, backward, central };

    Kind kind = Kind::central;
    double step = default_step();

    static double default_step();
    // Model evaluations per Jacobian: d+1 one-sided, 2d central.
    int evaluations(int d) const;
};

struct LaplaceOptions {
    FdScheme scheme;
    int max_iterations = 50;
    double gradient_tol = 1e-8;
    int prior_draws = 2;  // multistart candidates besides the prior centre
};

struct LaplaceFit {
    Vector theta_hat;
    Matrix cov;
    double log_det_cov = 0.0;
    int iterations = 0;
    bool converged = false;
    bool on_boundary = false;
    std::int64_t n_evals = 0;
    std::vector<double> objective_trace;
    MultivariateNormal proposal;
};

// J = -dg/dtheta by finite differences. Steps are clipped to a uniform prior's box.
Matrix jacobian(const ExperimentSpec& spec, const Vector& theta, const FdScheme& scheme,
                CountingForward& forward);

struct JacobianResult {
    Matrix J;
    std::int64_t n_evals = 0;
};
JacobianResult jacobian(const ExperimentSpec& spec, const Vector& theta, const FdScheme& scheme = {});

struct LaplaceCovariance {
    Matrix cov;
    Matrix precision;
    double log_det = 0.0;
};

// Sigma = (N_e J^T Sigma_eps^{-1} J - hess h(theta))^{-1}.
LaplaceCovariance laplace_covariance(const ExperimentSpec& spec, const Vector& theta, const Matrix& J);

// log det of the Laplace covariance only; returns false when the precision
// is not positive definite.
bool laplace_log_det(const ExperimentSpec& spec, const Vector& theta, const Matrix& J, double& log_det);

LaplaceFit find_map(const ExperimentSpec& spec, const Dataset& data, const LaplaceOptions& options = {},
                    std::uint64_t seed = 0);

// Inner form used by the estimators; starts drawn from `starts`.
LaplaceFit find_map(const ExperimentSpec& spec, const SufficientStats& stats, CountingForward& forward,
                    RandomSource& starts, const LaplaceOptions& options);

double proposal_logpdf(const LaplaceFit& fit, const Vector& theta);
Vector proposal_sample(const LaplaceFit& fit, RandomSource& rng);

}  // namespace boed
