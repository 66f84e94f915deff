#pragma once

#include "boed/laplace.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace boed {

struct EstimatorSetting {
    std::int64_t N = 1;  // outer samples
    std::int64_t M = 1;  // inner samples, unused by mcla
    Mesh mesh;
    double kappa = 0.5;
    double tol = 1.0;
    double alpha = 0.05;

    void validate() const;
    double confidence() const;  // C_alpha
};

// C_alpha = Phi^{-1}(1 - alpha/2)
double confidence_multiplier(double alpha);

struct EstimatorOptions {
    int jobs = 1;
    bool keep_terms = false;
    LaplaceOptions laplace;
    // dlmcis only: use the prior instead of the Laplace fit as proposal.
    bool prior_as_proposal = false;
};

struct EigEstimate {
    double value = 0.0;
    double std_error = 0.0;
    double bias_budget = 0.0;  // (1 - kappa) TOL
    std::int64_t n_outer = 0;
    std::int64_t underflow_count = 0;
    std::int64_t excluded_count = 0;  // terms dropped (singular covariance, empty inner set)
    std::int64_t nonconverged_count = 0;
    std::int64_t boundary_count = 0;
    std::int64_t model_evaluations = 0;
    double work_units = 0.0;
    std::vector<double> terms;
};

// log(mean(exp(v))). Returns -inf when every entry is -inf.
double log_mean_exp(std::span<const double> v);

EigEstimate dlmc(const ExperimentSpec& spec, const EstimatorSetting& setting, std::uint64_t seed,
                 const EstimatorOptions& options = {});
EigEstimate mcla(const ExperimentSpec& spec, const EstimatorSetting& setting, std::uint64_t seed,
                 const EstimatorOptions& options = {});
EigEstimate dlmcis(const ExperimentSpec& spec, const EstimatorSetting& setting, std::uint64_t seed,
                   const EstimatorOptions& options = {});

double kl_gaussian_1d(double mean_prior, double var_prior, double mean_post, double var_post);

enum class Estimator { dlmc, mcla, dlmcis };
const char* to_string(Estimator e);
Estimator parse_estimator(const std::string& name);

EigEstimate run_estimator(Estimator which, const ExperimentSpec& spec, const EstimatorSetting& setting,
                          std::uint64_t seed, const EstimatorOptions& options = {});

// Per-outer building blocks shared with the pilot runs.
namespace detail {

// Draws theta_n ~ prior and Y_n | theta_n from the outer substream. g receives g(theta_n).
void draw_outer(const ExperimentSpec& spec, RandomSource& rng, CountingForward& forward, Vector& theta, Vector& g,
                Matrix& Y);

struct NestedOuter {
    double log_ratio = 0.0;       // log p(Y|theta) - log p_hat(Y)
    double ratio_variance = 0.0;  // sample variance of the inner ratios w_m / p_hat
    bool underflow = false;
    bool empty = false;           // every inner log-weight was -inf
    bool nonconverged = false;
    bool boundary = false;
    std::int64_t overhead_evals = 0;  // evaluations spent outside the inner loop
};

enum class InnerSampler { prior, laplace };

struct Workspace {
    Vector theta, g, theta_inner, g_inner;
    Matrix Y;
    std::vector<double> log_w;
};

NestedOuter nested_outer(const ExperimentSpec& spec, std::int64_t n, std::int64_t M, std::uint64_t seed,
                         InnerSampler sampler, const EstimatorOptions& options, CountingForward& forward,
                         Workspace& ws);

struct LaplaceOuter {
    double term = 0.0;
    bool singular = false;
};

// MCLA term at theta_n ~ prior (no data needed).
LaplaceOuter laplace_outer(const ExperimentSpec& spec, std::int64_t n, std::uint64_t seed,
                           const EstimatorOptions& options, CountingForward& forward, Vector& theta);

}  // namespace detail

}  // namespace boed
