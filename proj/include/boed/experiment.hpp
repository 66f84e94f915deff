#pragma once

#include "boed/model.hpp"
#include "boed/prior.hpp"

#include <cstdint>

namespace boed {

// Diagonal Gaussian measurement noise.
class NoiseModel {
  public:
    NoiseModel() = default;
    explicit NoiseModel(Vector variances);
    static NoiseModel scalar(double variance) { return NoiseModel(Vector::Constant(1, variance)); }

    int dim() const { return static_cast<int>(variances_.size()); }
    const Vector& variances() const { return variances_; }
    const Vector& precisions() const { return precisions_; }
    // log((2 pi)^q |Sigma|)
    double log_norm() const { return log_norm_; }

  private:
    Vector variances_;
    Vector precisions_;
    double log_norm_ = 0.0;
};

struct ExperimentSpec {
    ModelPtr model;
    Prior prior;
    NoiseModel noise;
    Vector design;
    int repeats = 1;  // N_e
    Mesh mesh;

    int d() const { return model->parameter_dim(); }
    int q() const { return model->response_dim(); }
    // Throws ConfigError when the pieces are inconsistent.
    void validate() const;
};

struct Dataset {
    Matrix Y;  // N_e x q
    Vector theta;
};

Dataset simulate_data(const ExperimentSpec& spec, const Vector& theta, std::uint64_t seed);

// Writes a dataset from a precomputed g(theta); eps drawn from rng.
void simulate_into(const ExperimentSpec& spec, const Vector& g, RandomSource& rng, Matrix& Y);

double log_likelihood(const ExperimentSpec& spec, const Dataset& data, const Vector& theta);

// Log-likelihood for a precomputed response g.
double log_likelihood_from_response(const NoiseModel& noise, const Matrix& Y, const Vector& g);

// Row mean of Y and the within-row scatter sum_i |y_i - ybar|^2 in the
// Sigma^{-1} norm. Enough to evaluate the likelihood at any g in O(q).
struct SufficientStats {
    Vector mean;
    double scatter = 0.0;
    int n = 0;
};
SufficientStats sufficient_stats(const NoiseModel& noise, const Matrix& Y);
double log_likelihood_from_stats(const NoiseModel& noise, const SufficientStats& s, const Vector& g);

struct LoglikDecomposition {
    double constant = 0.0;
    double model_gap = 0.0;
    double cross = 0.0;
    double noise_norm = 0.0;

    double total() const { return constant + model_gap + cross + noise_norm; }
};

LoglikDecomposition loglik_decomposition(const ExperimentSpec& spec, const Vector& theta_outer,
                                         const Vector& theta_inner, const Dataset& data);

}  // namespace boed
