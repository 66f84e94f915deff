#include "boed/experiment.hpp"

#include <cmath>

namespace boed {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

NoiseModel::NoiseModel(Vector variances) : variances_(std::move(variances)) {
    if (variances_.size() == 0) throw std::invalid_argument("noise: at least one variance required");
    if (!(variances_.array() > 0.0).all() || !variances_.allFinite())
        throw std::invalid_argument("noise: variances must be finite and strictly positive");
    precisions_ = variances_.cwiseInverse();
    log_norm_ = variances_.size() * kLog2Pi + variances_.array().log().sum();
}

void ExperimentSpec::validate() const {
    if (!model) throw ConfigError("experiment: no model");
    if (repeats < 1) throw ConfigError("experiment: repeats (N_e) must be >= 1");
    if (prior.dim() != model->parameter_dim())
        throw ConfigError("experiment: prior dimension " + std::to_string(prior.dim()) +
                          " does not match model parameter dimension " + std::to_string(model->parameter_dim()));
    if (noise.dim() != model->response_dim())
        throw ConfigError("experiment: noise has " + std::to_string(noise.dim()) + " variances, model has " +
                          std::to_string(model->response_dim()) + " responses");
    if (!model->design_admissible(design)) throw ConfigError("experiment: design outside the model's design space");
    if (!mesh.is_exact()) {
        if (!model->has_mesh()) throw ConfigError("experiment: mesh given for an exact model");
        if (mesh.h < model->mesh_min() || mesh.h > model->mesh_max())
            throw ConfigError("experiment: mesh outside [mesh_min, mesh_max]");
    }
}

void simulate_into(const ExperimentSpec& spec, const Vector& g, RandomSource& rng, Matrix& Y) {
    const int q = spec.q();
    Y.resize(spec.repeats, q);
    const Vector& var = spec.noise.variances();
    for (int i = 0; i < spec.repeats; ++i)
        for (int j = 0; j < q; ++j) Y(i, j) = g[j] + std::sqrt(var[j]) * rng.normal();
}

Dataset simulate_data(const ExperimentSpec& spec, const Vector& theta, std::uint64_t seed) {
    CountingForward forward(*spec.model, spec.design, spec.mesh);
    Vector g(spec.q());
    forward(theta, g);
    RandomSource rng(seed);
    Dataset data;
    data.theta = theta;
    simulate_into(spec, g, rng, data.Y);
    return data;
}

double log_likelihood_from_response(const NoiseModel& noise, const Matrix& Y, const Vector& g) {
    const Vector& p = noise.precisions();
    double quad = 0.0;
    for (Eigen::Index i = 0; i < Y.rows(); ++i)
        for (Eigen::Index j = 0; j < Y.cols(); ++j) {
            const double r = Y(i, j) - g[j];
            quad += p[j] * r * r;
        }
    return -0.5 * static_cast<double>(Y.rows()) * noise.log_norm() - 0.5 * quad;
}

double log_likelihood(const ExperimentSpec& spec, const Dataset& data, const Vector& theta) {
    if (data.Y.cols() != spec.q() || data.Y.rows() != spec.repeats)
        throw std::invalid_argument("log_likelihood: dataset shape does not match the experiment");
    CountingForward forward(*spec.model, spec.design, spec.mesh);
    Vector g(spec.q());
    forward(theta, g);
    return log_likelihood_from_response(spec.noise, data.Y, g);
}

SufficientStats sufficient_stats(const NoiseModel& noise, const Matrix& Y) {
    SufficientStats s;
    s.n = static_cast<int>(Y.rows());
    s.mean = Y.colwise().mean().transpose();
    const Vector& p = noise.precisions();
    for (Eigen::Index i = 0; i < Y.rows(); ++i)
        for (Eigen::Index j = 0; j < Y.cols(); ++j) {
            const double r = Y(i, j) - s.mean[j];
            s.scatter += p[j] * r * r;
        }
    return s;
}

double log_likelihood_from_stats(const NoiseModel& noise, const SufficientStats& s, const Vector& g) {
    const Vector& p = noise.precisions();
    double quad = 0.0;
    for (Eigen::Index j = 0; j < g.size(); ++j) {
        const double r = s.mean[j] - g[j];
        quad += p[j] * r * r;
    }
    return -0.5 * s.n * noise.log_norm() - 0.5 * (s.scatter + s.n * quad);
}

LoglikDecomposition loglik_decomposition(const ExperimentSpec& spec, const Vector& theta_outer,
                                         const Vector& theta_inner, const Dataset& data) {
    CountingForward forward(*spec.model, spec.design, spec.mesh);
    Vector g_out(spec.q()), g_in(spec.q());
    forward(theta_outer, g_out);
    forward(theta_inner, g_in);
    const Vector& p = spec.noise.precisions();
    const Vector gap = g_out - g_in;
    LoglikDecomposition out;
    out.constant = -0.5 * spec.repeats * spec.noise.log_norm();
    out.model_gap = -0.5 * spec.repeats * gap.cwiseProduct(p).dot(gap);
    for (Eigen::Index i = 0; i < data.Y.rows(); ++i) {
        const Vector eps = data.Y.row(i).transpose() - g_out;
        out.cross -= eps.cwiseProduct(p).dot(gap);
        out.noise_norm -= 0.5 * eps.cwiseProduct(p).dot(eps);
    }
    return out;
}

}  // namespace boed
