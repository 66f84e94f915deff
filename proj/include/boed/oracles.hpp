#pragma once

#include "boed/experiment.hpp"

#include <cstdint>
#include <vector>

namespace boed {

struct QuadratureRule {
    enum class Kind { gauss_legendre, gauss_hermite, trapezoid };

    Kind kind = Kind::gauss_legendre;
    int n_points = 2;
    double lower = -1.0;  // ignored by gauss_hermite
    double upper = 1.0;

    static QuadratureRule legendre(int n, double a, double b) { return {Kind::gauss_legendre, n, a, b}; }
    // Probabilists' Hermite: integrates against the standard normal density.
    static QuadratureRule hermite(int n) { return {Kind::gauss_hermite, n, 0.0, 0.0}; }
    static QuadratureRule trapezoid(int n, double a, double b) { return {Kind::trapezoid, n, a, b}; }

    void validate() const;
    void nodes_weights(std::vector<double>& x, std::vector<double>& w) const;
};

double linear_gaussian_eig(double A, double var_prior, double var_noise, int repeats);

// log p(Y) for y_i = A theta + eps_i, theta ~ N(mean, var_prior), eps ~ N(0, var_noise).
double linear_gaussian_log_evidence(double A, double mean_prior, double var_prior, double var_noise,
                                    const Vector& y);

// Log-ratios log p(Y|theta)/p(Y) for the linear-Gaussian model, drawn exactly.
std::vector<double> sample_linear_gaussian_log_ratio(double A, double var_prior, double var_noise, int repeats,
                                                     std::int64_t n, std::uint64_t seed);

// Parameter rule covering the prior: Legendre on the box, or on mean +- 12 sd.
QuadratureRule parameter_rule(const Prior& prior, int n);

double quadrature_evidence(const ExperimentSpec& spec, const Dataset& data, const QuadratureRule& rule);

// Reference EIG for d = 1. The parameter integral (outer and inner) uses
// rule_outer; the noise enters only through the replicate mean and is
// integrated with rule_noise (Hermite, q = 1) or rule_noise.n_points seeded
// draws (q > 1).
double quadrature_eig(const ExperimentSpec& spec, const QuadratureRule& rule_outer,
                      const QuadratureRule& rule_noise, std::uint64_t seed = 0);

}  // namespace boed
