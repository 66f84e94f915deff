#include "boed/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace boed {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

void legendre_nodes(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1.0;
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
}

// Golub-Welsch for the probabilists' Hermite weight exp(-x^2/2)/sqrt(2 pi).
void hermite_nodes(int n, std::vector<double>& x, std::vector<double>& w) {
    Matrix T = Matrix::Zero(n, n);
    for (int k = 1; k < n; ++k) T(k, k - 1) = T(k - 1, k) = std::sqrt(static_cast<double>(k));
    Eigen::SelfAdjointEigenSolver<Matrix> eig(T);
    x.resize(n);
    w.resize(n);
    for (int i = 0; i < n; ++i) {
        x[i] = eig.eigenvalues()[i];
        const double v = eig.eigenvectors()(0, i);
        w[i] = v * v;
    }
}

double log_sum_exp(const std::vector<double>& v) {
    const double mx = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double a : v) s += std::exp(a - mx);
    return mx + std::log(s);
}

// Nodes and log-weights of prior-weighted integration over theta (d = 1).
void prior_nodes(const ExperimentSpec& spec, const QuadratureRule& rule, std::vector<double>& theta,
                 std::vector<double>& log_w) {
    if (spec.d() != 1) throw std::invalid_argument("quadrature oracles support d = 1 only");
    rule.validate();
    std::vector<double> x, w;
    rule.nodes_weights(x, w);
    theta.clear();
    log_w.clear();
    if (rule.kind == QuadratureRule::Kind::gauss_hermite) {
        if (spec.prior.is_uniform()) throw std::invalid_argument("Hermite rule needs a normal prior");
        const double mu = spec.prior.gaussian().mean()[0];
        const double sd = std::sqrt(spec.prior.gaussian().covariance()(0, 0));
        for (std::size_t i = 0; i < x.size(); ++i) {
            theta.push_back(mu + sd * x[i]);
            log_w.push_back(std::log(w[i]));
        }
        return;
    }
    Vector t(1);
    for (std::size_t i = 0; i < x.size(); ++i) {
        t[0] = x[i];
        const double lp = spec.prior.log_pdf(t);
        if (lp == -std::numeric_limits<double>::infinity()) continue;
        theta.push_back(x[i]);
        log_w.push_back(std::log(w[i]) + lp);
    }
}

}  // namespace

void QuadratureRule::validate() const {
    if (n_points < 2) throw std::invalid_argument("quadrature rule: n_points must be >= 2");
    if (kind != Kind::gauss_hermite && !(lower < upper)) throw std::invalid_argument("quadrature rule: empty domain");
}

void QuadratureRule::nodes_weights(std::vector<double>& x, std::vector<double>& w) const {
    validate();
    switch (kind) {
        case Kind::gauss_legendre: {
            legendre_nodes(n_points, x, w);
            const double half = 0.5 * (upper - lower), mid = 0.5 * (upper + lower);
            for (int i = 0; i < n_points; ++i) {
                x[i] = mid + half * x[i];
                w[i] *= half;
            }
            break;
        }
        case Kind::gauss_hermite: hermite_nodes(n_points, x, w); break;
        case Kind::trapezoid: {
            x.resize(n_points);
            w.resize(n_points);
            const double dx = (upper - lower) / (n_points - 1);
            for (int i = 0; i < n_points; ++i) {
                x[i] = lower + i * dx;
                w[i] = (i == 0 || i == n_points - 1) ? 0.5 * dx : dx;
            }
            break;
        }
    }
}

double linear_gaussian_eig(double A, double var_prior, double var_noise, int repeats) {
    if (!(var_prior > 0.0 && var_noise > 0.0)) throw std::invalid_argument("variances must be positive");
    return 0.5 * std::log1p(repeats * A * A * var_prior / var_noise);
}

double linear_gaussian_log_evidence(double A, double mean_prior, double var_prior, double var_noise,
                                    const Vector& y) {
    const double n = static_cast<double>(y.size());
    const double c = A * A * var_prior;
    const Vector r = y.array() - A * mean_prior;
    const double s = r.sum();
    const double quad = (r.squaredNorm() - c * s * s / (var_noise + n * c)) / var_noise;
    const double log_det = n * std::log(var_noise) + std::log1p(n * c / var_noise);
    return -0.5 * (n * kLog2Pi + log_det + quad);
}

std::vector<double> sample_linear_gaussian_log_ratio(double A, double var_prior, double var_noise, int repeats,
                                                     std::int64_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> out(static_cast<std::size_t>(n));
    Vector y(repeats);
    for (std::int64_t k = 0; k < n; ++k) {
        const double theta = std::sqrt(var_prior) * z(rng);
        double ss = 0.0;
        for (int i = 0; i < repeats; ++i) {
            const double e = std::sqrt(var_noise) * z(rng);
            y[i] = A * theta + e;
            ss += e * e;
        }
        const double ll = -0.5 * (repeats * (kLog2Pi + std::log(var_noise)) + ss / var_noise);
        out[k] = ll - linear_gaussian_log_evidence(A, 0.0, var_prior, var_noise, y);
    }
    return out;
}

QuadratureRule parameter_rule(const Prior& prior, int n) {
    if (prior.dim() != 1) throw std::invalid_argument("parameter_rule: d = 1 only");
    if (prior.is_uniform()) return QuadratureRule::legendre(n, prior.lower()[0], prior.upper()[0]);
    const double mu = prior.gaussian().mean()[0];
    const double sd = std::sqrt(prior.gaussian().covariance()(0, 0));
    return QuadratureRule::legendre(n, mu - 12.0 * sd, mu + 12.0 * sd);
}

double quadrature_evidence(const ExperimentSpec& spec, const Dataset& data, const QuadratureRule& rule) {
    std::vector<double> theta, log_w;
    prior_nodes(spec, rule, theta, log_w);
    Vector t(1), g(spec.q());
    std::vector<double> terms(theta.size());
    for (std::size_t k = 0; k < theta.size(); ++k) {
        t[0] = theta[k];
        spec.model->evaluate(t, spec.design, spec.mesh, g);
        terms[k] = log_w[k] + log_likelihood_from_response(spec.noise, data.Y, g);
    }
    return log_sum_exp(terms);
}

double quadrature_eig(const ExperimentSpec& spec, const QuadratureRule& rule_outer, const QuadratureRule& rule_noise,
                      std::uint64_t seed) {
    std::vector<double> theta, log_w;
    prior_nodes(spec, rule_outer, theta, log_w);
    const int q = spec.q();
    const std::size_t K = theta.size();
    Matrix G(q, static_cast<Eigen::Index>(K));
    Vector t(1), g(q);
    for (std::size_t k = 0; k < K; ++k) {
        t[0] = theta[k];
        spec.model->evaluate(t, spec.design, spec.mesh, g);
        G.col(static_cast<Eigen::Index>(k)) = g;
    }
    // The outer weights are renormalised so that truncation of a normal prior's
    // tails does not leak into the expectation.
    std::vector<double> outer_w(K);
    double wsum = 0.0;
    for (std::size_t k = 0; k < K; ++k) wsum += outer_w[k] = std::exp(log_w[k]);

    // Replicate-mean noise nodes, eps_bar ~ N(0, Sigma / N_e).
    const Vector sd = (spec.noise.variances() / spec.repeats).cwiseSqrt();
    std::vector<Vector> eps;
    std::vector<double> eps_w;
    if (q == 1 && rule_noise.kind == QuadratureRule::Kind::gauss_hermite) {
        std::vector<double> z, w;
        rule_noise.nodes_weights(z, w);
        for (std::size_t l = 0; l < z.size(); ++l) {
            eps.push_back(Vector::Constant(1, sd[0] * z[l]));
            eps_w.push_back(w[l]);
        }
    } else {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> nz(0.0, 1.0);
        const int n = std::max(rule_noise.n_points, 2);
        for (int l = 0; l < n; ++l) {
            Vector e(q);
            for (int j = 0; j < q; ++j) e[j] = sd[j] * nz(rng);
            eps.push_back(e);
            eps_w.push_back(1.0 / n);
        }
    }

    const Vector& prec = spec.noise.precisions();
    const double half_n = 0.5 * spec.repeats;
    std::vector<double> terms(K);
    double total = 0.0;
    for (std::size_t j = 0; j < K; ++j) {
        double inner_total = 0.0;
        for (std::size_t l = 0; l < eps.size(); ++l) {
            const Vector ybar = G.col(static_cast<Eigen::Index>(j)) + eps[l];
            double ll_true = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                double quad = 0.0;
                for (int i = 0; i < q; ++i) {
                    const double r = ybar[i] - G(i, static_cast<Eigen::Index>(k));
                    quad += prec[i] * r * r;
                }
                const double ll = -half_n * quad;
                terms[k] = log_w[k] + ll;
                if (k == j) ll_true = ll;
            }
            inner_total += eps_w[l] * (ll_true - log_sum_exp(terms));
        }
        total += outer_w[j] * inner_total;
    }
    return total / wsum;
}

}  // namespace boed
