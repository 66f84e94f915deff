#include "boed/laplace.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace boed {

double FdScheme::default_step() {
    return std::cbrt(std::numeric_limits<double>::epsilon());
}

int FdScheme::evaluations(int d) const {
    return kind == Kind::central ? 2 * d : d + 1;
}

Matrix jacobian(const ExperimentSpec& spec, const Vector& theta, const FdScheme& scheme,
                CountingForward& forward) {
    if (!(scheme.step > 0.0)) throw std::invalid_argument("jacobian: step must be positive");
    const int d = spec.d();
    const int q = spec.q();
    const Vector& lo = spec.prior.lower();
    const Vector& hi = spec.prior.upper();

    Matrix J(q, d);
    Vector x = theta;
    Vector g0(q), ga(q), gb(q);
    const bool one_sided = scheme.kind != FdScheme::Kind::central;
    if (one_sided) forward(theta, g0);

    for (int j = 0; j < d; ++j) {
        const double t = theta[j];
        const double delta = scheme.step * std::max(std::abs(t), 1.0);
        double a = t, b = t;
        switch (scheme.kind) {
            case FdScheme::Kind::central:
                a = t - delta;
                b = t + delta;
                if (b > hi[j]) {
                    b = hi[j];
                    a = hi[j] - 2.0 * delta;
                }
                if (a < lo[j]) {
                    a = lo[j];
                    b = std::min(hi[j], lo[j] + 2.0 * delta);
                }
                break;
            case FdScheme::Kind::forward:
                b = t + delta;
                if (b > hi[j]) {
                    b = t;
                    a = t - delta;
                }
                break;
            case FdScheme::Kind::backward:
                a = t - delta;
                if (a < lo[j]) {
                    a = t;
                    b = t + delta;
                }
                break;
        }
        const double span = b - a;
        if (!(span > 0.0))
            throw NumericalError("jacobian: finite-difference step vanished for component " + std::to_string(j));

        if (b == t && one_sided) {
            gb = g0;
        } else {
            x[j] = b;
            forward(x, gb);
        }
        if (a == t && one_sided) {
            ga = g0;
        } else {
            x[j] = a;
            forward(x, ga);
        }
        x[j] = t;
        J.col(j) = -(gb - ga) / span;
    }
    return J;
}

JacobianResult jacobian(const ExperimentSpec& spec, const Vector& theta, const FdScheme& scheme) {
    CountingForward forward(*spec.model, spec.design, spec.mesh);
    JacobianResult r;
    r.J = jacobian(spec, theta, scheme, forward);
    r.n_evals = forward.calls();
    return r;
}

namespace {

Matrix laplace_precision(const ExperimentSpec& spec, const Vector& theta, const Matrix& J) {
    Matrix P = static_cast<double>(spec.repeats) * J.transpose() * spec.noise.precisions().asDiagonal() * J;
    if (!spec.prior.is_uniform()) P -= spec.prior.hess_log_pdf(theta);
    return 0.5 * (P + P.transpose());
}

}  // namespace

bool laplace_log_det(const ExperimentSpec& spec, const Vector& theta, const Matrix& J, double& log_det) {
    if (J.cols() == 1) {
        double p = 0.0;
        const Vector& prec = spec.noise.precisions();
        for (Eigen::Index i = 0; i < J.rows(); ++i) p += prec[i] * J(i, 0) * J(i, 0);
        p *= spec.repeats;
        if (!spec.prior.is_uniform()) p -= spec.prior.hess_log_pdf(theta)(0, 0);
        if (!(p > 0.0) || !std::isfinite(p)) return false;
        log_det = -std::log(p);
        return true;
    }
    const Matrix P = laplace_precision(spec, theta, J);
    const Eigen::LLT<Matrix> llt(P);
    if (llt.info() != Eigen::Success) return false;
    const Vector diag = llt.matrixL().toDenseMatrix().diagonal();
    if (!(diag.array() > 0.0).all()) return false;
    log_det = -2.0 * diag.array().log().sum();
    return std::isfinite(log_det);
}

LaplaceCovariance laplace_covariance(const ExperimentSpec& spec, const Vector& theta, const Matrix& J) {
    if (!J.allFinite()) throw NumericalError("laplace_covariance: Jacobian is not finite");
    LaplaceCovariance out;
    out.precision = laplace_precision(spec, theta, J);
    const Eigen::LLT<Matrix> llt(out.precision);
    const int d = static_cast<int>(out.precision.rows());
    bool ok = llt.info() == Eigen::Success;
    Vector diag;
    if (ok) {
        diag = llt.matrixL().toDenseMatrix().diagonal();
        ok = (diag.array() > 0.0).all() && diag.allFinite();
    }
    if (!ok) {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(out.precision, Eigen::EigenvaluesOnly);
        throw NonIdentifiableError(eig.eigenvalues());
    }
    out.cov = llt.solve(Matrix::Identity(d, d));
    out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
    out.log_det = -2.0 * diag.array().log().sum();
    return out;
}

LaplaceFit find_map(const ExperimentSpec& spec, const SufficientStats& stats, CountingForward& forward,
                    RandomSource& starts, const LaplaceOptions& options) {
    const int d = spec.d();
    const int q = spec.q();
    const bool box = spec.prior.is_uniform();
    const Vector& lo = spec.prior.lower();
    const Vector& hi = spec.prior.upper();
    const Vector& prec = spec.noise.precisions();
    const double n = stats.n;
    const std::int64_t calls0 = forward.calls();

    auto objective = [&](const Vector& th, Vector& g) {
        forward(th, g);
        double quad = 0.0;
        for (int j = 0; j < q; ++j) {
            const double r = stats.mean[j] - g[j];
            quad += prec[j] * r * r;
        }
        return 0.5 * (stats.scatter + n * quad) - spec.prior.log_pdf(th);
    };
    auto project = [&](Vector& th) {
        if (box) th = th.cwiseMax(lo).cwiseMin(hi);
    };

    LaplaceFit fit;
    Vector theta = spec.prior.center();
    Vector g(q), g_trial(q), candidate(d);
    double F = objective(theta, g);
    for (int k = 0; k < options.prior_draws; ++k) {
        spec.prior.sample(starts, candidate);
        const double Fc = objective(candidate, g_trial);
        if (Fc < F) {
            F = Fc;
            theta = candidate;
            g = g_trial;
        }
    }
    fit.objective_trace.push_back(F);

    Matrix J;
    bool jac_current = false;
    Vector trial(d);
    for (int it = 0; it < options.max_iterations; ++it) {
        J = jacobian(spec, theta, options.scheme, forward);
        jac_current = true;
        Vector r(q);
        for (int j = 0; j < q; ++j) r[j] = n * prec[j] * (stats.mean[j] - g[j]);
        Vector grad = J.transpose() * r;
        Matrix H = n * J.transpose() * prec.asDiagonal() * J;
        if (!box) {
            grad -= spec.prior.grad_log_pdf(theta);
            H -= spec.prior.hess_log_pdf(theta);
        }

        std::vector<int> free_idx;
        double scaled = 0.0;
        for (int j = 0; j < d; ++j) {
            const bool pinned = box && ((theta[j] <= lo[j] && grad[j] > 0.0) || (theta[j] >= hi[j] && grad[j] < 0.0));
            if (pinned) continue;
            free_idx.push_back(j);
            scaled = std::max(scaled, std::abs(grad[j]) * std::max(std::abs(theta[j]), 1.0));
        }
        if (scaled <= options.gradient_tol * std::max(std::abs(F), 1.0)) {
            fit.converged = true;
            break;
        }

        const int nf = static_cast<int>(free_idx.size());
        Matrix Hf(nf, nf);
        Vector gf(nf);
        for (int a = 0; a < nf; ++a) {
            gf[a] = grad[free_idx[a]];
            for (int b = 0; b < nf; ++b) Hf(a, b) = H(free_idx[a], free_idx[b]);
        }
        Vector step_f;
        double mu = 0.0;
        const double hscale = std::max(Hf.diagonal().cwiseAbs().maxCoeff(), 1e-300);
        for (int tries = 0; tries < 30; ++tries) {
            const Eigen::LLT<Matrix> llt(Hf + mu * Matrix::Identity(nf, nf));
            if (llt.info() == Eigen::Success) {
                step_f = -llt.solve(gf);
                if (step_f.allFinite()) break;
            }
            mu = mu == 0.0 ? 1e-10 * hscale : 10.0 * mu;
        }
        if (step_f.size() != nf || !step_f.allFinite()) break;
        Vector step = Vector::Zero(d);
        for (int a = 0; a < nf; ++a) step[free_idx[a]] = step_f[a];

        bool accepted = false;
        double t = 1.0;
        double F_trial = F;
        for (int ls = 0; ls < 50; ++ls, t *= 0.5) {
            trial = theta + t * step;
            project(trial);
            F_trial = objective(trial, g_trial);
            if (F_trial <= F + 1e-4 * grad.dot(trial - theta)) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            // No further decrease is representable; accept the point if the
            // step is negligible relative to theta.
            fit.converged = step.cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, theta.cwiseAbs().maxCoeff());
            break;
        }
        const double moved = (trial - theta).cwiseAbs().maxCoeff();
        theta = trial;
        g = g_trial;
        F = F_trial;
        jac_current = false;
        fit.objective_trace.push_back(F);
        fit.iterations = it + 1;
        if (moved <= 1e-15 * std::max(1.0, theta.cwiseAbs().maxCoeff())) {
            fit.converged = true;
            break;
        }
    }
    if (!jac_current) J = jacobian(spec, theta, options.scheme, forward);

    fit.theta_hat = theta;
    if (box) fit.on_boundary = ((theta - lo).array() <= 0.0).any() || ((hi - theta).array() <= 0.0).any();
    LaplaceCovariance lc = laplace_covariance(spec, theta, J);
    fit.cov = std::move(lc.cov);
    fit.log_det_cov = lc.log_det;
    fit.proposal = MultivariateNormal(fit.theta_hat, fit.cov);
    fit.n_evals = forward.calls() - calls0;
    return fit;
}

LaplaceFit find_map(const ExperimentSpec& spec, const Dataset& data, const LaplaceOptions& options,
                    std::uint64_t seed) {
    if (data.Y.rows() == 0) throw std::invalid_argument("find_map: empty dataset");
    CountingForward forward(*spec.model, spec.design, spec.mesh);
    RandomSource starts(seed);
    return find_map(spec, sufficient_stats(spec.noise, data.Y), forward, starts, options);
}

double proposal_logpdf(const LaplaceFit& fit, const Vector& theta) {
    return fit.proposal.log_pdf(theta);
}

Vector proposal_sample(const LaplaceFit& fit, RandomSource& rng) {
    return fit.proposal.sample(rng);
}

}  // namespace boed
