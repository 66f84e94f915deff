#include "boed/prior.hpp"

#include <cmath>
#include <limits>

namespace boed {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

MultivariateNormal::MultivariateNormal(Vector mean, Matrix covariance)
    : mean_(std::move(mean)), cov_(std::move(covariance)) {
    if (cov_.rows() != mean_.size() || cov_.cols() != mean_.size())
        throw std::invalid_argument("normal: covariance shape does not match mean");
    cov_ = 0.5 * (cov_ + cov_.transpose()).eval();
    Eigen::LLT<Matrix> llt(cov_);
    if (llt.info() != Eigen::Success) throw std::invalid_argument("normal: covariance is not positive definite");
    chol_ = llt.matrixL();
    log_det_ = 2.0 * chol_.diagonal().array().log().sum();
}

double MultivariateNormal::log_pdf(const Vector& x) const {
    const int d = dim();
    if (d == 1) {
        const double z = (x[0] - mean_[0]) / chol_(0, 0);
        return -0.5 * (kLog2Pi + log_det_ + z * z);
    }
    const Vector z = chol_.triangularView<Eigen::Lower>().solve(x - mean_);
    return -0.5 * (d * kLog2Pi + log_det_ + z.squaredNorm());
}

void MultivariateNormal::sample(RandomSource& rng, Vector& out) const {
    const int d = dim();
    out.resize(d);
    if (d == 1) {
        out[0] = mean_[0] + chol_(0, 0) * rng.normal();
        return;
    }
    Vector z(d);
    for (int i = 0; i < d; ++i) z[i] = rng.normal();
    out = mean_ + chol_.triangularView<Eigen::Lower>() * z;
}

Vector MultivariateNormal::sample(RandomSource& rng) const {
    Vector out;
    sample(rng, out);
    return out;
}

Prior Prior::normal(Vector mean, Matrix covariance) {
    Prior p;
    p.kind_ = Kind::normal;
    p.gaussian_ = MultivariateNormal(std::move(mean), std::move(covariance));
    const Eigen::LLT<Matrix> llt(p.gaussian_.covariance());
    p.precision_ = llt.solve(Matrix::Identity(p.dim(), p.dim()));
    p.precision_ = 0.5 * (p.precision_ + p.precision_.transpose()).eval();
    p.lower_ = Vector::Constant(p.dim(), -std::numeric_limits<double>::infinity());
    p.upper_ = Vector::Constant(p.dim(), std::numeric_limits<double>::infinity());
    return p;
}

Prior Prior::uniform(Vector lower, Vector upper) {
    if (lower.size() != upper.size() || lower.size() == 0)
        throw std::invalid_argument("uniform prior: bounds must have equal, nonzero length");
    if (!((upper - lower).array() > 0.0).all())
        throw std::invalid_argument("uniform prior: need lower < upper componentwise");
    Prior p;
    p.kind_ = Kind::uniform;
    p.lower_ = std::move(lower);
    p.upper_ = std::move(upper);
    p.log_volume_ = (p.upper_ - p.lower_).array().log().sum();
    return p;
}

int Prior::dim() const {
    return is_uniform() ? static_cast<int>(lower_.size()) : gaussian_.dim();
}

bool Prior::contains(const Vector& theta) const {
    if (!is_uniform()) return theta.allFinite();
    return ((theta - lower_).array() >= 0.0).all() && ((upper_ - theta).array() >= 0.0).all();
}

double Prior::log_pdf(const Vector& theta) const {
    if (!is_uniform()) return gaussian_.log_pdf(theta);
    return contains(theta) ? -log_volume_ : -std::numeric_limits<double>::infinity();
}

Vector Prior::grad_log_pdf(const Vector& theta) const {
    if (is_uniform()) return Vector::Zero(dim());
    return -(precision_ * (theta - gaussian_.mean()));
}

Matrix Prior::hess_log_pdf(const Vector&) const {
    if (is_uniform()) return Matrix::Zero(dim(), dim());
    return -precision_;
}

void Prior::sample(RandomSource& rng, Vector& out) const {
    if (!is_uniform()) {
        gaussian_.sample(rng, out);
        return;
    }
    out.resize(dim());
    for (int i = 0; i < dim(); ++i) out[i] = lower_[i] + (upper_[i] - lower_[i]) * rng.uniform();
}

Vector Prior::center() const {
    return is_uniform() ? Vector(0.5 * (lower_ + upper_)) : gaussian_.mean();
}

}  // namespace boed
