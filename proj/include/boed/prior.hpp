#pragma once

#include "boed/random.hpp"
#include "boed/types.hpp"

namespace boed {

class MultivariateNormal {
  public:
    MultivariateNormal() = default;
    MultivariateNormal(Vector mean, Matrix covariance);

    int dim() const { return static_cast<int>(mean_.size()); }
    const Vector& mean() const { return mean_; }
    const Matrix& covariance() const { return cov_; }
    // Lower Cholesky factor of the covariance.
    const Matrix& factor() const { return chol_; }
    double log_det() const { return log_det_; }

    double log_pdf(const Vector& x) const;
    // out = mean + L z, z standard normal drawn component by component.
    void sample(RandomSource& rng, Vector& out) const;
    Vector sample(RandomSource& rng) const;

  private:
    Vector mean_;
    Matrix cov_;
    Matrix chol_;
    double log_det_ = 0.0;
};

class Prior {
  public:
    enum class Kind { normal, uniform };

    static Prior normal(Vector mean, Matrix covariance);
    static Prior uniform(Vector lower, Vector upper);

    Kind kind() const { return kind_; }
    bool is_uniform() const { return kind_ == Kind::uniform; }
    int dim() const;

    bool contains(const Vector& theta) const;
    // h(theta) = log pi(theta); -inf outside a uniform box.
    double log_pdf(const Vector& theta) const;
    Vector grad_log_pdf(const Vector& theta) const;
    Matrix hess_log_pdf(const Vector& theta) const;

    void sample(RandomSource& rng, Vector& out) const;
    Vector center() const;

    // Only meaningful for uniform priors; +-inf otherwise.
    const Vector& lower() const { return lower_; }
    const Vector& upper() const { return upper_; }
    const MultivariateNormal& gaussian() const { return gaussian_; }

  private:
    Kind kind_ = Kind::normal;
    MultivariateNormal gaussian_;
    Matrix precision_;
    Vector lower_;
    Vector upper_;
    double log_volume_ = 0.0;
};

}  // namespace boed
