#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace boed {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Discretization parameter of a forward model. h <= 0 means the exact model.
struct Mesh {
    double h = 0.0;

    static Mesh exact() { return {}; }
    static Mesh at(double h) { return {h}; }
    bool is_exact() const { return h <= 0.0; }
    // Work charged per forward evaluation.
    double work_per_eval(double gamma) const;
};

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class InfeasibleToleranceError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class ModelEvaluationError : public NumericalError {
  public:
    ModelEvaluationError(const std::string& what, Vector theta);
    const Vector& theta() const { return theta_; }

  private:
    Vector theta_;
};

// Precision matrix is singular or indefinite; carries its eigenvalues.
class NonIdentifiableError : public NumericalError {
  public:
    explicit NonIdentifiableError(Vector spectrum);
    const Vector& spectrum() const { return spectrum_; }

  private:
    Vector spectrum_;
};

class DegeneratePilotError : public NumericalError {
  public:
    using NumericalError::NumericalError;
};

}  // namespace boed
