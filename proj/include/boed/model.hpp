#pragma once

#include "boed/types.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>

namespace boed {

// Forward map g(theta, xi) with optional discretization h.
class ExperimentModel {
  public:
    virtual ~ExperimentModel() = default;

    virtual std::string name() const = 0;
    virtual int parameter_dim() const = 0;
    virtual int response_dim() const = 0;
    virtual int design_dim() const { return 1; }
    virtual bool design_admissible(const Vector& design) const;

    // Writes g(theta, design) evaluated at `mesh` into out (length q).
    virtual void evaluate(const Vector& theta, const Vector& design, Mesh mesh,
                          Eigen::Ref<Vector> out) const = 0;

    virtual bool has_mesh() const { return false; }
    // gamma: work per evaluation is h^-gamma.
    virtual double work_exponent() const { return 0.0; }
    // eta: |g_h - g| = O(h^eta).
    virtual double convergence_rate() const { return 1.0; }
    virtual double mesh_min() const { return 0.0; }
    virtual double mesh_max() const { return 0.0; }

    virtual bool has_analytic_jacobian() const { return false; }
    // dg/dtheta (q x d). Note the Laplace module works with J = -dg/dtheta.
    virtual Matrix analytic_jacobian(const Vector& theta, const Vector& design) const;

    Vector operator()(const Vector& theta, const Vector& design, Mesh mesh = Mesh::exact()) const;
};

using ModelPtr = std::shared_ptr<const ExperimentModel>;

// g = theta (1 + xi)^2
class LinearScalarModel final : public ExperimentModel {
  public:
    std::string name() const override { return "linear-scalar"; }
    int parameter_dim() const override { return 1; }
    int response_dim() const override { return 1; }
    void evaluate(const Vector& theta, const Vector& design, Mesh mesh,
                  Eigen::Ref<Vector> out) const override;
    bool has_analytic_jacobian() const override { return true; }
    Matrix analytic_jacobian(const Vector& theta, const Vector& design) const override;
};

// g = theta^3 xi^2 + theta exp(-|0.2 - xi|), xi in [0, 1]
class NonlinearScalarModel final : public ExperimentModel {
  public:
    std::string name() const override { return "nonlinear-scalar"; }
    int parameter_dim() const override { return 1; }
    int response_dim() const override { return 1; }
    bool design_admissible(const Vector& design) const override;
    void evaluate(const Vector& theta, const Vector& design, Mesh mesh,
                  Eigen::Ref<Vector> out) const override;
    bool has_analytic_jacobian() const override { return true; }
    Matrix analytic_jacobian(const Vector& theta, const Vector& design) const override;
};

// Wraps an exact model: g_h = g (1 + c_bias h^eta), charged h^-gamma per call.
class SyntheticMeshModel final : public ExperimentModel {
  public:
    SyntheticMeshModel(ModelPtr base, double c_bias, double eta, double gamma,
                       double h_min = 1e-6, double h_max = 1.0);

    std::string name() const override { return "synthetic-mesh"; }
    int parameter_dim() const override { return base_->parameter_dim(); }
    int response_dim() const override { return base_->response_dim(); }
    int design_dim() const override { return base_->design_dim(); }
    bool design_admissible(const Vector& design) const override {
        return base_->design_admissible(design);
    }
    void evaluate(const Vector& theta, const Vector& design, Mesh mesh,
                  Eigen::Ref<Vector> out) const override;

    bool has_mesh() const override { return true; }
    double work_exponent() const override { return gamma_; }
    double convergence_rate() const override { return eta_; }
    double mesh_min() const override { return h_min_; }
    double mesh_max() const override { return h_max_; }
    double bias_constant() const { return c_bias_; }
    const ExperimentModel& base() const { return *base_; }

  private:
    ModelPtr base_;
    double c_bias_;
    double eta_;
    double gamma_;
    double h_min_;
    double h_max_;
};

struct ModelParameters {
    std::map<std::string, double> values;
    std::string base = "nonlinear-scalar";

    double get(const std::string& key, double fallback) const;
};

// Registry: "linear-scalar", "nonlinear-scalar", "synthetic-mesh".
ModelPtr make_model(std::string_view name, const ModelParameters& params = {});
bool model_registered(std::string_view name);

// Counts forward calls for work accounting and rejects non-finite output.
class CountingForward {
  public:
    CountingForward(const ExperimentModel& model, const Vector& design, Mesh mesh);

    void operator()(const Vector& theta, Eigen::Ref<Vector> out);
    std::int64_t calls() const { return calls_; }
    double work_per_call() const { return work_per_call_; }
    const ExperimentModel& model() const { return model_; }
    Mesh mesh() const { return mesh_; }

  private:
    const ExperimentModel& model_;
    const Vector& design_;
    Mesh mesh_;
    double work_per_call_;
    std::int64_t calls_ = 0;
};

}  // namespace boed
