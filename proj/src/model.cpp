#include "boed/model.hpp"

#include <cmath>

namespace boed {

bool ExperimentModel::design_admissible(const Vector& design) const {
    return design.size() == design_dim() && design.allFinite();
}

Matrix ExperimentModel::analytic_jacobian(const Vector&, const Vector&) const {
    throw std::logic_error(name() + ": no analytic Jacobian");
}

Vector ExperimentModel::operator()(const Vector& theta, const Vector& design, Mesh mesh) const {
    Vector out(response_dim());
    evaluate(theta, design, mesh, out);
    return out;
}

void LinearScalarModel::evaluate(const Vector& theta, const Vector& design, Mesh,
                                 Eigen::Ref<Vector> out) const {
    const double a = 1.0 + design[0];
    out[0] = theta[0] * a * a;
}

Matrix LinearScalarModel::analytic_jacobian(const Vector&, const Vector& design) const {
    const double a = 1.0 + design[0];
    return Matrix::Constant(1, 1, a * a);
}

bool NonlinearScalarModel::design_admissible(const Vector& design) const {
    return ExperimentModel::design_admissible(design) && design[0] >= 0.0 && design[0] <= 1.0;
}

void NonlinearScalarModel::evaluate(const Vector& theta, const Vector& design, Mesh,
                                    Eigen::Ref<Vector> out) const {
    const double t = theta[0];
    const double x = design[0];
    out[0] = t * t * t * x * x + t * std::exp(-std::abs(0.2 - x));
}

Matrix NonlinearScalarModel::analytic_jacobian(const Vector& theta, const Vector& design) const {
    const double t = theta[0];
    const double x = design[0];
    return Matrix::Constant(1, 1, 3.0 * t * t * x * x + std::exp(-std::abs(0.2 - x)));
}

SyntheticMeshModel::SyntheticMeshModel(ModelPtr base, double c_bias, double eta, double gamma, double h_min,
                                       double h_max)
    : base_(std::move(base)), c_bias_(c_bias), eta_(eta), gamma_(gamma), h_min_(h_min), h_max_(h_max) {
    if (!base_) throw std::invalid_argument("synthetic-mesh: missing base model");
    if (base_->has_mesh()) throw std::invalid_argument("synthetic-mesh: base model must be exact");
    if (!(eta_ > 0.0)) throw std::invalid_argument("synthetic-mesh: eta must be positive");
    if (!(gamma_ >= 0.0)) throw std::invalid_argument("synthetic-mesh: gamma must be non-negative");
    if (!(h_min_ > 0.0 && h_min_ < h_max_)) throw std::invalid_argument("synthetic-mesh: need 0 < h_min < h_max");
}

void SyntheticMeshModel::evaluate(const Vector& theta, const Vector& design, Mesh mesh,
                                  Eigen::Ref<Vector> out) const {
    base_->evaluate(theta, design, Mesh::exact(), out);
    if (!mesh.is_exact()) out *= 1.0 + c_bias_ * std::pow(mesh.h, eta_);
}

double ModelParameters::get(const std::string& key, double fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
}

bool model_registered(std::string_view name) {
    return name == "linear-scalar" || name == "nonlinear-scalar" || name == "synthetic-mesh";
}

ModelPtr make_model(std::string_view name, const ModelParameters& params) {
    if (name == "linear-scalar") return std::make_shared<LinearScalarModel>();
    if (name == "nonlinear-scalar") return std::make_shared<NonlinearScalarModel>();
    if (name == "synthetic-mesh") {
        if (params.base == "synthetic-mesh") throw std::invalid_argument("synthetic-mesh cannot wrap itself");
        return std::make_shared<SyntheticMeshModel>(make_model(params.base), params.get("c_bias", 1.0),
                                                    params.get("eta", 1.0), params.get("gamma", 1.0),
                                                    params.get("h_min", 1e-6), params.get("h_max", 1.0));
    }
    throw std::invalid_argument("unknown model '" + std::string(name) + "'");
}

CountingForward::CountingForward(const ExperimentModel& model, const Vector& design, Mesh mesh)
    : model_(model), design_(design), mesh_(mesh), work_per_call_(mesh.work_per_eval(model.work_exponent())) {
    if (!mesh.is_exact() && !model.has_mesh())
        throw std::invalid_argument(model.name() + " has no mesh parameter");
}

void CountingForward::operator()(const Vector& theta, Eigen::Ref<Vector> out) {
    ++calls_;
    model_.evaluate(theta, design_, mesh_, out);
    if (!out.allFinite()) throw ModelEvaluationError(model_.name() + " returned a non-finite response", theta);
}

}  // namespace boed
