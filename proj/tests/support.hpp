#pragma once

#include "boed/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace testing {

inline boed::Vector vec(std::initializer_list<double> v) {
    boed::Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

// g = theta (1 + xi)^2, theta ~ N(1, 0.01), sd = 2 + (xi - 10)/10.
inline boed::ExperimentSpec example1(double xi = 10.0, int repeats = 2) {
    boed::ExperimentSpec s;
    s.model = boed::make_model("linear-scalar");
    s.prior = boed::Prior::normal(vec({1.0}), boed::Matrix::Constant(1, 1, 0.01));
    const double sd = 2.0 + (xi - 10.0) / 10.0;
    s.noise = boed::NoiseModel::scalar(sd * sd);
    s.design = vec({xi});
    s.repeats = repeats;
    s.validate();
    return s;
}

// g = theta^3 xi^2 + theta exp(-|0.2 - xi|), theta ~ U(0, 1).
inline boed::ExperimentSpec example2(double xi = 1.0, int repeats = 1, double variance = 1e-3) {
    boed::ExperimentSpec s;
    s.model = boed::make_model("nonlinear-scalar");
    s.prior = boed::Prior::uniform(vec({0.0}), vec({1.0}));
    s.noise = boed::NoiseModel::scalar(variance);
    s.design = vec({xi});
    s.repeats = repeats;
    s.validate();
    return s;
}

inline boed::ExperimentSpec synthetic_mesh(double h, int repeats = 10) {
    boed::ExperimentSpec s = example2(1.0, repeats);
    boed::ModelParameters p;
    p.values = {{"c_bias", 1.0}, {"eta", 1.0}, {"gamma", 1.0}, {"h_min", 1e-6}, {"h_max", 1.0}};
    s.model = boed::make_model("synthetic-mesh", p);
    s.mesh = boed::Mesh::at(h);
    s.validate();
    return s;
}

// g = c, no information about theta.
class ConstantModel final : public boed::ExperimentModel {
  public:
    std::string name() const override { return "constant"; }
    int parameter_dim() const override { return 1; }
    int response_dim() const override { return 1; }
    void evaluate(const boed::Vector&, const boed::Vector&, boed::Mesh, Eigen::Ref<boed::Vector> out) const override {
        out(0) = 0.5;
    }
};

// g = A theta, d parameters summed into one response.
class SumModel final : public boed::ExperimentModel {
  public:
    explicit SumModel(int d, double a = 1.0) : d_(d), a_(a) {}
    std::string name() const override { return "sum"; }
    int parameter_dim() const override { return d_; }
    int response_dim() const override { return 1; }
    void evaluate(const boed::Vector& theta, const boed::Vector&, boed::Mesh, Eigen::Ref<boed::Vector> out) const override {
        out(0) = a_ * theta.sum();
    }

  private:
    int d_;
    double a_;
};

// NaN for theta > 0.5.
class BrokenModel final : public boed::ExperimentModel {
  public:
    std::string name() const override { return "broken"; }
    int parameter_dim() const override { return 1; }
    int response_dim() const override { return 1; }
    void evaluate(const boed::Vector& theta, const boed::Vector&, boed::Mesh, Eigen::Ref<boed::Vector> out) const override {
        out(0) = theta(0) > 0.5 ? std::nan("") : theta(0);
    }
};

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

}  // namespace testing
