#pragma once

#include "boed/estimators.hpp"

#include <cstdint>
#include <string>

namespace boed {

struct PilotConstants {
    Estimator variant = Estimator::dlmc;
    double c1 = 0.0;  // variance constant
    double c2 = 0.0;  // inner variance constant
    double c3 = 0.0;  // mesh bias constant, per h^eta
    double c4 = 0.0;  // inner bias constant
    double eta = 1.0;
    double gamma = 0.0;
    bool meshed = false;
    double mesh_min = 0.0;
    double mesh_max = 0.0;
    double c_la2 = 0.0;           // Laplace bias constant (mcla)
    double c_la2_difference = 0.0; // raw mean difference behind c_la2
    double c_la2_std_error = 0.0;
    int repeats = 1;              // N_e
    double outer_overhead = 1.0;  // evaluations per outer sample outside the inner loop
    std::int64_t pilot_n = 0;
    std::int64_t pilot_m = 0;
    std::uint64_t pilot_seed = 0;
    double pilot_h = 0.0;
};

struct PilotOptions {
    std::int64_t n = 100;
    std::int64_t m = 100;
    std::int64_t laplace_reference_inner = 1000;  // inner size for the Laplace-bias reference
    double pilot_h = 0.0;                          // 0: a quarter of the coarsest mesh
    EstimatorOptions estimator;
};

PilotConstants estimate_constants_dlmc(const ExperimentSpec& spec, std::int64_t pilot_n, std::int64_t pilot_m,
                                       std::uint64_t seed, const PilotOptions& options = {});
PilotConstants estimate_constants_dlmcis(const ExperimentSpec& spec, std::int64_t pilot_n, std::int64_t pilot_m,
                                         std::uint64_t seed, const PilotOptions& options = {});
PilotConstants estimate_constants_mcla(const ExperimentSpec& spec, std::int64_t pilot_n, std::uint64_t seed,
                                       const PilotOptions& options = {});
PilotConstants estimate_constants(Estimator which, const ExperimentSpec& spec, std::uint64_t seed,
                                  const PilotOptions& options = {});

enum class Solver { closed_form, numeric_fallback, forced_kappa1 };
const char* to_string(Solver s);

struct OptimalSetting {
    EstimatorSetting setting;
    double predicted_work = 0.0;  // work model at the ceilinged setting
    double relaxed_work = 0.0;    // continuous optimum of the minimized objective
    bool feasible = false;
    bool bias_constraint_enforced = true;
    Solver solver = Solver::closed_form;
    std::string message;
};

// Objective and constraints of the work minimization problem.
struct WorkModel {
    bool nested = true;           // N*M inner work (dlmc, dlmcis) or N only (mcla)
    double gamma = 0.0;
    double outer_overhead = 1.0;  // per-outer evaluations, counted in predicted work
};

struct ConstraintSet {
    double c1 = 0.0, c2 = 0.0, c3 = 0.0, c4 = 0.0;
    double eta = 1.0;
    double bias_floor = 0.0;  // mcla: C_la2 / N_e
    bool meshed = false;
    double mesh_min = 0.0, mesh_max = 0.0;
};

WorkModel work_model_of(const PilotConstants& c);
ConstraintSet constraints_of(const PilotConstants& c);

double predicted_work(const WorkModel& w, const EstimatorSetting& s);
double relaxed_objective(const WorkModel& w, double N, double M, double h);

// Post-hoc check of both constraints with the constants taken as truth.
bool satisfies_constraints(const ConstraintSet& c, const EstimatorSetting& s, bool check_bias = true);

OptimalSetting optimal_setting_dlmc(const PilotConstants& c, double tol, double alpha);
OptimalSetting optimal_setting_dlmcis(const PilotConstants& c, double tol, double alpha);
OptimalSetting optimal_setting_mcla(const PilotConstants& c, double tol, double alpha, int repeats,
                                    bool force_kappa1 = false);
OptimalSetting optimal_setting(const PilotConstants& c, double tol, double alpha, bool force_kappa1 = false);

OptimalSetting numeric_fallback(const WorkModel& work, const ConstraintSet& constraints, double tol, double alpha);

}  // namespace boed
