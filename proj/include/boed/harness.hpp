#pragma once

#include "boed/config.hpp"
#include "boed/tuner.hpp"

#include <json.hpp>

#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace boed {

struct CommandOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<Estimator> estimator;
    bool force_kappa1 = false;
    std::optional<int> replicates;
    std::optional<int> jobs;
};

void apply_overrides(RunConfig& config, const CommandOverrides& o);

// Closed form for linear-scalar with a normal prior, otherwise quadrature
// (d = 1). Empty when no oracle applies.
std::optional<double> reference_eig(const ExperimentSpec& spec);

// Pilot seed and run seed of (design index, TOL index, replicate).
std::uint64_t pilot_seed(std::uint64_t root, std::uint64_t design_index);
// Pilot seed of one consistency replicate.
std::uint64_t replicate_pilot_seed(std::uint64_t root, std::uint64_t replicate);
std::uint64_t run_seed(std::uint64_t root, std::uint64_t design_index, std::uint64_t tol_index,
                       std::uint64_t replicate);

PilotConstants run_pilot(const RunConfig& config, Estimator e, const ExperimentSpec& spec, std::uint64_t seed);

// Tunes for one TOL. Throws InfeasibleToleranceError with the tuner's message
// when no setting exists, and NumericalError when the setting fails the
// post-hoc constraint check.
OptimalSetting tune(const RunConfig& config, const PilotConstants& constants, double tol);

// Explicit setting from [run] N/M/h/kappa.
EstimatorSetting explicit_setting(const RunConfig& config, double tol);

EstimatorOptions estimator_options(const RunConfig& config);

struct StudyRecord {
    Estimator estimator = Estimator::dlmcis;
    double xi = 0.0;
    double tol = 0.0;
    int replicate = 0;
    std::uint64_t seed = 0;
    EstimatorSetting setting;
    EigEstimate estimate;
    std::optional<double> reference;
    double predicted_work = 0.0;
    double wall_time = 0.0;  // sidecar only
    std::string status = "ok";
};

struct CoverageRow {
    Estimator estimator = Estimator::dlmcis;
    double tol = 0.0;
    int replicates = 0;
    int within = 0;
    double coverage = 0.0;
    double target = 0.0;  // 1 - alpha
};

struct SlopeFit {
    Estimator estimator = Estimator::dlmcis;
    int points = 0;
    std::optional<double> work_slope;
    std::optional<double> predicted_slope;
    std::optional<double> wall_slope;  // sidecar only
};

struct CurvePoint {
    Estimator estimator = Estimator::dlmcis;
    double xi = 0.0;
    double tol = 0.0;
    std::uint64_t seed = 0;
    EstimatorSetting setting;
    EigEstimate estimate;
    double half_width = 0.0;
    std::optional<double> reference;
    double wall_time = 0.0;
    std::string status = "ok";
};

struct EstimateResult {
    Estimator estimator = Estimator::dlmcis;
    std::uint64_t seed = 0;
    ExperimentSpec spec;
    EstimatorSetting setting;
    EigEstimate estimate;
    std::optional<PilotConstants> pilot;
    std::optional<OptimalSetting> optimal;
    std::optional<double> reference;
    double wall_time = 0.0;
};

EstimateResult run_estimate(const RunConfig& config);
std::vector<StudyRecord> run_consistency(const RunConfig& config);
std::vector<CoverageRow> coverage_summary(const std::vector<StudyRecord>& records, double alpha);
std::vector<StudyRecord> run_work_study(const RunConfig& config);
std::vector<SlopeFit> fit_work_slopes(const std::vector<StudyRecord>& records);
std::vector<CurvePoint> run_eig_curve(const RunConfig& config);

struct TuneRow {
    Estimator estimator = Estimator::dlmcis;
    double tol = 0.0;
    OptimalSetting optimal;
};
struct TuneResult {
    std::vector<PilotConstants> pilots;
    std::vector<TuneRow> rows;
};
TuneResult run_tune(const RunConfig& config);

// Least-squares slope of log y on log x; empty with fewer than two distinct x.
std::optional<double> loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

// Serialization. Numbers use 17 significant digits.
std::string format_double(double x);
void write_study_csv(std::ostream& os, const std::vector<StudyRecord>& records);
void write_coverage_csv(std::ostream& os, const std::vector<CoverageRow>& rows);
void write_curve_csv(std::ostream& os, const std::vector<CurvePoint>& points);
void write_tune_csv(std::ostream& os, const TuneResult& result);

nlohmann::json to_json(const EigEstimate& e);
nlohmann::json to_json(const EstimatorSetting& s);
nlohmann::json to_json(const PilotConstants& c);
nlohmann::json to_json(const OptimalSetting& o);
nlohmann::json config_json(const RunConfig& config);
nlohmann::json estimate_json(const RunConfig& config, const EstimateResult& r);
nlohmann::json slopes_json(const RunConfig& config, const std::vector<SlopeFit>& fits);
nlohmann::json tune_json(const RunConfig& config, const TuneResult& r);

// Runs a CLI subcommand and writes its files under config.output_dir.
// Returns the list of files written.
std::vector<std::string> run_command(const std::string& command, const RunConfig& config);

}  // namespace boed
