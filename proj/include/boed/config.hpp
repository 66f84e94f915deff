#pragma once

#include "boed/estimators.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace boed {

// Line-oriented config:
//
//   # comment            ; comment
//   [section]
//   key = value          # trailing comments allowed
//   key = v1 v2 v3       # lists are whitespace or comma separated
//
// Keys are case-sensitive. Unknown sections or keys are errors.
struct ConfigValue {
    std::string text;
    int line = 0;
};

class ConfigFile {
  public:
    static ConfigFile parse(const std::string& text, const std::string& source = "<config>");
    static ConfigFile load(const std::string& path);

    bool has(const std::string& section, const std::string& key) const;
    const ConfigValue* find(const std::string& section, const std::string& key) const;
    const std::string& source() const { return source_; }
    const std::map<std::string, std::map<std::string, ConfigValue>>& sections() const { return sections_; }

    std::string get_string(const std::string& section, const std::string& key) const;
    std::string get_string(const std::string& section, const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    std::int64_t get_int(const std::string& section, const std::string& key, std::int64_t fallback) const;
    std::uint64_t get_u64(const std::string& section, const std::string& key, std::uint64_t fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
    std::vector<double> get_doubles(const std::string& section, const std::string& key) const;
    std::vector<std::string> get_strings(const std::string& section, const std::string& key) const;

    // "file:line: section.key: message"
    [[noreturn]] void fail(const std::string& section, const std::string& key, const std::string& message) const;

  private:
    std::string source_;
    std::map<std::string, std::map<std::string, ConfigValue>> sections_;
};

struct NoiseConfig {
    std::vector<double> variance;
    // sd = a + b (xi - c), scalar designs only
    std::optional<std::array<double, 3>> sd_affine;
};

struct RunConfig {
    std::string source;

    std::string model_name;
    ModelParameters model_params;

    std::string prior_kind;
    std::vector<double> prior_mean, prior_variance, prior_lower, prior_upper;

    NoiseConfig noise;

    std::vector<double> xi;  // single design
    bool has_grid = false;
    double grid_lo = 0.0, grid_hi = 0.0;
    int grid_n = 0;

    int repeats = 1;

    std::vector<Estimator> estimators;
    std::vector<double> tols;
    double alpha = 0.05;
    std::uint64_t seed = 1;
    int replicates = 1;
    int jobs = 1;
    bool force_kappa1 = false;
    std::int64_t pilot_n = 100;
    std::int64_t pilot_m = 100;
    double pilot_h = 0.0;

    // Explicit setting; the tuner is skipped when N is given.
    std::optional<std::int64_t> fixed_N;
    std::optional<std::int64_t> fixed_M;
    std::optional<double> fixed_h;
    std::optional<double> fixed_kappa;

    std::string output_dir = "results";

    std::vector<double> design_grid() const;
    // Spec at design xi (defaults to the configured design).
    ExperimentSpec spec_at(const std::vector<double>& design) const;
    ExperimentSpec spec() const { return spec_at(xi); }
};

RunConfig parse_run_config(const ConfigFile& file);
RunConfig load_run_config(const std::string& path);

}  // namespace boed
