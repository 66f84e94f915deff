#include "boed/harness.hpp"

#include "boed/oracles.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace boed {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string utc_now() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

std::string opt_double(const std::optional<double>& x) {
    return x ? format_double(*x) : std::string();
}

nlohmann::json opt_json(const std::optional<double>& x) {
    return x ? nlohmann::json(*x) : nlohmann::json(nullptr);
}

// "exact" for a model without discretization.
std::string mesh_text(const EstimatorSetting& s) {
    return s.mesh.is_exact() ? "exact" : format_double(s.mesh.h);
}

nlohmann::json mesh_json(const EstimatorSetting& s) {
    return s.mesh.is_exact() ? nlohmann::json("exact") : nlohmann::json(s.mesh.h);
}

// Closed-form oracle applies to the scalar linear model with a normal prior.
std::optional<double> linear_reference(const ExperimentSpec& spec) {
    if (spec.model->name() != "linear-scalar" || spec.prior.is_uniform() || !spec.mesh.is_exact()) return {};
    const double a = 1.0 + spec.design[0];
    return linear_gaussian_eig(a * a, spec.prior.gaussian().covariance()(0, 0), spec.noise.variances()[0],
                               spec.repeats);
}

std::string status_of(const std::exception& e, const char* kind) {
    return std::string(kind) + ": " + e.what();
}

void write_file(const std::filesystem::path& path, const std::string& text, std::vector<std::string>& written) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    written.push_back(path.string());
}

}  // namespace

void apply_overrides(RunConfig& c, const CommandOverrides& o) {
    if (o.seed) c.seed = *o.seed;
    if (o.out) c.output_dir = *o.out;
    if (o.estimator) c.estimators = {*o.estimator};
    if (o.force_kappa1) c.force_kappa1 = true;
    if (o.replicates) {
        if (*o.replicates < 0) throw ConfigError("--replicates must be >= 0");
        c.replicates = *o.replicates;
    }
    if (o.jobs) {
        if (*o.jobs < 1) throw ConfigError("--jobs must be >= 1");
        c.jobs = *o.jobs;
    }
}

std::optional<double> reference_eig(const ExperimentSpec& spec_in) {
    if (spec_in.d() != 1) return {};
    ExperimentSpec spec = spec_in;
    spec.mesh = Mesh::exact();
    if (auto r = linear_reference(spec)) return r;
    return quadrature_eig(spec, parameter_rule(spec.prior, 1200), QuadratureRule::hermite(40), 0);
}

std::uint64_t pilot_seed(std::uint64_t root, std::uint64_t design_index) {
    return derive_seed(root, design_index, Stream::pilot);
}

std::uint64_t replicate_pilot_seed(std::uint64_t root, std::uint64_t replicate) {
    return derive_seed(pilot_seed(root, 0), replicate, Stream::replicate);
}

std::uint64_t run_seed(std::uint64_t root, std::uint64_t design_index, std::uint64_t tol_index,
                       std::uint64_t replicate) {
    const std::uint64_t a = derive_seed(root, design_index, Stream::replicate);
    const std::uint64_t b = derive_seed(a, tol_index, Stream::replicate);
    return derive_seed(b, replicate, Stream::replicate);
}

EstimatorOptions estimator_options(const RunConfig& config) {
    EstimatorOptions o;
    o.jobs = config.jobs;
    return o;
}

PilotConstants run_pilot(const RunConfig& config, Estimator e, const ExperimentSpec& spec, std::uint64_t seed) {
    PilotOptions po;
    po.n = config.pilot_n;
    po.m = config.pilot_m;
    po.pilot_h = config.pilot_h;
    po.estimator = estimator_options(config);
    return estimate_constants(e, spec, seed, po);
}

OptimalSetting tune(const RunConfig& config, const PilotConstants& c, double tol) {
    const bool force = config.force_kappa1 && c.variant == Estimator::mcla;
    OptimalSetting o = optimal_setting(c, tol, config.alpha, force);
    if (!o.feasible) throw InfeasibleToleranceError(o.message);
    if (!satisfies_constraints(constraints_of(c), o.setting, o.bias_constraint_enforced)) {
        throw NumericalError(fmt::format(
            "{} setting for TOL = {} fails the post-hoc constraint check: N = {}, M = {}, h = {}, kappa = {}",
            to_string(c.variant), format_double(tol), o.setting.N, o.setting.M, mesh_text(o.setting),
            format_double(o.setting.kappa)));
    }
    return o;
}

EstimatorSetting explicit_setting(const RunConfig& config, double tol) {
    EstimatorSetting s;
    s.N = *config.fixed_N;
    s.M = config.fixed_M.value_or(1);
    s.kappa = config.fixed_kappa.value_or(0.5);
    s.tol = tol;
    s.alpha = config.alpha;
    const ExperimentSpec spec = config.spec();
    if (spec.model->has_mesh()) {
        if (!config.fixed_h) throw ConfigError(config.source + ": run.h is required with an explicit setting on a meshed model");
        s.mesh = Mesh::at(*config.fixed_h);
    } else if (config.fixed_h && *config.fixed_h > 0.0) {
        throw ConfigError(config.source + ": run.h given for a model without a mesh");
    }
    s.validate();
    return s;
}

EstimateResult run_estimate(const RunConfig& config) {
    const auto t0 = Clock::now();
    EstimateResult r;
    r.estimator = config.estimators.front();
    r.spec = config.spec();
    const double tol = config.tols.front();
    r.seed = run_seed(config.seed, 0, 0, 0);
    if (config.fixed_N) {
        r.setting = explicit_setting(config, tol);
    } else {
        r.pilot = run_pilot(config, r.estimator, r.spec, pilot_seed(config.seed, 0));
        r.optimal = tune(config, *r.pilot, tol);
        r.setting = r.optimal->setting;
    }
    r.estimate = run_estimator(r.estimator, r.spec, r.setting, r.seed, estimator_options(config));
    r.reference = reference_eig(r.spec);
    r.wall_time = seconds_since(t0);
    return r;
}

std::vector<StudyRecord> run_consistency(const RunConfig& config) {
    std::vector<StudyRecord> out;
    if (config.replicates == 0) return out;
    const ExperimentSpec spec = config.spec();
    const std::optional<double> reference = reference_eig(spec);
    if (!reference) throw ConfigError(config.source + ": consistency needs an oracle (scalar parameter models)");
    for (Estimator e : config.estimators) {
        // Each replicate tunes from its own pilot, shared across TOLs.
        std::vector<PilotConstants> pilots;
        if (!config.fixed_N)
            for (int r = 0; r < config.replicates; ++r) {
                const std::uint64_t seed = replicate_pilot_seed(config.seed, static_cast<std::uint64_t>(r));
                pilots.push_back(run_pilot(config, e, spec, seed));
            }
        for (std::size_t i = 0; i < config.tols.size(); ++i) {
            const double tol = config.tols[i];
            for (int r = 0; r < config.replicates; ++r) {
                StudyRecord rec;
                rec.estimator = e;
                rec.xi = spec.design[0];
                rec.tol = tol;
                rec.reference = reference;
                rec.replicate = r;
                rec.seed = run_seed(config.seed, 0, i, static_cast<std::uint64_t>(r));
                try {
                    if (pilots.empty()) {
                        rec.setting = explicit_setting(config, tol);
                    } else {
                        const OptimalSetting o = tune(config, pilots[static_cast<std::size_t>(r)], tol);
                        rec.setting = o.setting;
                        rec.predicted_work = o.predicted_work;
                    }
                } catch (const InfeasibleToleranceError& err) {
                    rec.status = status_of(err, "infeasible");
                    out.push_back(std::move(rec));
                    continue;
                }
                const auto t0 = Clock::now();
                rec.estimate = run_estimator(e, spec, rec.setting, rec.seed, estimator_options(config));
                rec.wall_time = seconds_since(t0);
                out.push_back(std::move(rec));
            }
        }
    }
    return out;
}

std::vector<CoverageRow> coverage_summary(const std::vector<StudyRecord>& records, double alpha) {
    std::vector<CoverageRow> rows;
    std::map<std::pair<int, double>, std::size_t> index;
    for (const StudyRecord& r : records) {
        if (r.status != "ok" || !r.reference) continue;
        const auto key = std::make_pair(static_cast<int>(r.estimator), r.tol);
        auto it = index.find(key);
        if (it == index.end()) {
            CoverageRow row;
            row.estimator = r.estimator;
            row.tol = r.tol;
            row.target = 1.0 - alpha;
            rows.push_back(row);
            it = index.emplace(key, rows.size() - 1).first;
        }
        CoverageRow& row = rows[it->second];
        ++row.replicates;
        if (std::abs(r.estimate.value - *r.reference) <= r.tol) ++row.within;
    }
    for (CoverageRow& row : rows) row.coverage = static_cast<double>(row.within) / row.replicates;
    return rows;
}

std::vector<StudyRecord> run_work_study(const RunConfig& config) {
    std::vector<StudyRecord> out;
    const ExperimentSpec spec = config.spec();
    const std::optional<double> reference = reference_eig(spec);
    const int reps = std::max(1, config.replicates);
    for (Estimator e : config.estimators) {
        const PilotConstants pilot = run_pilot(config, e, spec, pilot_seed(config.seed, 0));
        for (std::size_t i = 0; i < config.tols.size(); ++i) {
            StudyRecord base;
            base.estimator = e;
            base.xi = spec.design[0];
            base.tol = config.tols[i];
            base.reference = reference;
            try {
                const OptimalSetting o = tune(config, pilot, base.tol);
                base.setting = o.setting;
                base.predicted_work = o.predicted_work;
            } catch (const InfeasibleToleranceError& err) {
                base.status = status_of(err, "infeasible");
                out.push_back(base);
                continue;
            }
            for (int r = 0; r < reps; ++r) {
                StudyRecord rec = base;
                rec.replicate = r;
                rec.seed = run_seed(config.seed, 0, i, static_cast<std::uint64_t>(r));
                const auto t0 = Clock::now();
                rec.estimate = run_estimator(e, spec, rec.setting, rec.seed, estimator_options(config));
                rec.wall_time = seconds_since(t0);
                out.push_back(std::move(rec));
            }
        }
    }
    return out;
}

std::optional<double> loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("loglog_slope: length mismatch");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0 && y[i] > 0.0)) continue;
        lx.push_back(std::log(x[i]));
        ly.push_back(std::log(y[i]));
    }
    if (lx.size() < 2) return {};
    const double n = static_cast<double>(lx.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) return {};
    return sxy / sxx;
}

std::vector<SlopeFit> fit_work_slopes(const std::vector<StudyRecord>& records) {
    std::vector<SlopeFit> fits;
    std::vector<Estimator> order;
    for (const StudyRecord& r : records)
        if (std::find(order.begin(), order.end(), r.estimator) == order.end()) order.push_back(r.estimator);
    for (Estimator e : order) {
        // Replicates at one TOL are averaged first.
        std::map<double, std::array<double, 4>> by_tol;  // work, predicted, wall, count
        for (const StudyRecord& r : records) {
            if (r.estimator != e || r.status != "ok") continue;
            auto& acc = by_tol[r.tol];
            acc[0] += r.estimate.work_units;
            acc[1] += r.predicted_work;
            acc[2] += r.wall_time;
            acc[3] += 1.0;
        }
        std::vector<double> tol, work, pred, wall;
        for (const auto& [t, acc] : by_tol) {
            tol.push_back(t);
            work.push_back(acc[0] / acc[3]);
            pred.push_back(acc[1] / acc[3]);
            wall.push_back(acc[2] / acc[3]);
        }
        SlopeFit f;
        f.estimator = e;
        f.points = static_cast<int>(tol.size());
        f.work_slope = loglog_slope(tol, work);
        f.predicted_slope = loglog_slope(tol, pred);
        f.wall_slope = loglog_slope(tol, wall);
        fits.push_back(f);
    }
    return fits;
}

std::vector<CurvePoint> run_eig_curve(const RunConfig& config) {
    std::vector<CurvePoint> out;
    const std::vector<double> grid = config.design_grid();
    if (grid.empty()) throw ConfigError(config.source + ": empty design grid");
    const double tol = config.tols.front();
    std::vector<std::optional<double>> refs(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) refs[k] = reference_eig(config.spec_at({grid[k]}));
    for (Estimator e : config.estimators) {
        for (std::size_t k = 0; k < grid.size(); ++k) {
            CurvePoint p;
            p.estimator = e;
            p.xi = grid[k];
            p.tol = tol;
            p.seed = run_seed(config.seed, k, 0, 0);
            p.reference = refs[k];
            const auto t0 = Clock::now();
            try {
                const ExperimentSpec spec = config.spec_at({grid[k]});
                if (config.fixed_N) {
                    p.setting = explicit_setting(config, tol);
                } else {
                    const PilotConstants pilot = run_pilot(config, e, spec, pilot_seed(config.seed, k));
                    p.setting = tune(config, pilot, tol).setting;
                }
                p.estimate = run_estimator(e, spec, p.setting, p.seed, estimator_options(config));
                p.half_width = confidence_multiplier(config.alpha) * p.estimate.std_error;
            } catch (const InfeasibleToleranceError& err) {
                p.status = status_of(err, "infeasible");
            } catch (const NumericalError& err) {
                p.status = status_of(err, "numerical");
            }
            p.wall_time = seconds_since(t0);
            out.push_back(std::move(p));
        }
    }
    return out;
}

TuneResult run_tune(const RunConfig& config) {
    TuneResult r;
    const ExperimentSpec spec = config.spec();
    for (Estimator e : config.estimators) {
        r.pilots.push_back(run_pilot(config, e, spec, pilot_seed(config.seed, 0)));
        for (double tol : config.tols) {
            TuneRow row;
            row.estimator = e;
            row.tol = tol;
            row.optimal = optimal_setting(r.pilots.back(), tol, config.alpha,
                                          config.force_kappa1 && e == Estimator::mcla);
            r.rows.push_back(std::move(row));
        }
    }
    return r;
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return fmt::format("{:.17g}", x);
}

void write_study_csv(std::ostream& os, const std::vector<StudyRecord>& records) {
    os << "estimator,xi,tol,replicate,seed,N,M,h,kappa,estimate,std_error,reference,abs_error,work_units,"
          "model_evaluations,predicted_work,underflow_count,excluded_count,nonconverged_count,status\n";
    for (const StudyRecord& r : records) {
        const bool ok = r.status == "ok";
        std::optional<double> err;
        if (ok && r.reference) err = std::abs(r.estimate.value - *r.reference);
        os << to_string(r.estimator) << ',' << format_double(r.xi) << ',' << format_double(r.tol) << ','
           << r.replicate << ',' << r.seed << ',';
        if (ok) {
            os << r.setting.N << ',' << r.setting.M << ',' << mesh_text(r.setting) << ','
               << format_double(r.setting.kappa) << ',' << format_double(r.estimate.value) << ','
               << format_double(r.estimate.std_error) << ',';
        } else {
            os << ",,,,,,";
        }
        os << opt_double(r.reference) << ',' << opt_double(err) << ',';
        if (ok) {
            os << format_double(r.estimate.work_units) << ',' << r.estimate.model_evaluations << ','
               << format_double(r.predicted_work) << ',' << r.estimate.underflow_count << ','
               << r.estimate.excluded_count << ',' << r.estimate.nonconverged_count << ',';
        } else {
            os << ",,,,,,";
        }
        os << csv_field(r.status) << '\n';
    }
}

void write_coverage_csv(std::ostream& os, const std::vector<CoverageRow>& rows) {
    os << "estimator,tol,replicates,within_tol,coverage,target\n";
    for (const CoverageRow& r : rows)
        os << to_string(r.estimator) << ',' << format_double(r.tol) << ',' << r.replicates << ',' << r.within << ','
           << format_double(r.coverage) << ',' << format_double(r.target) << '\n';
}

void write_curve_csv(std::ostream& os, const std::vector<CurvePoint>& points) {
    os << "estimator,xi,tol,seed,N,M,h,kappa,estimate,std_error,half_width,reference,status\n";
    for (const CurvePoint& p : points) {
        os << to_string(p.estimator) << ',' << format_double(p.xi) << ',' << format_double(p.tol) << ',' << p.seed
           << ',';
        if (p.status == "ok") {
            os << p.setting.N << ',' << p.setting.M << ',' << mesh_text(p.setting) << ','
               << format_double(p.setting.kappa) << ',' << format_double(p.estimate.value) << ','
               << format_double(p.estimate.std_error) << ',' << format_double(p.half_width) << ',';
        } else {
            os << ",,,,,,,";
        }
        os << opt_double(p.reference) << ',' << csv_field(p.status) << '\n';
    }
}

void write_tune_csv(std::ostream& os, const TuneResult& result) {
    os << "estimator,tol,feasible,solver,N,M,h,kappa,predicted_work,relaxed_work,message\n";
    for (const TuneRow& r : result.rows) {
        const OptimalSetting& o = r.optimal;
        os << to_string(r.estimator) << ',' << format_double(r.tol) << ',' << (o.feasible ? "true" : "false") << ','
           << to_string(o.solver) << ',';
        if (o.feasible) {
            os << o.setting.N << ',' << o.setting.M << ',' << mesh_text(o.setting) << ','
               << format_double(o.setting.kappa) << ',' << format_double(o.predicted_work) << ','
               << format_double(o.relaxed_work) << ',';
        } else {
            os << ",,,,,,";
        }
        os << csv_field(o.message) << '\n';
    }
}

nlohmann::json to_json(const EigEstimate& e) {
    return {{"value", e.value},
            {"std_error", e.std_error},
            {"bias_budget", e.bias_budget},
            {"n_outer", e.n_outer},
            {"underflow_count", e.underflow_count},
            {"excluded_count", e.excluded_count},
            {"nonconverged_count", e.nonconverged_count},
            {"boundary_count", e.boundary_count},
            {"model_evaluations", e.model_evaluations},
            {"work_units", e.work_units}};
}

nlohmann::json to_json(const EstimatorSetting& s) {
    return {{"N", s.N}, {"M", s.M}, {"h", mesh_json(s)}, {"kappa", s.kappa}, {"tol", s.tol}, {"alpha", s.alpha}};
}

nlohmann::json to_json(const PilotConstants& c) {
    return {{"variant", to_string(c.variant)},
            {"C1", c.c1},
            {"C2", c.c2},
            {"C3", c.c3},
            {"C4", c.c4},
            {"eta", c.eta},
            {"gamma", c.gamma},
            {"meshed", c.meshed},
            {"C_la2", c.c_la2},
            {"C_la2_difference", c.c_la2_difference},
            {"C_la2_std_error", c.c_la2_std_error},
            {"repeats", c.repeats},
            {"outer_overhead", c.outer_overhead},
            {"pilot_N", c.pilot_n},
            {"pilot_M", c.pilot_m},
            {"pilot_seed", c.pilot_seed},
            {"pilot_h", c.pilot_h}};
}

nlohmann::json to_json(const OptimalSetting& o) {
    return {{"setting", to_json(o.setting)},
            {"predicted_work", o.predicted_work},
            {"relaxed_work", o.relaxed_work},
            {"feasible", o.feasible},
            {"bias_constraint_enforced", o.bias_constraint_enforced},
            {"solver", to_string(o.solver)},
            {"message", o.message}};
}

nlohmann::json config_json(const RunConfig& c) {
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [k, v] : c.model_params.values) params[k] = v;
    nlohmann::json prior = {{"kind", c.prior_kind}};
    if (c.prior_kind == "normal") {
        prior["mean"] = c.prior_mean;
        prior["variance"] = c.prior_variance;
    } else {
        prior["lower"] = c.prior_lower;
        prior["upper"] = c.prior_upper;
    }
    nlohmann::json noise = nlohmann::json::object();
    if (c.noise.sd_affine) {
        noise["sd_affine"] = *c.noise.sd_affine;
    } else {
        noise["variance"] = c.noise.variance;
    }
    nlohmann::json estimators = nlohmann::json::array();
    for (Estimator e : c.estimators) estimators.push_back(to_string(e));
    nlohmann::json j = {{"source", c.source},
                        {"model", {{"name", c.model_name}, {"parameters", params}}},
                        {"prior", prior},
                        {"noise", noise},
                        {"design", {{"xi", c.xi}}},
                        {"repeats", c.repeats},
                        {"estimators", estimators},
                        {"tol", c.tols},
                        {"alpha", c.alpha},
                        {"seed", c.seed},
                        {"replicates", c.replicates},
                        {"force_kappa1", c.force_kappa1},
                        {"pilot_n", c.pilot_n},
                        {"pilot_m", c.pilot_m}};
    if (c.model_name == "synthetic-mesh") j["model"]["base"] = c.model_params.base;
    if (c.has_grid) j["design"]["grid"] = {c.grid_lo, c.grid_hi, c.grid_n};
    return j;
}

nlohmann::json estimate_json(const RunConfig& config, const EstimateResult& r) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["command"] = "estimate";
    j["estimator"] = to_string(r.estimator);
    j["config"] = config_json(config);
    j["experiment"] = {{"model", r.spec.model->name()},
                       {"design", std::vector<double>(r.spec.design.data(), r.spec.design.data() + r.spec.design.size())},
                       {"repeats", r.spec.repeats},
                       {"noise_variance", std::vector<double>(r.spec.noise.variances().data(),
                                                              r.spec.noise.variances().data() + r.spec.q())}};
    j["setting"] = to_json(r.setting);
    j["estimate"] = to_json(r.estimate);
    j["optimal_setting"] = r.optimal ? to_json(*r.optimal) : nlohmann::json(nullptr);
    j["pilot_constants"] = r.pilot ? to_json(*r.pilot) : nlohmann::json(nullptr);
    j["reference"] = opt_json(r.reference);
    j["abs_error"] = r.reference ? nlohmann::json(std::abs(r.estimate.value - *r.reference)) : nlohmann::json(nullptr);
    j["provenance"] = {{"program", "boed"},
                       {"version", "1.0.0"},
                       {"root_seed", config.seed},
                       {"run_seed", r.seed},
                       {"pilot_seed", r.pilot ? nlohmann::json(r.pilot->pilot_seed) : nlohmann::json(nullptr)},
                       {"tuned", r.optimal.has_value()}};
    return j;
}

nlohmann::json slopes_json(const RunConfig& config, const std::vector<SlopeFit>& fits) {
    nlohmann::json arr = nlohmann::json::array();
    for (const SlopeFit& f : fits) {
        arr.push_back({{"estimator", to_string(f.estimator)},
                       {"points", f.points},
                       {"work_slope", opt_json(f.work_slope)},
                       {"predicted_work_slope", opt_json(f.predicted_slope)},
                       {"available", f.work_slope.has_value()}});
    }
    return {{"schema_version", 1}, {"command", "work-study"}, {"config", config_json(config)}, {"slopes", arr}};
}

nlohmann::json tune_json(const RunConfig& config, const TuneResult& r) {
    nlohmann::json pilots = nlohmann::json::array();
    for (const PilotConstants& c : r.pilots) pilots.push_back(to_json(c));
    nlohmann::json rows = nlohmann::json::array();
    for (const TuneRow& row : r.rows)
        rows.push_back({{"estimator", to_string(row.estimator)}, {"tol", row.tol}, {"optimal_setting", to_json(row.optimal)}});
    return {{"schema_version", 1},
            {"command", "tune"},
            {"config", config_json(config)},
            {"pilot_constants", pilots},
            {"settings", rows}};
}

std::vector<std::string> run_command(const std::string& command, const RunConfig& config) {
    namespace fs = std::filesystem;
    const fs::path dir(config.output_dir);
    fs::create_directories(dir);
    std::vector<std::string> written;
    const std::string started = utc_now();
    const auto t0 = Clock::now();
    nlohmann::json meta = {{"command", command}, {"started_at", started}};
    std::ostringstream csv;

    auto finish = [&](const std::string& stem) {
        meta["finished_at"] = utc_now();
        meta["wall_time_seconds"] = seconds_since(t0);
        write_file(dir / (stem + ".meta.json"), meta.dump(2) + "\n", written);
    };

    if (command == "estimate") {
        const EstimateResult r = run_estimate(config);
        write_file(dir / "estimate.json", estimate_json(config, r).dump(2) + "\n", written);
        finish("estimate");
    } else if (command == "consistency") {
        const auto records = run_consistency(config);
        write_study_csv(csv, records);
        write_file(dir / "consistency.csv", csv.str(), written);
        std::ostringstream sum;
        write_coverage_csv(sum, coverage_summary(records, config.alpha));
        write_file(dir / "consistency_summary.csv", sum.str(), written);
        nlohmann::json walls = nlohmann::json::array();
        for (const auto& r : records) walls.push_back(r.wall_time);
        meta["record_wall_times"] = walls;
        finish("consistency");
    } else if (command == "work-study") {
        const auto records = run_work_study(config);
        write_study_csv(csv, records);
        write_file(dir / "work_study.csv", csv.str(), written);
        const auto fits = fit_work_slopes(records);
        write_file(dir / "work_study_slopes.json", slopes_json(config, fits).dump(2) + "\n", written);
        nlohmann::json walls = nlohmann::json::array();
        for (const auto& r : records) walls.push_back(r.wall_time);
        meta["record_wall_times"] = walls;
        nlohmann::json wall_slopes = nlohmann::json::object();
        for (const auto& f : fits) wall_slopes[to_string(f.estimator)] = opt_json(f.wall_slope);
        meta["wall_time_slopes"] = wall_slopes;
        finish("work_study");
    } else if (command == "eig-curve") {
        const auto points = run_eig_curve(config);
        write_curve_csv(csv, points);
        write_file(dir / "eig_curve.csv", csv.str(), written);
        nlohmann::json walls = nlohmann::json::array();
        for (const auto& p : points) walls.push_back(p.wall_time);
        meta["record_wall_times"] = walls;
        finish("eig_curve");
    } else if (command == "tune") {
        const TuneResult r = run_tune(config);
        write_tune_csv(csv, r);
        write_file(dir / "tune.csv", csv.str(), written);
        write_file(dir / "tune.json", tune_json(config, r).dump(2) + "\n", written);
        finish("tune");
    } else {
        throw ConfigError("unknown command '" + command + "' (expected estimate, consistency, work-study, eig-curve, tune)");
    }
    return written;
}

}  // namespace boed
