#include "boed/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace boed {

namespace {

std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

bool parse_number(const std::string& s, double& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last && std::isfinite(out);
}

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"model", {"name", "base", "c_bias", "eta", "gamma", "h_min", "h_max"}},
        {"prior", {"kind", "mean", "variance", "lower", "upper"}},
        {"noise", {"variance", "sd_affine"}},
        {"design", {"xi", "grid"}},
        {"experiment", {"repeats"}},
        {"run",
         {"estimator", "tol", "alpha", "seed", "replicates", "jobs", "force_kappa1", "pilot_n", "pilot_m", "pilot_h",
          "N", "M", "h", "kappa"}},
        {"output", {"dir"}},
    };
    return keys;
}

}  // namespace

ConfigFile ConfigFile::parse(const std::string& text, const std::string& source) {
    ConfigFile cfg;
    cfg.source_ = source;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    int line_no = 0;
    auto error = [&](const std::string& msg) {
        throw ConfigError(source + ":" + std::to_string(line_no) + ": " + msg);
    };
    while (std::getline(in, raw)) {
        ++line_no;
        const auto cut = raw.find_first_of("#;");
        const std::string line = trim(cut == std::string::npos ? raw : raw.substr(0, cut));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') error("unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (!known_keys().count(section)) error("unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) error("expected 'key = value'");
        if (section.empty()) error("key outside any section");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) error("empty key");
        if (!known_keys().at(section).count(key)) error("unknown key '" + key + "' in [" + section + "]");
        if (value.empty()) error(section + "." + key + ": empty value");
        auto& entries = cfg.sections_[section];
        if (entries.count(key))
            error(section + "." + key + ": duplicate key (first set on line " +
                  std::to_string(entries[key].line) + ")");
        entries[key] = {value, line_no};
    }
    return cfg;
}

ConfigFile ConfigFile::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
}

const ConfigValue* ConfigFile::find(const std::string& section, const std::string& key) const {
    const auto s = sections_.find(section);
    if (s == sections_.end()) return nullptr;
    const auto k = s->second.find(key);
    return k == s->second.end() ? nullptr : &k->second;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
}

void ConfigFile::fail(const std::string& section, const std::string& key, const std::string& message) const {
    const ConfigValue* v = find(section, key);
    const std::string where = v ? source_ + ":" + std::to_string(v->line) : source_;
    throw ConfigError(where + ": " + section + "." + key + ": " + message);
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key) const {
    const ConfigValue* v = find(section, key);
    if (!v) fail(section, key, "required key is missing");
    return v->text;
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key,
                                   const std::string& fallback) const {
    const ConfigValue* v = find(section, key);
    return v ? v->text : fallback;
}

double ConfigFile::get_double(const std::string& section, const std::string& key) const {
    double x = 0.0;
    if (!parse_number(get_string(section, key), x)) fail(section, key, "expected a finite number");
    return x;
}

double ConfigFile::get_double(const std::string& section, const std::string& key, double fallback) const {
    return has(section, key) ? get_double(section, key) : fallback;
}

std::int64_t ConfigFile::get_int(const std::string& section, const std::string& key, std::int64_t fallback) const {
    if (!has(section, key)) return fallback;
    double x = 0.0;
    if (!parse_number(get_string(section, key), x) || x != std::floor(x) || std::abs(x) > 9.0e15)
        fail(section, key, "expected an integer");
    return static_cast<std::int64_t>(x);
}

std::uint64_t ConfigFile::get_u64(const std::string& section, const std::string& key, std::uint64_t fallback) const {
    if (!has(section, key)) return fallback;
    const std::string s = get_string(section, key);
    std::uint64_t x = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || ptr != s.data() + s.size()) fail(section, key, "expected an unsigned 64-bit integer");
    return x;
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string s = get_string(section, key);
    if (s == "true" || s == "yes" || s == "1" || s == "on") return true;
    if (s == "false" || s == "no" || s == "0" || s == "off") return false;
    fail(section, key, "expected true or false");
}

std::vector<double> ConfigFile::get_doubles(const std::string& section, const std::string& key) const {
    std::vector<double> out;
    for (const std::string& item : get_strings(section, key)) {
        double x = 0.0;
        if (!parse_number(item, x)) fail(section, key, "'" + item + "' is not a finite number");
        out.push_back(x);
    }
    return out;
}

std::vector<std::string> ConfigFile::get_strings(const std::string& section, const std::string& key) const {
    return split_list(get_string(section, key));
}

std::vector<double> RunConfig::design_grid() const {
    if (!has_grid) return xi;
    std::vector<double> g(static_cast<std::size_t>(grid_n));
    for (int i = 0; i < grid_n; ++i)
        g[i] = grid_n == 1 ? grid_lo : grid_lo + (grid_hi - grid_lo) * i / (grid_n - 1);
    return g;
}

ExperimentSpec RunConfig::spec_at(const std::vector<double>& design) const {
    ExperimentSpec s;
    s.model = make_model(model_name, model_params);
    const int d = s.model->parameter_dim();
    if (prior_kind == "normal") {
        if (static_cast<int>(prior_mean.size()) != d || static_cast<int>(prior_variance.size()) != d)
            throw ConfigError(source + ": prior.mean and prior.variance need " + std::to_string(d) + " entries");
        Vector var = Eigen::Map<const Vector>(prior_variance.data(), d);
        s.prior = Prior::normal(Eigen::Map<const Vector>(prior_mean.data(), d), var.asDiagonal());
    } else {
        if (static_cast<int>(prior_lower.size()) != d || static_cast<int>(prior_upper.size()) != d)
            throw ConfigError(source + ": prior.lower and prior.upper need " + std::to_string(d) + " entries");
        s.prior = Prior::uniform(Eigen::Map<const Vector>(prior_lower.data(), d),
                                 Eigen::Map<const Vector>(prior_upper.data(), d));
    }
    s.design = Eigen::Map<const Vector>(design.data(), static_cast<Eigen::Index>(design.size()));
    if (noise.sd_affine) {
        if (design.size() != 1) throw ConfigError(source + ": noise.sd_affine needs a scalar design");
        const auto& [a, b, c] = *noise.sd_affine;
        const double sd = a + b * (design[0] - c);
        if (!(sd > 0.0))
            throw ConfigError(source + ": noise.sd_affine gives a non-positive standard deviation at xi = " +
                              std::to_string(design[0]));
        s.noise = NoiseModel(Vector::Constant(s.model->response_dim(), sd * sd));
    } else {
        s.noise = NoiseModel(Eigen::Map<const Vector>(noise.variance.data(), static_cast<Eigen::Index>(noise.variance.size())));
    }
    s.repeats = repeats;
    s.validate();
    return s;
}

RunConfig parse_run_config(const ConfigFile& f) {
    RunConfig c;
    c.source = f.source();

    c.model_name = f.get_string("model", "name");
    if (!model_registered(c.model_name)) f.fail("model", "name", "unknown model '" + c.model_name + "'");
    c.model_params.base = f.get_string("model", "base", "nonlinear-scalar");
    if (!model_registered(c.model_params.base) || c.model_params.base == "synthetic-mesh")
        f.fail("model", "base", "unknown base model '" + c.model_params.base + "'");
    for (const char* k : {"c_bias", "eta", "gamma", "h_min", "h_max"})
        if (f.has("model", k)) c.model_params.values[k] = f.get_double("model", k);
    if (c.model_params.get("eta", 1.0) <= 0.0) f.fail("model", "eta", "must be positive");
    if (c.model_params.get("gamma", 1.0) < 0.0) f.fail("model", "gamma", "must be non-negative");
    if (!(c.model_params.get("h_min", 1e-6) > 0.0 && c.model_params.get("h_min", 1e-6) < c.model_params.get("h_max", 1.0)))
        f.fail("model", "h_min", "need 0 < h_min < h_max");

    c.prior_kind = f.get_string("prior", "kind");
    if (c.prior_kind == "normal") {
        c.prior_mean = f.get_doubles("prior", "mean");
        c.prior_variance = f.get_doubles("prior", "variance");
        for (double v : c.prior_variance)
            if (!(v > 0.0)) f.fail("prior", "variance", "variances must be positive");
    } else if (c.prior_kind == "uniform") {
        c.prior_lower = f.get_doubles("prior", "lower");
        c.prior_upper = f.get_doubles("prior", "upper");
        if (c.prior_lower.size() != c.prior_upper.size()) f.fail("prior", "upper", "length differs from prior.lower");
        for (std::size_t i = 0; i < c.prior_lower.size(); ++i)
            if (!(c.prior_lower[i] < c.prior_upper[i])) f.fail("prior", "upper", "bounds must satisfy lower < upper");
    } else {
        f.fail("prior", "kind", "expected 'normal' or 'uniform'");
    }

    const bool has_var = f.has("noise", "variance"), has_aff = f.has("noise", "sd_affine");
    if (has_var == has_aff) f.fail("noise", "variance", "give exactly one of noise.variance or noise.sd_affine");
    if (has_var) {
        c.noise.variance = f.get_doubles("noise", "variance");
        for (double v : c.noise.variance)
            if (!(v > 0.0)) f.fail("noise", "variance", "variances must be positive");
    } else {
        const auto v = f.get_doubles("noise", "sd_affine");
        if (v.size() != 3) f.fail("noise", "sd_affine", "expected three numbers 'a b c' for sd = a + b (xi - c)");
        c.noise.sd_affine = std::array<double, 3>{v[0], v[1], v[2]};
    }

    if (f.has("design", "xi")) c.xi = f.get_doubles("design", "xi");
    if (f.has("design", "grid")) {
        const auto g = f.get_doubles("design", "grid");
        if (g.size() != 3 || g[2] != std::floor(g[2]) || g[2] < 1)
            f.fail("design", "grid", "expected 'lo hi n' with integer n >= 1");
        if (!(g[0] <= g[1])) f.fail("design", "grid", "grid bounds must be ordered (lo <= hi)");
        c.has_grid = true;
        c.grid_lo = g[0];
        c.grid_hi = g[1];
        c.grid_n = static_cast<int>(g[2]);
        if (c.xi.empty()) c.xi = {c.grid_lo};
    }
    if (c.xi.empty()) f.fail("design", "xi", "required: design.xi or design.grid");

    c.repeats = static_cast<int>(f.get_int("experiment", "repeats", 1));
    if (c.repeats < 1) f.fail("experiment", "repeats", "must be >= 1");

    for (const std::string& e : f.has("run", "estimator") ? f.get_strings("run", "estimator")
                                                          : std::vector<std::string>{"dlmcis"}) {
        try {
            c.estimators.push_back(parse_estimator(e));
        } catch (const ConfigError& err) {
            f.fail("run", "estimator", err.what());
        }
    }
    c.tols = f.has("run", "tol") ? f.get_doubles("run", "tol") : std::vector<double>{0.1};
    if (c.tols.empty()) f.fail("run", "tol", "empty list");
    for (double t : c.tols)
        if (!(t > 0.0)) f.fail("run", "tol", "tolerances must be strictly positive");
    c.alpha = f.get_double("run", "alpha", 0.05);
    if (!(c.alpha > 0.0 && c.alpha < 1.0)) f.fail("run", "alpha", "must lie in (0, 1)");
    c.seed = f.get_u64("run", "seed", 1);
    c.replicates = static_cast<int>(f.get_int("run", "replicates", 1));
    if (c.replicates < 0) f.fail("run", "replicates", "must be >= 0");
    c.jobs = static_cast<int>(f.get_int("run", "jobs", 1));
    if (c.jobs < 1) f.fail("run", "jobs", "must be >= 1");
    c.force_kappa1 = f.get_bool("run", "force_kappa1", false);
    c.pilot_n = f.get_int("run", "pilot_n", 100);
    c.pilot_m = f.get_int("run", "pilot_m", 100);
    if (c.pilot_n < 2) f.fail("run", "pilot_n", "must be >= 2");
    if (c.pilot_m < 2) f.fail("run", "pilot_m", "must be >= 2");
    c.pilot_h = f.get_double("run", "pilot_h", 0.0);

    if (f.has("run", "N")) {
        c.fixed_N = f.get_int("run", "N", 1);
        if (*c.fixed_N < 1) f.fail("run", "N", "must be >= 1");
        c.fixed_M = f.get_int("run", "M", 1);
        if (*c.fixed_M < 1) f.fail("run", "M", "must be >= 1");
        if (f.has("run", "h")) c.fixed_h = f.get_double("run", "h");
        c.fixed_kappa = f.get_double("run", "kappa", 0.5);
        if (!(*c.fixed_kappa > 0.0 && *c.fixed_kappa <= 1.0)) f.fail("run", "kappa", "must lie in (0, 1]");
    } else {
        for (const char* k : {"M", "h", "kappa"})
            if (f.has("run", k)) f.fail("run", k, "explicit setting needs run.N as well");
    }

    c.output_dir = f.get_string("output", "dir", "results");

    // Fail early on inconsistent combinations.
    for (double x : c.design_grid()) c.spec_at(c.xi.size() == 1 ? std::vector<double>{x} : c.xi);
    return c;
}

RunConfig load_run_config(const std::string& path) {
    return parse_run_config(ConfigFile::load(path));
}

}  // namespace boed
