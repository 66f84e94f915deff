#include "boed/estimators.hpp"

#include "boed/parallel.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <limits>

namespace boed {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
const double kLogMinNormal = std::log(DBL_MIN);
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct TermSummary {
    double mean = 0.0;
    double std_error = 0.0;
    std::int64_t count = 0;
};

// Mean and standard error over the included terms, summed in index order.
TermSummary summarize(const std::vector<double>& terms, const std::vector<char>& keep) {
    TermSummary s;
    double sum = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i)
        if (keep[i]) {
            sum += terms[i];
            ++s.count;
        }
    if (s.count == 0) throw NumericalError("estimator: every outer term was excluded");
    s.mean = sum / static_cast<double>(s.count);
    if (s.count > 1) {
        double ss = 0.0;
        for (std::size_t i = 0; i < terms.size(); ++i)
            if (keep[i]) ss += (terms[i] - s.mean) * (terms[i] - s.mean);
        s.std_error = std::sqrt(ss / static_cast<double>(s.count - 1) / static_cast<double>(s.count));
    }
    return s;
}

struct Workers {
    std::vector<CountingForward> forwards;
    std::vector<detail::Workspace> spaces;

    Workers(const ExperimentSpec& spec, int jobs) {
        jobs = std::max(1, jobs);
        forwards.reserve(jobs);
        for (int w = 0; w < jobs; ++w) forwards.emplace_back(*spec.model, spec.design, spec.mesh);
        spaces.resize(jobs);
    }
    std::int64_t calls() const {
        std::int64_t c = 0;
        for (const auto& f : forwards) c += f.calls();
        return c;
    }
};

ExperimentSpec with_mesh(const ExperimentSpec& spec, Mesh mesh) {
    ExperimentSpec s = spec;
    s.mesh = mesh;
    s.validate();
    return s;
}

EigEstimate nested_estimate(const ExperimentSpec& spec_in, const EstimatorSetting& setting, std::uint64_t seed,
                            const EstimatorOptions& options, detail::InnerSampler sampler) {
    setting.validate();
    const ExperimentSpec spec = with_mesh(spec_in, setting.mesh);
    const std::int64_t N = setting.N;
    Workers workers(spec, options.jobs);
    std::vector<double> terms(N, 0.0);
    std::vector<char> keep(N, 1), under(N, 0), nonconv(N, 0), boundary(N, 0);
    parallel_for(N, options.jobs, [&](int w, std::int64_t n) {
        const detail::NestedOuter r = detail::nested_outer(spec, n, setting.M, seed, sampler, options,
                                                           workers.forwards[w], workers.spaces[w]);
        terms[n] = r.log_ratio;
        keep[n] = r.empty ? 0 : 1;
        under[n] = r.underflow ? 1 : 0;
        nonconv[n] = r.nonconverged ? 1 : 0;
        boundary[n] = r.boundary ? 1 : 0;
    });
    EigEstimate est;
    const TermSummary s = summarize(terms, keep);
    est.value = s.mean;
    est.std_error = s.std_error;
    est.n_outer = N;
    est.bias_budget = (1.0 - setting.kappa) * setting.tol;
    est.excluded_count = N - s.count;
    for (std::int64_t n = 0; n < N; ++n) {
        est.underflow_count += under[n];
        est.nonconverged_count += nonconv[n];
        est.boundary_count += boundary[n];
    }
    est.model_evaluations = workers.calls();
    est.work_units = static_cast<double>(est.model_evaluations) * workers.forwards.front().work_per_call();
    if (options.keep_terms) est.terms = std::move(terms);
    return est;
}

}  // namespace

void EstimatorSetting::validate() const {
    if (N < 1) throw std::invalid_argument("setting: N must be >= 1");
    if (M < 1) throw std::invalid_argument("setting: M must be >= 1");
    if (!(kappa > 0.0 && kappa <= 1.0)) throw std::invalid_argument("setting: kappa must lie in (0, 1]");
    if (!(tol > 0.0)) throw std::invalid_argument("setting: TOL must be positive");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("setting: alpha must lie in (0, 1)");
}

double EstimatorSetting::confidence() const {
    return confidence_multiplier(alpha);
}

double confidence_multiplier(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
    return boost::math::quantile(boost::math::normal_distribution<double>(), 1.0 - 0.5 * alpha);
}

double log_mean_exp(std::span<const double> v) {
    if (v.empty()) throw std::invalid_argument("log_mean_exp: empty input");
    const double mx = *std::max_element(v.begin(), v.end());
    if (mx == kNegInf) return kNegInf;
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double x : v) s += std::exp(x - mx);
    return mx + std::log(s / static_cast<double>(v.size()));
}

double kl_gaussian_1d(double mean_prior, double var_prior, double mean_post, double var_post) {
    if (!(var_prior > 0.0 && var_post > 0.0)) throw std::invalid_argument("kl_gaussian_1d: variances must be positive");
    const double dm = mean_post - mean_prior;
    return 0.5 * std::log(var_prior / var_post) + 0.5 * (var_post / var_prior - 1.0 + dm * dm / var_prior);
}

const char* to_string(Estimator e) {
    switch (e) {
        case Estimator::dlmc: return "dlmc";
        case Estimator::mcla: return "mcla";
        case Estimator::dlmcis: return "dlmcis";
    }
    return "?";
}

Estimator parse_estimator(const std::string& name) {
    if (name == "dlmc") return Estimator::dlmc;
    if (name == "mcla") return Estimator::mcla;
    if (name == "dlmcis") return Estimator::dlmcis;
    throw ConfigError("unknown estimator '" + name + "' (expected dlmc, mcla or dlmcis)");
}

namespace detail {

void draw_outer(const ExperimentSpec& spec, RandomSource& rng, CountingForward& forward, Vector& theta, Vector& g,
                Matrix& Y) {
    spec.prior.sample(rng, theta);
    g.resize(spec.q());
    forward(theta, g);
    simulate_into(spec, g, rng, Y);
}

NestedOuter nested_outer(const ExperimentSpec& spec, std::int64_t n, std::int64_t M, std::uint64_t seed,
                         InnerSampler sampler, const EstimatorOptions& options, CountingForward& forward,
                         Workspace& ws) {
    NestedOuter out;
    const std::int64_t calls0 = forward.calls();
    RandomSource rng(seed, static_cast<std::uint64_t>(n), Stream::outer);
    draw_outer(spec, rng, forward, ws.theta, ws.g, ws.Y);
    const SufficientStats stats = sufficient_stats(spec.noise, ws.Y);
    const double ll_outer = log_likelihood_from_stats(spec.noise, stats, ws.g);

    const MultivariateNormal* proposal = nullptr;
    LaplaceFit fit;
    if (sampler == InnerSampler::laplace) {
        if (options.prior_as_proposal) {
            if (spec.prior.is_uniform()) throw std::invalid_argument("prior_as_proposal needs a normal prior");
            proposal = &spec.prior.gaussian();
        } else {
            fit = find_map(spec, stats, forward, rng, options.laplace);
            out.nonconverged = !fit.converged;
            out.boundary = fit.on_boundary;
            proposal = &fit.proposal;
        }
    }
    out.overhead_evals = forward.calls() - calls0;

    RandomSource& inner = rng;
    ws.log_w.resize(static_cast<std::size_t>(M));
    ws.g_inner.resize(spec.q());
    for (std::int64_t m = 0; m < M; ++m) {
        if (proposal) {
            proposal->sample(inner, ws.theta_inner);
            const double lp = spec.prior.log_pdf(ws.theta_inner);
            if (lp == kNegInf) {
                ws.log_w[m] = kNegInf;
                continue;
            }
            forward(ws.theta_inner, ws.g_inner);
            const double lq = proposal->log_pdf(ws.theta_inner);
            ws.log_w[m] = log_likelihood_from_stats(spec.noise, stats, ws.g_inner) + (lp - lq);
        } else {
            spec.prior.sample(inner, ws.theta_inner);
            forward(ws.theta_inner, ws.g_inner);
            ws.log_w[m] = log_likelihood_from_stats(spec.noise, stats, ws.g_inner);
        }
    }

    const double mx = *std::max_element(ws.log_w.begin(), ws.log_w.end());
    out.underflow = mx < kLogMinNormal;
    if (mx == kNegInf) {
        out.empty = true;
        return out;
    }
    // Shifted weights are kept in log_w for the ratio variance.
    double sum = 0.0;
    for (double& lw : ws.log_w) sum += lw = std::exp(lw - mx);
    const double mean = sum / static_cast<double>(M);
    out.log_ratio = ll_outer - (mx + std::log(mean));
    if (M > 1) {
        double ss = 0.0;
        for (double e : ws.log_w) {
            const double r = e / mean - 1.0;
            ss += r * r;
        }
        out.ratio_variance = ss / static_cast<double>(M - 1);
    }
    return out;
}

LaplaceOuter laplace_outer(const ExperimentSpec& spec, std::int64_t n, std::uint64_t seed,
                           const EstimatorOptions& options, CountingForward& forward, Vector& theta) {
    RandomSource rng(seed, static_cast<std::uint64_t>(n), Stream::outer);
    spec.prior.sample(rng, theta);
    const Matrix J = jacobian(spec, theta, options.laplace.scheme, forward);
    LaplaceOuter out;
    double log_det = 0.0;
    if (!laplace_log_det(spec, theta, J, log_det)) {
        out.singular = true;
        return out;
    }
    const double d = spec.d();
    out.term = -0.5 * (d * kLog2Pi + log_det) - 0.5 * d - spec.prior.log_pdf(theta);
    return out;
}

}  // namespace detail

EigEstimate dlmc(const ExperimentSpec& spec, const EstimatorSetting& setting, std::uint64_t seed,
                 const EstimatorOptions& options) {
    return nested_estimate(spec, setting, seed, options, detail::InnerSampler::prior);
}

EigEstimate dlmcis(const ExperimentSpec& spec, const EstimatorSetting& setting, std::uint64_t seed,
                   const EstimatorOptions& options) {
    return nested_estimate(spec, setting, seed, options, detail::InnerSampler::laplace);
}

EigEstimate mcla(const ExperimentSpec& spec_in, const EstimatorSetting& setting, std::uint64_t seed,
                 const EstimatorOptions& options) {
    setting.validate();
    const ExperimentSpec spec = with_mesh(spec_in, setting.mesh);
    const std::int64_t N = setting.N;
    Workers workers(spec, options.jobs);
    std::vector<double> terms(N, 0.0);
    std::vector<char> keep(N, 1);
    parallel_for(N, options.jobs, [&](int w, std::int64_t n) {
        const detail::LaplaceOuter r =
            detail::laplace_outer(spec, n, seed, options, workers.forwards[w], workers.spaces[w].theta);
        terms[n] = r.term;
        keep[n] = r.singular ? 0 : 1;
    });
    EigEstimate est;
    const TermSummary s = summarize(terms, keep);
    est.value = s.mean;
    est.std_error = s.std_error;
    est.n_outer = N;
    est.bias_budget = (1.0 - setting.kappa) * setting.tol;
    est.excluded_count = N - s.count;
    est.model_evaluations = workers.calls();
    est.work_units = static_cast<double>(est.model_evaluations) * workers.forwards.front().work_per_call();
    if (options.keep_terms) est.terms = std::move(terms);
    return est;
}

EigEstimate run_estimator(Estimator which, const ExperimentSpec& spec, const EstimatorSetting& setting,
                          std::uint64_t seed, const EstimatorOptions& options) {
    switch (which) {
        case Estimator::dlmc: return dlmc(spec, setting, seed, options);
        case Estimator::mcla: return mcla(spec, setting, seed, options);
        case Estimator::dlmcis: return dlmcis(spec, setting, seed, options);
    }
    throw std::logic_error("unknown estimator");
}

}  // namespace boed
