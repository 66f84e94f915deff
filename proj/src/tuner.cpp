#include "boed/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace boed {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Moments {
    double mean = 0.0;
    double var = 0.0;
    std::int64_t n = 0;
};

Moments moments(const std::vector<double>& v) {
    Moments m;
    m.n = static_cast<std::int64_t>(v.size());
    if (m.n == 0) return m;
    double s = 0.0;
    for (double x : v) s += x;
    m.mean = s / m.n;
    if (m.n > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - m.mean) * (x - m.mean);
        m.var = ss / (m.n - 1);
    }
    return m;
}

PilotConstants base_constants(Estimator variant, const ExperimentSpec& spec, std::int64_t n, std::int64_t m,
                              std::uint64_t seed, const PilotOptions& options) {
    PilotConstants c;
    c.variant = variant;
    c.meshed = spec.model->has_mesh();
    c.eta = spec.model->convergence_rate();
    c.gamma = spec.model->work_exponent();
    c.mesh_min = spec.model->mesh_min();
    c.mesh_max = spec.model->mesh_max();
    c.repeats = spec.repeats;
    c.pilot_n = n;
    c.pilot_m = m;
    c.pilot_seed = seed;
    if (c.meshed) c.pilot_h = options.pilot_h > 0.0 ? options.pilot_h : 0.25 * c.mesh_max;
    return c;
}

ExperimentSpec at_mesh(const ExperimentSpec& spec, double h) {
    ExperimentSpec s = spec;
    s.mesh = h > 0.0 ? Mesh::at(h) : Mesh::exact();
    return s;
}

struct NestedPilot {
    double mean_log_ratio = 0.0;
    double c1 = 0.0, c2 = 0.0, c4 = 0.0;
    double overhead = 0.0;
};

NestedPilot nested_pilot(const ExperimentSpec& spec, std::int64_t N, std::int64_t M, std::uint64_t seed,
                         detail::InnerSampler sampler, const EstimatorOptions& options) {
    CountingForward forward(*spec.model, spec.design, spec.mesh);
    detail::Workspace ws;
    std::vector<double> D, V;
    double overhead = 0.0;
    for (std::int64_t n = 0; n < N; ++n) {
        const detail::NestedOuter r = detail::nested_outer(spec, n, M, seed, sampler, options, forward, ws);
        overhead += static_cast<double>(r.overhead_evals);
        if (r.empty) continue;
        D.push_back(r.log_ratio);
        V.push_back(r.ratio_variance);
    }
    if (D.size() < 2) throw DegeneratePilotError("pilot: fewer than two usable outer samples; enlarge the pilot");
    const Moments md = moments(D);
    const Moments mv = moments(V);
    double dv = 0.0;
    for (std::size_t i = 0; i < D.size(); ++i) dv += D[i] * V[i];
    dv /= static_cast<double>(D.size());
    NestedPilot p;
    p.mean_log_ratio = md.mean;
    p.c1 = md.var;
    p.c4 = 0.5 * mv.mean;
    p.c2 = std::max(0.0, (1.0 + md.mean) * mv.mean - dv);
    p.overhead = overhead / static_cast<double>(N);
    return p;
}

double richardson_c3(double i_h, double i_h2, double h, double eta) {
    return std::abs(i_h - i_h2) / (std::pow(h, eta) * (1.0 - std::pow(2.0, -eta)));
}

PilotConstants nested_constants(Estimator variant, const ExperimentSpec& spec, std::int64_t N, std::int64_t M,
                                std::uint64_t seed, const PilotOptions& options) {
    if (N < 2 || M < 2) throw std::invalid_argument("pilot: N and M must be >= 2");
    PilotConstants c = base_constants(variant, spec, N, M, seed, options);
    const auto sampler = variant == Estimator::dlmc ? detail::InnerSampler::prior : detail::InnerSampler::laplace;
    const NestedPilot p = nested_pilot(at_mesh(spec, c.pilot_h), N, M, seed, sampler, options.estimator);
    if (!(p.c1 > 0.0))
        throw DegeneratePilotError("pilot: zero variance of the log-likelihood ratio (uninformative experiment?); "
                                   "try a larger pilot");
    c.c1 = p.c1;
    c.c2 = p.c2;
    c.c4 = p.c4;
    c.outer_overhead = p.overhead;
    if (c.meshed) {
        const NestedPilot fine = nested_pilot(at_mesh(spec, 0.5 * c.pilot_h), N, M, seed, sampler, options.estimator);
        c.c3 = richardson_c3(p.mean_log_ratio, fine.mean_log_ratio, c.pilot_h, c.eta);
    }
    return c;
}

// Mean MCLA term over the pilot with common random numbers.
double mcla_pilot_mean(const ExperimentSpec& spec, std::int64_t N, std::uint64_t seed, const EstimatorOptions& opt,
                       std::vector<double>* terms, std::vector<char>* keep) {
    CountingForward forward(*spec.model, spec.design, spec.mesh);
    Vector theta;
    double s = 0.0;
    std::int64_t k = 0;
    for (std::int64_t n = 0; n < N; ++n) {
        const detail::LaplaceOuter r = detail::laplace_outer(spec, n, seed, opt, forward, theta);
        if (terms) terms->push_back(r.term);
        if (keep) keep->push_back(r.singular ? 0 : 1);
        if (r.singular) continue;
        s += r.term;
        ++k;
    }
    if (k < 2) throw DegeneratePilotError("mcla pilot: fewer than two usable outer samples");
    return s / static_cast<double>(k);
}

// Per-dataset KL divergence E_post[log p(Y|theta)] - log p(Y), by importance
// sampling from the Laplace fit with L draws.
double dataset_kl(const ExperimentSpec& spec, std::int64_t n, std::uint64_t seed, std::int64_t L,
                  const EstimatorOptions& opt, CountingForward& forward, detail::Workspace& ws) {
    RandomSource inner(seed, static_cast<std::uint64_t>(n), Stream::outer);
    detail::draw_outer(spec, inner, forward, ws.theta, ws.g, ws.Y);
    const SufficientStats stats = sufficient_stats(spec.noise, ws.Y);
    const LaplaceFit fit = find_map(spec, stats, forward, inner, opt.laplace);
    std::vector<double> log_w(static_cast<std::size_t>(L)), ll(static_cast<std::size_t>(L), 0.0);
    ws.g_inner.resize(spec.q());
    for (std::int64_t m = 0; m < L; ++m) {
        fit.proposal.sample(inner, ws.theta_inner);
        const double lp = spec.prior.log_pdf(ws.theta_inner);
        if (lp == -kInf) {
            log_w[m] = -kInf;
            continue;
        }
        forward(ws.theta_inner, ws.g_inner);
        ll[m] = log_likelihood_from_stats(spec.noise, stats, ws.g_inner);
        log_w[m] = ll[m] + (lp - fit.proposal.log_pdf(ws.theta_inner));
    }
    const double lme = log_mean_exp(log_w);
    const double mx = *std::max_element(log_w.begin(), log_w.end());
    double wsum = 0.0, wll = 0.0;
    for (std::int64_t m = 0; m < L; ++m) {
        if (log_w[m] == -kInf) continue;
        const double w = std::exp(log_w[m] - mx);
        wsum += w;
        wll += w * ll[m];
    }
    return wll / wsum - lme;
}

double solve_kappa(double c1, double c2, double c4, double tol, double g) {
    if (!(c4 > 0.0)) return 1.0 / (1.0 + g);
    const double beta = c2 * tol / (c1 * c4);
    const double a = 2.0 * beta * (1.0 + g) * (1.0 + g);
    const double b = -(4.0 * beta * (1.0 + g) + 2.0 * (1.0 + g) + 1.0);
    const double c = 2.0 * beta + 2.0;
    if (a == 0.0) return c / -b;
    // Smaller root, written to avoid cancellation.
    return 2.0 * c / (-b + std::sqrt(b * b - 4.0 * a * c));
}

double mesh_share(const PilotConstants& c) {
    return (c.meshed && c.c3 > 0.0 && c.gamma > 0.0) ? c.gamma / (2.0 * c.eta) : 0.0;
}

// Coarsest mesh whose bias fits `budget`; the model's coarsest mesh when the
// constant is zero. Returns 0 when even the finest mesh is too biased.
double mesh_for_budget(const PilotConstants& c, double budget) {
    if (!(c.c3 > 0.0)) return c.mesh_max;
    if (!(budget > 0.0)) return 0.0;
    const double h = std::pow(budget / c.c3, 1.0 / c.eta);
    if (h < c.mesh_min) return 0.0;
    return std::min(h, c.mesh_max);
}

OptimalSetting finish(const PilotConstants& c, double N, double M, double h, double kappa, double tol, double alpha,
                      Solver solver) {
    OptimalSetting out;
    out.solver = solver;
    out.setting.N = static_cast<std::int64_t>(std::max(1.0, std::ceil(N)));
    out.setting.M = static_cast<std::int64_t>(std::max(1.0, std::ceil(M)));
    out.setting.mesh = c.meshed ? Mesh::at(h) : Mesh::exact();
    out.setting.kappa = kappa;
    out.setting.tol = tol;
    out.setting.alpha = alpha;
    const WorkModel w = work_model_of(c);
    out.relaxed_work = relaxed_objective(w, N, std::max(M, 0.0), c.meshed ? h : 0.0);
    out.predicted_work = predicted_work(w, out.setting);
    out.feasible = true;
    return out;
}

OptimalSetting fallback_for(const PilotConstants& c, double tol, double alpha, const std::string& why) {
    OptimalSetting out = numeric_fallback(work_model_of(c), constraints_of(c), tol, alpha);
    out.message = why + (out.feasible ? "; numeric fallback used" : "; numeric fallback found no feasible setting");
    return out;
}

OptimalSetting closed_nested(const PilotConstants& c, double tol, double alpha) {
    if (!(tol > 0.0)) throw std::invalid_argument("TOL must be positive");
    if (!(c.c1 > 0.0)) throw DegeneratePilotError("tuner: C1 must be positive");
    const double ca = confidence_multiplier(alpha);
    const double g = mesh_share(c);
    const double kappa = solve_kappa(c.c1, c.c2, c.c4, tol, g);
    if (!(kappa > 0.0 && kappa <= 1.0)) return fallback_for(c, tol, alpha, "no kappa root in (0, 1)");
    const double v = 1.0 - (1.0 + g) * kappa;
    const double M = c.c4 > 0.0 ? c.c4 / (v * tol) : 1.0;
    const double N = std::pow(ca / (kappa * tol), 2) * (c.c1 + c.c2 / M);
    double h = 0.0;
    if (c.meshed) {
        h = g > 0.0 ? mesh_for_budget(c, g * kappa * tol) : mesh_for_budget(c, v * tol);
        if (c.c3 > 0.0 && c.gamma == 0.0) h = c.mesh_min;
        if (h <= 0.0) return fallback_for(c, tol, alpha, "mesh below the model's finest mesh");
    }
    OptimalSetting out = finish(c, N, M, h, kappa, tol, alpha, Solver::closed_form);
    if (!satisfies_constraints(constraints_of(c), out.setting))
        return fallback_for(c, tol, alpha, "closed form violates its constraints");
    return out;
}

}  // namespace

const char* to_string(Solver s) {
    switch (s) {
        case Solver::closed_form: return "closed_form";
        case Solver::numeric_fallback: return "numeric_fallback";
        case Solver::forced_kappa1: return "forced_kappa1";
    }
    return "?";
}

PilotConstants estimate_constants_dlmc(const ExperimentSpec& spec, std::int64_t pilot_n, std::int64_t pilot_m,
                                       std::uint64_t seed, const PilotOptions& options) {
    return nested_constants(Estimator::dlmc, spec, pilot_n, pilot_m, seed, options);
}

PilotConstants estimate_constants_dlmcis(const ExperimentSpec& spec, std::int64_t pilot_n, std::int64_t pilot_m,
                                         std::uint64_t seed, const PilotOptions& options) {
    return nested_constants(Estimator::dlmcis, spec, pilot_n, pilot_m, seed, options);
}

PilotConstants estimate_constants_mcla(const ExperimentSpec& spec, std::int64_t pilot_n, std::uint64_t seed,
                                       const PilotOptions& options) {
    if (pilot_n < 2) throw std::invalid_argument("mcla pilot: N must be >= 2 (standard error undefined for N = 1)");
    PilotConstants c = base_constants(Estimator::mcla, spec, pilot_n, options.laplace_reference_inner, seed, options);
    const ExperimentSpec s = at_mesh(spec, c.pilot_h);
    const EstimatorOptions& opt = options.estimator;

    std::vector<double> terms;
    std::vector<char> keep;
    mcla_pilot_mean(s, pilot_n, seed, opt, &terms, &keep);

    CountingForward forward(*s.model, s.design, s.mesh);
    detail::Workspace ws;
    std::vector<double> f, diff;
    for (std::int64_t n = 0; n < pilot_n; ++n) {
        if (!keep[n]) continue;
        f.push_back(terms[n]);
        diff.push_back(terms[n] - dataset_kl(s, n, seed, options.laplace_reference_inner, opt, forward, ws));
    }
    const Moments mf = moments(f);
    const Moments md = moments(diff);
    if (!(mf.var > 0.0)) throw DegeneratePilotError("mcla pilot: zero variance of the Laplace terms; try a larger pilot");
    c.c1 = mf.var;
    c.c_la2_difference = md.mean;
    c.c_la2_std_error = std::sqrt(md.var / static_cast<double>(md.n));
    c.c_la2 = spec.repeats * std::max(0.0, std::abs(md.mean) - 2.0 * c.c_la2_std_error);
    c.outer_overhead = opt.laplace.scheme.evaluations(spec.d());
    if (c.meshed) {
        const double coarse = mcla_pilot_mean(s, pilot_n, seed, opt, nullptr, nullptr);
        const double fine = mcla_pilot_mean(at_mesh(spec, 0.5 * c.pilot_h), pilot_n, seed, opt, nullptr, nullptr);
        c.c3 = richardson_c3(coarse, fine, c.pilot_h, c.eta);
    }
    return c;
}

PilotConstants estimate_constants(Estimator which, const ExperimentSpec& spec, std::uint64_t seed,
                                  const PilotOptions& options) {
    switch (which) {
        case Estimator::dlmc: return estimate_constants_dlmc(spec, options.n, options.m, seed, options);
        case Estimator::dlmcis: return estimate_constants_dlmcis(spec, options.n, options.m, seed, options);
        case Estimator::mcla: return estimate_constants_mcla(spec, options.n, seed, options);
    }
    throw std::logic_error("unknown estimator");
}

WorkModel work_model_of(const PilotConstants& c) {
    WorkModel w;
    w.nested = c.variant != Estimator::mcla;
    w.gamma = c.meshed ? c.gamma : 0.0;
    w.outer_overhead = c.outer_overhead;
    return w;
}

ConstraintSet constraints_of(const PilotConstants& c) {
    ConstraintSet s;
    s.c1 = c.c1;
    s.c2 = c.c2;
    s.c3 = c.meshed ? c.c3 : 0.0;
    s.c4 = c.c4;
    s.eta = c.eta;
    s.bias_floor = c.variant == Estimator::mcla ? c.c_la2 / c.repeats : 0.0;
    s.meshed = c.meshed;
    s.mesh_min = c.mesh_min;
    s.mesh_max = c.mesh_max;
    return s;
}

double relaxed_objective(const WorkModel& w, double N, double M, double h) {
    const double per_eval = (h > 0.0 && w.gamma > 0.0) ? std::pow(h, -w.gamma) : 1.0;
    return N * (w.nested ? M : w.outer_overhead) * per_eval;
}

double predicted_work(const WorkModel& w, const EstimatorSetting& s) {
    const double per_eval = s.mesh.work_per_eval(w.gamma);
    const double inner = w.nested ? static_cast<double>(s.M) : 0.0;
    return static_cast<double>(s.N) * (inner + w.outer_overhead) * per_eval;
}

bool satisfies_constraints(const ConstraintSet& c, const EstimatorSetting& s, bool check_bias) {
    const double ca = confidence_multiplier(s.alpha);
    const double N = static_cast<double>(s.N), M = static_cast<double>(s.M);
    const double variance = c.c1 / N + c.c2 / (N * M);
    const double var_budget = std::pow(s.kappa * s.tol / ca, 2);
    if (variance > var_budget * (1.0 + 1e-9)) return false;
    if (!check_bias) return true;
    double bias = c.c4 / M + c.bias_floor;
    if (c.meshed && !s.mesh.is_exact()) bias += c.c3 * std::pow(s.mesh.h, c.eta);
    return bias <= (1.0 - s.kappa) * s.tol * (1.0 + 1e-9) + 1e-300;
}

OptimalSetting optimal_setting_dlmc(const PilotConstants& c, double tol, double alpha) {
    if (c.variant != Estimator::dlmc) throw std::invalid_argument("optimal_setting_dlmc: constants are not dlmc");
    return closed_nested(c, tol, alpha);
}

OptimalSetting optimal_setting_dlmcis(const PilotConstants& c, double tol, double alpha) {
    if (c.variant != Estimator::dlmcis) throw std::invalid_argument("optimal_setting_dlmcis: constants are not dlmcis");
    return closed_nested(c, tol, alpha);
}

OptimalSetting optimal_setting_mcla(const PilotConstants& c_in, double tol, double alpha, int repeats,
                                    bool force_kappa1) {
    if (c_in.variant != Estimator::mcla) throw std::invalid_argument("optimal_setting_mcla: constants are not mcla");
    if (!(tol > 0.0)) throw std::invalid_argument("TOL must be positive");
    if (repeats < 1) throw std::invalid_argument("N_e must be >= 1");
    PilotConstants c = c_in;
    c.repeats = repeats;
    const double ca = confidence_multiplier(alpha);
    const double floor = c.c_la2 / repeats;

    if (force_kappa1) {
        const double N = c.c1 * std::pow(ca / tol, 2);
        OptimalSetting out = finish(c, N, 1.0, c.mesh_max, 1.0, tol, alpha, Solver::forced_kappa1);
        out.bias_constraint_enforced = false;
        out.message = "kappa forced to 1; the bias constraint is not enforced";
        if (!satisfies_constraints(constraints_of(c), out.setting, false))
            throw NumericalError("forced kappa = 1 setting violates the variance constraint");
        return out;
    }
    if (tol <= floor) {
        OptimalSetting out;
        out.feasible = false;
        out.setting.tol = tol;
        out.setting.alpha = alpha;
        std::ostringstream os;
        os.precision(6);
        os << "MCLA cannot reach TOL = " << tol << ": the Laplace bias estimate C_la2/N_e = " << floor
           << " (C_la2 = " << c.c_la2 << ", N_e = " << repeats
           << ") already exceeds the tolerance; increase N_e, relax TOL, or use dlmcis";
        out.message = os.str();
        return out;
    }
    const double g = mesh_share(c);
    const double kappa = (1.0 - floor / tol) / (1.0 + g);
    const double N = c.c1 * std::pow(ca / (kappa * tol), 2);
    double h = 0.0;
    if (c.meshed) {
        h = mesh_for_budget(c, (1.0 - kappa) * tol - floor);
        if (h <= 0.0) return fallback_for(c, tol, alpha, "mesh below the model's finest mesh");
    }
    OptimalSetting out = finish(c, N, 1.0, h, kappa, tol, alpha, Solver::closed_form);
    if (!satisfies_constraints(constraints_of(c), out.setting))
        return fallback_for(c, tol, alpha, "closed form violates its constraints");
    return out;
}

OptimalSetting optimal_setting(const PilotConstants& c, double tol, double alpha, bool force_kappa1) {
    switch (c.variant) {
        case Estimator::dlmc: return optimal_setting_dlmc(c, tol, alpha);
        case Estimator::dlmcis: return optimal_setting_dlmcis(c, tol, alpha);
        case Estimator::mcla: return optimal_setting_mcla(c, tol, alpha, c.repeats, force_kappa1);
    }
    throw std::logic_error("unknown estimator");
}

OptimalSetting numeric_fallback(const WorkModel& work, const ConstraintSet& cs, double tol, double alpha) {
    if (!(tol > 0.0)) throw std::invalid_argument("TOL must be positive");
    const double ca = confidence_multiplier(alpha);
    const bool meshed = cs.meshed && cs.mesh_max > cs.mesh_min;

    // For fixed (kappa, h) the cheapest N and M make both constraints active.
    auto evaluate = [&](double kappa, double log_h, double& N, double& M) {
        const double h = meshed ? std::exp(log_h) : 0.0;
        const double mesh_bias = meshed ? cs.c3 * std::pow(h, cs.eta) : 0.0;
        const double budget = (1.0 - kappa) * tol - cs.bias_floor - mesh_bias;
        if (budget < 0.0 || (work.nested && cs.c4 > 0.0 && budget <= 0.0)) return kInf;
        M = (work.nested && cs.c4 > 0.0) ? cs.c4 / budget : 1.0;
        N = std::pow(ca / (kappa * tol), 2) * (cs.c1 + (work.nested ? cs.c2 / M : 0.0));
        return relaxed_objective(work, N, M, h);
    };

    const double lo_h = meshed ? std::log(cs.mesh_min) : 0.0;
    const double hi_h = meshed ? std::log(cs.mesh_max) : 0.0;
    // kappa on a logit grid, plus kappa = 1 for the bias-free cases.
    const double lo_u = std::log(1e-6 / (1.0 - 1e-6));
    const double hi_u = std::log((1.0 - 1e-12) / 1e-12);
    auto kappa_of = [](double u) { return u >= 27.0 ? 1.0 : 1.0 / (1.0 + std::exp(-u)); };

    double best = kInf, best_u = 0.0, best_lh = hi_h;
    const int nk = 400, nh = meshed ? 200 : 1;
    double N = 0.0, M = 0.0;
    for (int i = 0; i <= nk; ++i) {
        const double u = i == nk ? 30.0 : lo_u + (hi_u - lo_u) * i / (nk - 1);
        for (int j = 0; j < nh; ++j) {
            const double lh = meshed ? lo_h + (hi_h - lo_h) * j / (nh - 1) : 0.0;
            const double w = evaluate(kappa_of(u), lh, N, M);
            if (w < best) {
                best = w;
                best_u = u;
                best_lh = lh;
            }
        }
    }

    OptimalSetting out;
    out.solver = Solver::numeric_fallback;
    out.setting.tol = tol;
    out.setting.alpha = alpha;
    if (!std::isfinite(best)) {
        out.feasible = false;
        out.message = "no feasible setting";
        return out;
    }

    // Two refinements; coordinate sweeps on each level until no improvement.
    double du = (hi_u - lo_u) / (nk - 1), dh = meshed ? (hi_h - lo_h) / (nh - 1) : 0.0;
    for (int level = 0; level < 3; ++level) {
        for (int sweep = 0; sweep < 50; ++sweep) {
            bool improved = false;
            for (int k = -20; k <= 20; ++k) {
                const double u = best_u + du * k / 10.0;
                const double w = evaluate(kappa_of(u), best_lh, N, M);
                if (w < best) {
                    best = w;
                    best_u = u;
                    improved = true;
                }
            }
            if (meshed) {
                for (int k = -20; k <= 20; ++k) {
                    const double lh = std::clamp(best_lh + dh * k / 10.0, lo_h, hi_h);
                    const double w = evaluate(kappa_of(best_u), lh, N, M);
                    if (w < best) {
                        best = w;
                        best_lh = lh;
                        improved = true;
                    }
                }
            }
            if (!improved) break;
        }
        du /= 10.0;
        dh /= 10.0;
    }

    const double kappa = kappa_of(best_u);
    evaluate(kappa, best_lh, N, M);
    out.setting.N = static_cast<std::int64_t>(std::max(1.0, std::ceil(N)));
    out.setting.M = static_cast<std::int64_t>(std::max(1.0, std::ceil(M)));
    out.setting.mesh = meshed ? Mesh::at(std::exp(best_lh)) : Mesh::exact();
    out.setting.kappa = kappa;
    out.relaxed_work = best;
    out.predicted_work = predicted_work(work, out.setting);
    out.feasible = satisfies_constraints(cs, out.setting);
    if (!out.feasible) out.message = "numeric optimum failed the constraint check";
    return out;
}

}  // namespace boed
