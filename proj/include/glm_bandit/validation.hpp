#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "glm_bandit/environment.hpp"
#include "glm_bandit/errors.hpp"
#include "glm_bandit/linalg.hpp"
#include "glm_bandit/mle.hpp"
#include "glm_bandit/policy.hpp"
#include "glm_bandit/rng.hpp"
#include "glm_bandit/simulation.hpp"
#include "glm_bandit/supcb_glm.hpp"

namespace glm_bandit {

/// Monte Carlo hit count for a high-probability inequality.
struct CoverageReport {
    int replications = 0;
    int hits = 0;
    double empirical_coverage = 0.0;
    double nominal = 0.0;
    /// True when the inequality's precondition held in every counted replication.
    bool condition_satisfied = false;
    int condition_met = 0;
    /// sqrt(nominal (1 - nominal) / replications).
    double binomial_stderr = 0.0;
    int nonconvergent = 0;

    /// One-sided check: coverage >= nominal - 3 standard errors.
    bool passes() const { return empirical_coverage >= nominal - 3.0 * binomial_stderr; }
};

inline CoverageReport make_coverage_report(int hits, int replications, double nominal, int condition_met,
                                           int nonconvergent = 0) {
    CoverageReport r;
    r.replications = replications;
    r.hits = hits;
    r.empirical_coverage = replications > 0 ? static_cast<double>(hits) / replications : 0.0;
    r.nominal = nominal;
    r.condition_met = condition_met;
    r.condition_satisfied = replications > 0 && condition_met == replications;
    r.binomial_stderr = replications > 0 ? std::sqrt(nominal * (1.0 - nominal) / replications) : 0.0;
    r.nonconvergent = nonconvergent;
    return r;
}

/// An iid draw from the context distribution; for fixed contexts, a uniformly
/// chosen member of the fixed set.
inline Vector draw_iid_context(const EnvironmentConfig& cfg, CounterRng& rng) {
    if (cfg.contexts == ContextDistribution::fixed)
        return cfg.fixed_contexts[static_cast<std::size_t>(rng.below(cfg.fixed_contexts.size()))];
    return draw_context(cfg.contexts, cfg.d, rng);
}

/// Standard basis plus `random_count` seeded unit vectors.
inline std::vector<Vector> default_directions(int d, int random_count, std::uint64_t seed) {
    std::vector<Vector> dirs;
    for (int i = 0; i < d; ++i) dirs.push_back(Vector::Unit(d, i));
    CounterRng rng(seed, 0, Purpose::directions, 0);
    for (int i = 0; i < random_count; ++i) dirs.push_back(draw_context(ContextDistribution::sphere, d, rng));
    return dirs;
}

// ---------------------------------------------------------------------------
// Finite-sample normality of the MLE

struct Theorem1Options {
    EnvironmentConfig environment;
    int n = 1000;
    /// Sub-Gaussian scale used in the bound.
    double sigma = 0.5;
    double delta = 0.05;
    int replications = 100;
    std::uint64_t seed = 1;
    /// Defaults to compute_kappa(link, ||theta*||).
    std::optional<double> kappa;
};

struct Theorem1Result {
    CoverageReport report;
    std::vector<bool> hit_indicators;
    std::vector<bool> condition_indicators;
    /// lambda_min(V_n) required by the theorem (or the consistency threshold
    /// when M_mu = 0).
    double required_lambda_min = 0.0;
};

/// lambda_min(V_n) needed for the normality bound: 512 M^2 sigma^2 / kappa^4
/// (d^2 + log 1/delta), or 16 sigma^2 (d + log 1/delta) / kappa^2 when M_mu = 0.
inline double normality_required_lambda_min(const LinkFunction& link, int d, double sigma, double kappa,
                                            double delta) {
    const double m = link.curvature_bound();
    const double log_inv = std::log(1.0 / delta);
    if (m == 0.0) return 16.0 * sigma * sigma * (d + log_inv) / (kappa * kappa);
    return 512.0 * m * m * sigma * sigma / std::pow(kappa, 4) * (static_cast<double>(d) * d + log_inv);
}

inline Theorem1Result theorem1_coverage(const Theorem1Options& opt, const std::vector<Vector>& directions) {
    constexpr double kRoundingSlack = 1e-9;
    validate(opt.environment);
    if (opt.n < opt.environment.d) throw InvalidConfig("theorem1 needs n >= d");
    if (opt.replications < 1) throw InvalidConfig("replications must be positive");
    if (!(opt.delta > 0.0 && opt.delta < 1.0)) throw InvalidConfig("delta must lie in (0, 1)");
    if (!(opt.sigma >= 0.0)) throw InvalidConfig("sigma must be nonnegative");
    for (const auto& x : directions)
        if (x.size() != opt.environment.d) throw InvalidConfig("direction has wrong dimension");

    const LinkFunction link(opt.environment.link);
    Theorem1Result result;
    int hits = 0;
    int met = 0;
    int nonconvergent = 0;
    for (int rep = 0; rep < opt.replications; ++rep) {
        const Environment env(opt.environment, opt.seed, static_cast<std::uint32_t>(rep));
        const double kappa = opt.kappa.value_or(compute_kappa(link, env.theta_star().norm()));
        const double required = normality_required_lambda_min(link, env.dim(), opt.sigma, kappa, opt.delta);
        result.required_lambda_min = required;

        DesignState design(env.dim());
        CounterRng ctx_rng(opt.seed, static_cast<std::uint32_t>(rep), Purpose::contexts, 0);
        for (int i = 1; i <= opt.n; ++i) {
            const Vector x = draw_iid_context(opt.environment, ctx_rng);
            design.absorb(x, env.sample_reward(x, static_cast<std::uint32_t>(i)));
        }
        const bool condition = design.min_eigenvalue() >= required;
        met += condition ? 1 : 0;
        result.condition_indicators.push_back(condition);

        bool hit = false;
        if (design.invertible()) {
            const MleResult fit = mle_fit(link, design.log(), Vector::Zero(env.dim()));
            if (!fit.converged) ++nonconvergent;
            const Vector error = fit.theta_hat - env.theta_star();
            const double scale = 3.0 * opt.sigma / kappa * std::sqrt(std::log(1.0 / opt.delta));
            hit = fit.converged;
            for (const auto& x : directions) {
                if (std::abs(x.dot(error)) > scale * design.width(x) + kRoundingSlack) {
                    hit = false;
                    break;
                }
            }
        }
        hits += hit ? 1 : 0;
        result.hit_indicators.push_back(hit);
    }
    result.report = make_coverage_report(hits, opt.replications, 1.0 - 3.0 * opt.delta, met, nonconvergent);
    return result;
}

// ---------------------------------------------------------------------------
// Linear growth of lambda_min(V_n) under iid contexts

struct GrowthRow {
    int n = 0;
    double ratio_min = 0.0;
    double ratio_q05 = 0.0;
    double ratio_median = 0.0;
    double ratio_q95 = 0.0;
    double ratio_max = 0.0;
    double lambda_min_median = 0.0;
};

struct GrowthReport {
    std::vector<GrowthRow> rows;
    /// lambda_min(E[x x']).
    double sigma_lambda_min = 0.0;
    /// Median lambda_min(V_n)/n at the largest n within 10% of lambda_min(Sigma).
    bool linear_growth = false;
    /// lambda_min(V_n) never decreased along any sample path.
    bool monotone_paths = true;
};

/// Linear-interpolation quantile of sorted data.
inline double sorted_quantile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline GrowthReport proposition1_growth(const EnvironmentConfig& contexts, const std::vector<int>& n_grid,
                                        int replications, std::uint64_t seed) {
    validate(contexts);
    if (replications < 1) throw InvalidConfig("replications must be positive");
    if (n_grid.empty()) throw InvalidConfig("n_grid must not be empty");
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        if (n_grid[i] < 0) throw InvalidConfig("n_grid entries must be nonnegative");
        if (i > 0 && n_grid[i] <= n_grid[i - 1]) throw InvalidConfig("n_grid must be increasing");
    }
    const int d = contexts.d;
    std::vector<std::vector<double>> lambdas(n_grid.size());
    GrowthReport report;
    for (int rep = 0; rep < replications; ++rep) {
        CounterRng rng(seed, static_cast<std::uint32_t>(rep), Purpose::contexts, 0);
        Matrix v = Matrix::Zero(d, d);
        int drawn = 0;
        double previous = 0.0;
        for (std::size_t g = 0; g < n_grid.size(); ++g) {
            for (; drawn < n_grid[g]; ++drawn) {
                const Vector x = draw_iid_context(contexts, rng);
                v.noalias() += x * x.transpose();
            }
            const double lam = drawn == 0 ? 0.0 : min_eigenvalue(v);
            if (lam < previous - 1e-9 * std::max(1.0, previous)) report.monotone_paths = false;
            previous = lam;
            lambdas[g].push_back(lam);
        }
    }
    for (std::size_t g = 0; g < n_grid.size(); ++g) {
        auto lam = lambdas[g];
        std::sort(lam.begin(), lam.end());
        std::vector<double> ratio = lam;
        for (double& r : ratio) r = n_grid[g] > 0 ? r / n_grid[g] : 0.0;
        GrowthRow row;
        row.n = n_grid[g];
        row.ratio_min = ratio.front();
        row.ratio_q05 = sorted_quantile(ratio, 0.05);
        row.ratio_median = sorted_quantile(ratio, 0.5);
        row.ratio_q95 = sorted_quantile(ratio, 0.95);
        row.ratio_max = ratio.back();
        row.lambda_min_median = sorted_quantile(lam, 0.5);
        report.rows.push_back(row);
    }
    report.sigma_lambda_min = context_second_moment_min_eigenvalue(contexts);
    report.linear_growth =
        std::abs(report.rows.back().ratio_median - report.sigma_lambda_min) <= 0.1 * report.sigma_lambda_min;
    return report;
}

// ---------------------------------------------------------------------------
// UCB-GLM trajectories: estimation error and width sums

/// Per-round quantities from one UCB-GLM run, for rounds t > tau.
struct EstimationTrace {
    int d = 0;
    int tau = 0;
    /// lambda_min(V_{tau+1}), the design after the warm-up rounds.
    double warmup_lambda_min = 0.0;
    /// (t, ||theta_hat_t - theta*||_{V_t}).
    std::vector<std::pair<int, double>> error_norms;
    /// ||X_t||_{V_t^{-1}} for the chosen context, in round order.
    std::vector<double> chosen_widths;
    double final_cum_regret = 0.0;
};

inline EstimationTrace record_ucb_glm_trace(const EnvironmentConfig& env_cfg, const PolicyConfig& policy_cfg,
                                           std::uint64_t seed, std::uint32_t replication) {
    const Environment env(env_cfg, seed, replication);
    UcbGlm policy(policy_cfg, env.link());
    EstimationTrace out;
    out.d = env.dim();
    out.tau = policy.config().tau;
    const int T = policy.config().T;
    const RegretTrace trace = simulate(env, policy, T, seed, replication, T, [&](const RoundView& view) {
        if (view.t <= out.tau) return;
        const DesignState& design = policy.design();
        if (view.t == out.tau + 1) out.warmup_lambda_min = design.min_eigenvalue();
        const Vector error = policy.theta_hat() - env.theta_star();
        out.error_norms.emplace_back(view.t, weighted_norm(error, design.gram()));
        out.chosen_widths.push_back(design.width(view.contexts[static_cast<std::size_t>(view.selection.arm)]));
    });
    out.final_cum_regret = trace.final_cum_regret;
    return out;
}

/// (sigma/kappa) sqrt((d/2) log(1 + 2t/d) + log(1/delta)).
inline double estimation_radius(double sigma, double kappa, int d, int t, double delta) {
    return sigma / kappa * std::sqrt(0.5 * d * std::log(1.0 + 2.0 * t / d) + std::log(1.0 / delta));
}

/// A replication is a hit when ||theta_hat_t - theta*||_{V_t} stays inside the
/// estimation radius at every recorded round. Only traces whose warm-up design
/// has lambda_min >= 1 are counted.
inline CoverageReport lemma4_event_coverage(const std::vector<EstimationTrace>& traces, double sigma, double kappa,
                                            double delta) {
    constexpr double kRoundingSlack = 1e-9;
    if (!(kappa > 0.0) || !(sigma >= 0.0)) throw InvalidConfig("lemma4 needs sigma >= 0 and kappa > 0");
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidConfig("delta must lie in (0, 1)");
    int counted = 0;
    int hits = 0;
    for (const auto& tr : traces) {
        if (tr.warmup_lambda_min < 1.0) continue;
        ++counted;
        bool hit = true;
        for (const auto& [t, norm] : tr.error_norms) {
            if (norm > estimation_radius(sigma, kappa, tr.d, t, delta) + kRoundingSlack) {
                hit = false;
                break;
            }
        }
        hits += hit ? 1 : 0;
    }
    CoverageReport r = make_coverage_report(hits, counted, 1.0 - delta, counted);
    r.condition_satisfied = counted == static_cast<int>(traces.size()) && counted > 0;
    return r;
}

struct WidthSumCheck {
    /// lambda_min(V_{tau+1}) >= 1, so the inequality applies.
    bool applicable = false;
    int violations = 0;
    /// max over n of (sum of the first n widths) / sqrt(2 n d log((n + tau)/d)).
    double worst_ratio = 0.0;
};

/// sum_{t=tau+1}^{tau+n} ||X_t||_{V_t^{-1}} <= sqrt(2 n d log((n + tau)/d)),
/// checked for every prefix length n.
inline WidthSumCheck width_sum_check(const EstimationTrace& trace) {
    WidthSumCheck out;
    out.applicable = trace.warmup_lambda_min >= 1.0;
    if (!out.applicable) return out;
    double sum = 0.0;
    const double d = trace.d;
    for (std::size_t i = 0; i < trace.chosen_widths.size(); ++i) {
        sum += trace.chosen_widths[i];
        const double n = static_cast<double>(i + 1);
        const double bound = std::sqrt(2.0 * n * d * std::log((n + trace.tau) / d));
        const double ratio = bound > 0.0 ? sum / bound : (sum > 0.0 ? INFINITY : 0.0);
        out.worst_ratio = std::max(out.worst_ratio, ratio);
        if (sum > bound * (1.0 + 1e-12)) ++out.violations;
    }
    return out;
}

// ---------------------------------------------------------------------------
// SupCB-GLM per-stage confidence event

/// A replication is a hit when |m_a^(s) - x_a'theta*| <= w_a^(s) for every
/// arm at every stage evaluated after the warm-up rounds.
inline CoverageReport supcb_stage_event_coverage(const EnvironmentConfig& env_cfg, const PolicyConfig& policy_cfg,
                                                 int replications, std::uint64_t seed) {
    if (replications < 1) throw InvalidConfig("replications must be positive");
    int hits = 0;
    int nonconvergent = 0;
    for (int rep = 0; rep < replications; ++rep) {
        const Environment env(env_cfg, seed, static_cast<std::uint32_t>(rep));
        SupCbGlm policy(policy_cfg, env.link());
        bool hit = true;
        const RegretTrace trace =
            simulate(env, policy, policy.config().T, seed, static_cast<std::uint32_t>(rep), policy.config().T,
                     [&](const RoundView& view) {
                         for (const auto& record : policy.last_stage_records()) {
                             for (std::size_t a = 0; a < view.contexts.size(); ++a) {
                                 const double truth = view.contexts[a].dot(env.theta_star());
                                 if (std::abs(record.scores.means[a] - truth) > record.scores.widths[a]) hit = false;
                             }
                         }
                     });
        nonconvergent += trace.nonconverged_rounds > 0 ? 1 : 0;
        hits += hit ? 1 : 0;
    }
    return make_coverage_report(hits, replications, 1.0 - policy_cfg.delta, replications, nonconvergent);
}

// ---------------------------------------------------------------------------
// Self-normalized noise sum ||Z||_{V^{-1}}, Z = sum eps_i X_i

struct NoiseSample {
    ObservationLog log;
    Vector theta_star;
};

/// Non-adaptive designs: n iid contexts with rewards from the environment.
inline std::vector<NoiseSample> generate_iid_logs(const EnvironmentConfig& env_cfg, int n, int replications,
                                                  std::uint64_t seed) {
    if (n < 1 || replications < 1) throw InvalidConfig("n and replications must be positive");
    std::vector<NoiseSample> out;
    out.reserve(static_cast<std::size_t>(replications));
    for (int rep = 0; rep < replications; ++rep) {
        const Environment env(env_cfg, seed, static_cast<std::uint32_t>(rep));
        CounterRng rng(seed, static_cast<std::uint32_t>(rep), Purpose::contexts, 0);
        NoiseSample sample{ObservationLog(env.dim()), env.theta_star()};
        for (int i = 1; i <= n; ++i) {
            const Vector x = draw_iid_context(env_cfg, rng);
            sample.log.append(x, env.sample_reward(x, static_cast<std::uint32_t>(i)));
        }
        out.push_back(std::move(sample));
    }
    return out;
}

/// ||Z||_{V^{-1}} for one log.
inline double noise_sum_norm(const NoiseSample& sample, const LinkFunction& link) {
    DesignState design(sample.log.dim());
    Vector z = Vector::Zero(sample.log.dim());
    for (std::size_t i = 0; i < sample.log.size(); ++i) {
        const Vector x = sample.log.feature(i);
        design.absorb(x, sample.log.reward(i));
        z += (sample.log.reward(i) - link.mean(x.dot(sample.theta_star))) * x;
    }
    return design.width(z);
}

/// Hit when ||Z||_{V^{-1}} <= 4 sigma sqrt(d + log(1/delta)). Logs whose
/// design is singular are not counted.
inline CoverageReport znorm_bound_check(const std::vector<NoiseSample>& samples, const LinkFunction& link,
                                        double sigma, double delta) {
    constexpr double kRoundingSlack = 1e-9;
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidConfig("delta must lie in (0, 1)");
    int counted = 0;
    int hits = 0;
    for (const auto& s : samples) {
        DesignState design(s.log.dim());
        for (std::size_t i = 0; i < s.log.size(); ++i) design.absorb(s.log.feature(i), s.log.reward(i));
        if (!design.invertible()) continue;
        ++counted;
        const double bound = 4.0 * sigma * std::sqrt(s.log.dim() + std::log(1.0 / delta));
        hits += noise_sum_norm(s, link) <= bound + kRoundingSlack ? 1 : 0;
    }
    CoverageReport r = make_coverage_report(hits, counted, 1.0 - delta, counted);
    r.condition_satisfied = counted == static_cast<int>(samples.size()) && counted > 0;
    return r;
}

}  // namespace glm_bandit
