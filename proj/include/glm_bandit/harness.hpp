#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "glm_bandit/environment.hpp"
#include "glm_bandit/errors.hpp"
#include "glm_bandit/link.hpp"
#include "glm_bandit/policy.hpp"
#include "glm_bandit/simulation.hpp"
#include "glm_bandit/supcb_glm.hpp"

namespace glm_bandit {

inline constexpr const char* kVersion = "0.1.0";

using Json = nlohmann::json;

/// Everything a config file can set. Rules left unset pick each algorithm's
/// own tuning (theorem2 for UCB-GLM and the greedy baselines, theorem3 for
/// SupCB-GLM).
struct ExperimentConfig {
    EnvironmentConfig environment;
    int T = 1000;
    int replications = 10;
    std::uint64_t master_seed = 1;
    std::string output = "results";
    int record_every = 1;
    bool write_traces = true;
    std::vector<std::string> algorithms{"ucb_glm"};

    std::optional<AlphaRule> alpha_rule;
    std::optional<double> alpha;
    std::optional<TauRule> tau_rule;
    std::optional<int> tau;
    std::optional<double> tau_constant;
    std::optional<double> kappa;
    std::optional<double> sigma;
    double delta = 0.05;
    double epsilon = 0.1;
    double ridge = 0.0;
    MleOptions mle;
    std::optional<double> supcb_t0_constant;

    // Validation subcommand inputs.
    int n = 1000;
    std::vector<int> n_grid{100, 1000, 10000};
    int random_directions = 100;

    /// The parsed document, echoed into meta.json.
    Json source = Json::object();
};

inline constexpr double kDefaultTauConstant = 16.0;
inline constexpr double kDefaultT0Constant = 1.0;

inline const std::vector<std::string>& known_algorithms() {
    static const std::vector<std::string> names{"ucb_glm",      "supcb_glm",   "uniform_random",
                                                "epsilon_greedy", "pure_greedy", "oracle"};
    return names;
}

namespace detail {

template <class T>
T json_get(const Json& doc, const char* key) {
    try {
        return doc.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw InvalidConfig(std::string("config key '") + key + "': " + e.what());
    }
}

inline Vector json_vector(const Json& value, const char* key) {
    std::vector<double> raw;
    try {
        raw = value.get<std::vector<double>>();
    } catch (const nlohmann::json::exception&) {
        throw InvalidConfig(std::string("config key '") + key + "' must be an array of numbers");
    }
    Vector v(static_cast<Eigen::Index>(raw.size()));
    for (std::size_t i = 0; i < raw.size(); ++i) v(static_cast<Eigen::Index>(i)) = raw[i];
    return v;
}

inline std::string format_number(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

inline std::string sanitize_filename(std::string_view label) {
    std::string out;
    for (char c : label) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
                        c == '-' || c == '.';
        out.push_back(ok ? c : '_');
    }
    return out;
}

}  // namespace detail

/// Parses a flat JSON config. Unknown keys are rejected.
inline ExperimentConfig parse_experiment_config(const Json& doc) {
    using detail::json_get;
    if (!doc.is_object()) throw InvalidConfig("config must be a JSON object");
    static const std::set<std::string> keys{
        "d",           "K",          "T",           "replications",      "master_seed",  "link",
        "noise",       "noise_sigma", "contexts",   "fixed_contexts",    "theta_star_norm", "theta_star",
        "algorithms",  "alpha",      "alpha_rule",  "tau",               "tau_rule",     "tau_constant",
        "kappa",       "sigma",      "delta",       "epsilon",           "ridge",        "mle_tolerance",
        "mle_max_iterations", "supcb_t0_constant", "record_every", "write_traces", "output", "n",
        "n_grid",      "random_directions"};
    for (const auto& item : doc.items())
        if (!keys.count(item.key())) throw InvalidConfig("unknown config key '" + item.key() + "'");

    ExperimentConfig cfg;
    EnvironmentConfig& env = cfg.environment;
    if (doc.contains("d")) env.d = json_get<int>(doc, "d");
    if (doc.contains("K")) env.K = json_get<int>(doc, "K");
    if (doc.contains("link")) env.link = parse_link(json_get<std::string>(doc, "link")).kind();
    if (doc.contains("noise")) {
        env.noise = parse_noise(json_get<std::string>(doc, "noise"));
    } else {
        env.noise = env.link == LinkKind::logistic ? NoiseKind::bernoulli : NoiseKind::gaussian;
    }
    if (doc.contains("noise_sigma")) env.noise_sigma = json_get<double>(doc, "noise_sigma");
    if (doc.contains("contexts")) env.contexts = parse_context_distribution(json_get<std::string>(doc, "contexts"));
    if (doc.contains("fixed_contexts")) {
        const Json& list = doc.at("fixed_contexts");
        if (!list.is_array()) throw InvalidConfig("config key 'fixed_contexts' must be an array of vectors");
        for (const auto& x : list) env.fixed_contexts.push_back(detail::json_vector(x, "fixed_contexts"));
    }
    if (doc.contains("theta_star_norm")) env.theta_star_norm = json_get<double>(doc, "theta_star_norm");
    if (doc.contains("theta_star")) env.theta_star = detail::json_vector(doc.at("theta_star"), "theta_star");

    if (doc.contains("T")) cfg.T = json_get<int>(doc, "T");
    if (doc.contains("replications")) cfg.replications = json_get<int>(doc, "replications");
    if (doc.contains("master_seed")) cfg.master_seed = json_get<std::uint64_t>(doc, "master_seed");
    if (doc.contains("output")) cfg.output = json_get<std::string>(doc, "output");
    if (doc.contains("record_every")) cfg.record_every = json_get<int>(doc, "record_every");
    if (doc.contains("write_traces")) cfg.write_traces = json_get<bool>(doc, "write_traces");
    if (doc.contains("algorithms")) cfg.algorithms = json_get<std::vector<std::string>>(doc, "algorithms");

    if (doc.contains("alpha")) cfg.alpha = json_get<double>(doc, "alpha");
    if (doc.contains("alpha_rule")) {
        const auto rule = json_get<std::string>(doc, "alpha_rule");
        if (rule != "auto") cfg.alpha_rule = parse_alpha_rule(rule);
    } else if (cfg.alpha) {
        cfg.alpha_rule = AlphaRule::explicit_value;
    }
    if (doc.contains("tau")) cfg.tau = json_get<int>(doc, "tau");
    if (doc.contains("tau_rule")) {
        const auto rule = json_get<std::string>(doc, "tau_rule");
        if (rule != "auto") cfg.tau_rule = parse_tau_rule(rule);
    } else if (cfg.tau) {
        cfg.tau_rule = TauRule::explicit_value;
    }
    if (cfg.alpha_rule == AlphaRule::explicit_value && !cfg.alpha)
        throw InvalidConfig("alpha_rule 'explicit' needs an 'alpha' value");
    if (cfg.tau_rule == TauRule::explicit_value && !cfg.tau)
        throw InvalidConfig("tau_rule 'explicit' needs a 'tau' value");
    if (doc.contains("tau_constant")) cfg.tau_constant = json_get<double>(doc, "tau_constant");
    if (doc.contains("kappa")) cfg.kappa = json_get<double>(doc, "kappa");
    if (doc.contains("sigma")) cfg.sigma = json_get<double>(doc, "sigma");
    if (doc.contains("delta")) cfg.delta = json_get<double>(doc, "delta");
    if (doc.contains("epsilon")) cfg.epsilon = json_get<double>(doc, "epsilon");
    if (doc.contains("ridge")) cfg.ridge = json_get<double>(doc, "ridge");
    if (doc.contains("mle_tolerance")) cfg.mle.tolerance = json_get<double>(doc, "mle_tolerance");
    if (doc.contains("mle_max_iterations")) cfg.mle.max_iterations = json_get<int>(doc, "mle_max_iterations");
    if (doc.contains("supcb_t0_constant")) cfg.supcb_t0_constant = json_get<double>(doc, "supcb_t0_constant");

    if (doc.contains("n")) cfg.n = json_get<int>(doc, "n");
    if (doc.contains("n_grid")) cfg.n_grid = json_get<std::vector<int>>(doc, "n_grid");
    if (doc.contains("random_directions")) cfg.random_directions = json_get<int>(doc, "random_directions");

    cfg.source = doc;
    cfg.source.erase("output");
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidConfig("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_experiment_config(doc);
}

/// Checks the experiment-level invariants. Called before any output is written.
inline void validate(const ExperimentConfig& cfg) {
    validate(cfg.environment);
    if (cfg.T < 1) throw InvalidConfig("T must be at least 1");
    if (cfg.replications < 1) throw InvalidConfig("replications must be at least 1");
    if (cfg.record_every < 1) throw InvalidConfig("record_every must be at least 1");
    if (cfg.algorithms.empty()) throw InvalidConfig("algorithms must not be empty");
    std::set<std::string> seen;
    for (const auto& name : cfg.algorithms) {
        if (std::find(known_algorithms().begin(), known_algorithms().end(), name) == known_algorithms().end())
            throw InvalidConfig("unknown algorithm '" + name + "'");
        if (!seen.insert(name).second) throw InvalidConfig("algorithm '" + name + "' listed twice");
    }
}

/// One algorithm with fully resolved tuning.
struct Variant {
    std::string label;
    std::string algorithm;
    PolicyConfig policy;
    /// sqrt of the context second-moment lambda_min.
    double sigma0 = 0.0;
};

/// kappa from the config, else mu'(||theta*|| + 1).
inline double effective_kappa(const ExperimentConfig& cfg) {
    if (cfg.kappa) return *cfg.kappa;
    const double norm = cfg.environment.theta_star ? cfg.environment.theta_star->norm() : cfg.environment.theta_star_norm;
    return compute_kappa(LinkFunction(cfg.environment.link), norm);
}

/// sigma from the config, else the noise's own sub-Gaussian scale.
inline double effective_sigma(const ExperimentConfig& cfg) {
    if (cfg.sigma) return *cfg.sigma;
    return cfg.environment.noise == NoiseKind::bernoulli ? 0.5 : cfg.environment.noise_sigma;
}

inline Variant make_variant(const ExperimentConfig& cfg, const std::string& algorithm, double sigma0_squared) {
    Variant v;
    v.label = algorithm;
    v.algorithm = algorithm;
    PolicyConfig& p = v.policy;
    const LinkFunction link(cfg.environment.link);
    p.T = cfg.T;
    p.d = cfg.environment.d;
    p.K = cfg.environment.K;
    p.kappa = effective_kappa(cfg);
    p.sigma = effective_sigma(cfg);
    p.delta = cfg.delta;
    p.tau_constant = cfg.tau_constant.value_or(kDefaultTauConstant);
    p.sigma0_squared = sigma0_squared;
    p.lipschitz = link.lipschitz_bound();
    p.epsilon = cfg.epsilon;
    p.ridge = cfg.ridge;
    p.mle = cfg.mle;
    p.alpha = cfg.alpha.value_or(0.0);
    p.tau = cfg.tau.value_or(0);
    v.sigma0 = std::sqrt(sigma0_squared);

    if (algorithm == "ucb_glm" || algorithm == "supcb_glm") {
        const bool sup = algorithm == "supcb_glm";
        p.alpha_rule = cfg.alpha_rule.value_or(sup ? AlphaRule::theorem3 : AlphaRule::theorem2);
        p.tau_rule = cfg.tau_rule.value_or(sup ? TauRule::theorem3 : TauRule::theorem2);
        p = resolve(p);
    } else if (algorithm == "epsilon_greedy" || algorithm == "pure_greedy") {
        p.alpha_rule = AlphaRule::explicit_value;
        p.alpha = 0.0;
        p.tau_rule = cfg.tau_rule.value_or(TauRule::theorem2);
        p = resolve(p);
        if (algorithm == "pure_greedy") p.epsilon = 0.0;
    } else {
        p.alpha_rule = AlphaRule::explicit_value;
        p.tau_rule = TauRule::explicit_value;
        p.alpha = 0.0;
        p.tau = 0;
    }
    return v;
}

inline std::vector<Variant> build_variants(const ExperimentConfig& cfg) {
    validate(cfg);
    const double s0 = context_second_moment_min_eigenvalue(cfg.environment);
    std::vector<Variant> out;
    for (const auto& name : cfg.algorithms) out.push_back(make_variant(cfg, name, s0));
    return out;
}

/// Parameters a sweep may vary.
inline const std::vector<std::string>& sweepable_parameters() {
    static const std::vector<std::string> names{"alpha", "tau",   "epsilon", "delta",
                                                "kappa", "sigma", "tau_constant", "ridge"};
    return names;
}

inline void apply_parameter(ExperimentConfig& cfg, const std::string& name, double value) {
    if (name == "alpha") {
        cfg.alpha = value;
        cfg.alpha_rule = AlphaRule::explicit_value;
    } else if (name == "tau") {
        if (value != std::floor(value) || value < 0) throw InvalidConfig("tau values must be nonnegative integers");
        cfg.tau = static_cast<int>(value);
        cfg.tau_rule = TauRule::explicit_value;
    } else if (name == "epsilon") {
        cfg.epsilon = value;
    } else if (name == "delta") {
        cfg.delta = value;
    } else if (name == "kappa") {
        cfg.kappa = value;
    } else if (name == "sigma") {
        cfg.sigma = value;
    } else if (name == "tau_constant") {
        cfg.tau_constant = value;
    } else if (name == "ridge") {
        cfg.ridge = value;
    } else {
        throw InvalidConfig("parameter '" + name + "' cannot be swept");
    }
}

/// One variant per (algorithm, value), labelled `<algorithm>[<param>=<value>]`.
inline std::vector<Variant> sweep_variants(const ExperimentConfig& cfg, const std::string& param,
                                           const std::vector<double>& values) {
    validate(cfg);
    if (values.empty()) throw InvalidConfig("sweep needs at least one value");
    const double s0 = context_second_moment_min_eigenvalue(cfg.environment);
    std::vector<Variant> out;
    for (const auto& name : cfg.algorithms) {
        for (double value : values) {
            ExperimentConfig copy = cfg;
            apply_parameter(copy, param, value);
            Variant v = make_variant(copy, name, s0);
            v.label = name + "[" + param + "=" + detail::format_number(value) + "]";
            out.push_back(std::move(v));
        }
    }
    return out;
}

inline std::vector<double> parse_value_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        char* end = nullptr;
        const double v = std::strtod(item.c_str(), &end);
        if (item.empty() || end != item.c_str() + item.size())
            throw InvalidConfig("cannot parse sweep value '" + item + "'");
        out.push_back(v);
    }
    return out;
}

inline std::unique_ptr<Policy> make_policy(const Variant& v, const Environment& env) {
    const LinkFunction& link = env.link();
    if (v.algorithm == "ucb_glm") return std::make_unique<UcbGlm>(v.policy, link);
    if (v.algorithm == "supcb_glm") return std::make_unique<SupCbGlm>(v.policy, link);
    if (v.algorithm == "epsilon_greedy") return std::make_unique<EpsilonGreedy>(v.policy, link, false);
    if (v.algorithm == "pure_greedy") return std::make_unique<EpsilonGreedy>(v.policy, link, true);
    if (v.algorithm == "uniform_random") return std::make_unique<UniformRandom>();
    if (v.algorithm == "oracle") return std::make_unique<OraclePolicy>(env.theta_star());
    throw InvalidConfig("unknown algorithm '" + v.algorithm + "'");
}

// ---------------------------------------------------------------------------
// Execution

/// Worker count from GLM_BANDIT_THREADS, else the available parallelism.
inline unsigned worker_count_from_env() {
    const char* raw = std::getenv("GLM_BANDIT_THREADS");
    if (raw == nullptr || *raw == '\0') return std::max(1u, std::thread::hardware_concurrency());
    char* end = nullptr;
    const long v = std::strtol(raw, &end, 10);
    if (*end != '\0' || v < 1) throw InvalidConfig(std::string("GLM_BANDIT_THREADS must be an integer >= 1, got '") + raw + "'");
    return static_cast<unsigned>(v);
}

/// Runs fn(0..n-1) on up to `workers` threads. The exception from the lowest
/// failing index is rethrown after all workers finish.
template <class Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned count = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), n));
    if (count <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < count; ++i) pool.emplace_back(work);
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

/// Result of one (variant, replication) work unit.
struct UnitResult {
    RegretTrace trace;
    /// lambda_min of the warm-up design, for policies that have one.
    std::optional<double> warmup_lambda_min;
};

inline UnitResult run_unit(const ExperimentConfig& cfg, const Variant& variant, std::uint32_t replication) {
    const Environment env(cfg.environment, cfg.master_seed, replication);
    const std::unique_ptr<Policy> policy = make_policy(variant, env);
    UnitResult out;
    const int tau = variant.policy.tau;
    auto observer = [&](const RoundView& view) {
        if (view.t != tau + 1) return;
        if (const auto* ucb = dynamic_cast<const UcbGlm*>(policy.get()))
            out.warmup_lambda_min = ucb->design().min_eigenvalue();
        else if (const auto* sup = dynamic_cast<const SupCbGlm*>(policy.get()))
            out.warmup_lambda_min = sup->warmup_design().min_eigenvalue();
    };
    out.trace = simulate(env, *policy, cfg.T, cfg.master_seed, replication, cfg.record_every, observer);
    return out;
}

struct SummaryRow {
    std::string algorithm;
    int t = 0;
    double mean = 0.0;
    double std_dev = 0.0;
    double min = 0.0;
    double max = 0.0;
    int n_reps = 0;
};

struct AggregateSummary {
    std::vector<SummaryRow> rows;
    Json meta = Json::object();
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<Variant> variants;
    /// units[v][r] for variant v, replication r.
    std::vector<std::vector<UnitResult>> units;
    AggregateSummary summary;
};

/// Mean, sample standard deviation, min and max of cumulative regret per
/// recorded round, consumed in replication order.
inline std::vector<SummaryRow> aggregate(const std::string& label, const std::vector<UnitResult>& reps) {
    std::vector<SummaryRow> rows;
    if (reps.empty()) return rows;
    const std::size_t m = reps.front().trace.rows.size();
    const auto n = static_cast<double>(reps.size());
    for (std::size_t j = 0; j < m; ++j) {
        SummaryRow row;
        row.algorithm = label;
        row.t = reps.front().trace.rows[j].t;
        row.n_reps = static_cast<int>(reps.size());
        row.min = INFINITY;
        row.max = -INFINITY;
        double sum = 0.0;
        for (const auto& r : reps) {
            const double x = r.trace.rows[j].cum_regret;
            sum += x;
            row.min = std::min(row.min, x);
            row.max = std::max(row.max, x);
        }
        row.mean = sum / n;
        double ss = 0.0;
        for (const auto& r : reps) ss += (r.trace.rows[j].cum_regret - row.mean) * (r.trace.rows[j].cum_regret - row.mean);
        row.std_dev = reps.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        // Guard against the last-ulp drift of a floating-point mean.
        row.mean = std::clamp(row.mean, row.min, row.max);
        rows.push_back(row);
    }
    return rows;
}

/// C0 sigma^2 / kappa^4 max(d^3, log(TK/delta)/d), the SupCB-GLM horizon threshold.
inline double supcb_horizon_threshold(const PolicyConfig& p, double constant) {
    const double d = p.d;
    const double term = std::max(d * d * d, std::log(static_cast<double>(p.T) * p.K / p.delta) / d);
    return constant * p.sigma * p.sigma / std::pow(p.kappa, 4) * term;
}

inline Json build_meta(const ExperimentConfig& cfg, const std::vector<Variant>& variants,
                       const std::vector<std::vector<UnitResult>>& units) {
    Json meta;
    meta["version"] = kVersion;
    Json echo = cfg.source;
    echo["master_seed"] = cfg.master_seed;
    meta["config"] = echo;
    Json flagged = Json::array();
    bool uses_tau_constant = false;
    bool uses_t0 = false;
    Json list = Json::array();
    for (std::size_t v = 0; v < variants.size(); ++v) {
        const Variant& var = variants[v];
        const PolicyConfig& p = var.policy;
        Json entry;
        entry["label"] = var.label;
        entry["algorithm"] = var.algorithm;
        entry["alpha"] = p.alpha;
        entry["alpha_rule"] = std::string(to_string(p.alpha_rule));
        entry["tau"] = p.tau;
        entry["tau_rule"] = std::string(to_string(p.tau_rule));
        entry["tau_constant"] = p.tau_constant;
        entry["kappa"] = p.kappa;
        entry["sigma"] = p.sigma;
        entry["sigma0"] = var.sigma0;
        entry["sigma0_squared"] = p.sigma0_squared;
        entry["delta"] = p.delta;
        entry["lipschitz"] = p.lipschitz;
        entry["epsilon"] = p.epsilon;
        entry["ridge"] = p.ridge;
        if (p.tau_rule == TauRule::theorem2 && !cfg.tau_constant) uses_tau_constant = true;

        int nonconverged_rounds = 0;
        int nonconverged_reps = 0;
        int warmup_checked = 0;
        int warmup_ok = 0;
        for (const auto& u : units[v]) {
            nonconverged_rounds += u.trace.nonconverged_rounds;
            nonconverged_reps += u.trace.nonconverged_rounds > 0 ? 1 : 0;
            if (u.warmup_lambda_min) {
                ++warmup_checked;
                warmup_ok += *u.warmup_lambda_min >= 1.0 ? 1 : 0;
            }
        }
        entry["nonconverged_rounds"] = nonconverged_rounds;
        entry["nonconverged_replications"] = nonconverged_reps;
        entry["warmup_design_checked"] = warmup_checked;
        entry["warmup_lambda_min_at_least_1"] = warmup_ok;
        if (var.algorithm == "supcb_glm") {
            const double c0 = cfg.supcb_t0_constant.value_or(kDefaultT0Constant);
            if (!cfg.supcb_t0_constant) uses_t0 = true;
            const double t0 = supcb_horizon_threshold(p, c0);
            entry["stage_count"] = static_cast<int>(std::bit_width(static_cast<unsigned>(p.T))) - 1;
            entry["horizon_threshold"] = t0;
            entry["horizon_threshold_constant"] = c0;
            entry["horizon_condition_met"] = static_cast<double>(p.T) >= t0;
        }
        list.push_back(entry);
    }
    if (uses_tau_constant) flagged.push_back("tau_constant");
    if (uses_t0) flagged.push_back("supcb_t0_constant");
    meta["variants"] = list;
    meta["defaulted_constants"] = flagged;
    meta["replications"] = cfg.replications;
    meta["T"] = cfg.T;
    meta["record_every"] = cfg.record_every;
    return meta;
}

/// Runs every (variant, replication) unit and aggregates in replication order.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, std::vector<Variant> variants, unsigned workers) {
    validate(cfg);
    ExperimentResult result;
    result.config = cfg;
    result.variants = std::move(variants);
    const std::size_t reps = static_cast<std::size_t>(cfg.replications);
    result.units.assign(result.variants.size(), std::vector<UnitResult>(reps));
    parallel_for(result.variants.size() * reps, workers, [&](std::size_t i) {
        const std::size_t v = i / reps;
        const std::size_t r = i % reps;
        result.units[v][r] = run_unit(cfg, result.variants[v], static_cast<std::uint32_t>(r));
    });
    for (std::size_t v = 0; v < result.variants.size(); ++v) {
        auto rows = aggregate(result.variants[v].label, result.units[v]);
        result.summary.rows.insert(result.summary.rows.end(), rows.begin(), rows.end());
    }
    result.summary.meta = build_meta(cfg, result.variants, result.units);
    return result;
}

inline ExperimentResult run_experiment(const ExperimentConfig& cfg, unsigned workers = worker_count_from_env()) {
    return run_experiment(cfg, build_variants(cfg), workers);
}

// ---------------------------------------------------------------------------
// Files

inline constexpr const char* kSummaryHeader = "algorithm,t,mean_cum_regret,std_cum_regret,min,max,n_reps";
inline constexpr const char* kTraceHeader = "t,arm,optimal_arm,reward,inst_regret,cum_regret,mle_converged,stage";

inline void write_trace_csv(std::ostream& out, const std::vector<RoundRecord>& rows) {
    using detail::format_number;
    out << kTraceHeader << '\n';
    for (const auto& r : rows) {
        out << r.t << ',' << r.arm << ',' << r.optimal_arm << ',' << format_number(r.reward) << ','
            << format_number(r.inst_regret) << ',' << format_number(r.cum_regret) << ',' << (r.mle_converged ? 1 : 0)
            << ',';
        if (r.stage) out << *r.stage;
        out << '\n';
    }
}

inline std::vector<RoundRecord> parse_trace_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != kTraceHeader) throw InvalidConfig("trace CSV has an unexpected header");
    std::vector<RoundRecord> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (!line.empty() && line.back() == ',') f.emplace_back();
        if (f.size() != 8) throw InvalidConfig("trace CSV row has " + std::to_string(f.size()) + " fields");
        try {
            RoundRecord r;
            r.t = std::stoi(f[0]);
            r.arm = std::stoi(f[1]);
            r.optimal_arm = std::stoi(f[2]);
            r.reward = std::stod(f[3]);
            r.inst_regret = std::stod(f[4]);
            r.cum_regret = std::stod(f[5]);
            r.mle_converged = f[6] == "1";
            if (!f[7].empty()) r.stage = std::stoi(f[7]);
            rows.push_back(r);
        } catch (const std::logic_error&) {
            throw InvalidConfig("trace CSV row is malformed: " + line);
        }
    }
    return rows;
}

inline std::vector<RoundRecord> parse_trace_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trace file '" + path.string() + "'");
    return parse_trace_csv(in);
}

inline void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
    using detail::format_number;
    out << kSummaryHeader << '\n';
    for (const auto& r : rows)
        out << r.algorithm << ',' << r.t << ',' << format_number(r.mean) << ',' << format_number(r.std_dev) << ','
            << format_number(r.min) << ',' << format_number(r.max) << ',' << r.n_reps << '\n';
}

inline std::filesystem::path trace_filename(const std::string& label, int replication) {
    return "trace_" + detail::sanitize_filename(label) + "_" + std::to_string(replication) + ".csv";
}

namespace detail {

template <class Writer>
void write_file(const std::filesystem::path& path, Writer&& writer) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    writer(out);
    out.flush();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace detail

/// Writes summary.csv, meta.json and (if enabled) one trace per (variant, replication).
inline void emit_csv(const ExperimentResult& result, const std::filesystem::path& dir) {
    if (result.config.replications < 1) throw InvalidConfig("replications must be at least 1");
    try {
        std::filesystem::create_directories(dir);
    } catch (const std::filesystem::filesystem_error& e) {
        throw IoError("cannot create output directory '" + dir.string() + "': " + e.what());
    }
    detail::write_file(dir / "summary.csv", [&](std::ostream& o) { write_summary_csv(o, result.summary.rows); });
    detail::write_file(dir / "meta.json", [&](std::ostream& o) { o << result.summary.meta.dump(2) << '\n'; });
    if (!result.config.write_traces) return;
    for (std::size_t v = 0; v < result.variants.size(); ++v) {
        for (std::size_t r = 0; r < result.units[v].size(); ++r) {
            detail::write_file(dir / trace_filename(result.variants[v].label, static_cast<int>(r)),
                               [&](std::ostream& o) { write_trace_csv(o, result.units[v][r].trace.rows); });
        }
    }
}

}  // namespace glm_bandit
