// Command-line driver: run experiments, parameter sweeps and validation checks.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "glm_bandit/glm_bandit.hpp"

namespace gb = glm_bandit;
namespace fs = std::filesystem;

namespace {

gb::Json coverage_json(const gb::CoverageReport& r) {
    return {{"replications", r.replications},
            {"hits", r.hits},
            {"empirical_coverage", r.empirical_coverage},
            {"nominal", r.nominal},
            {"binomial_stderr", r.binomial_stderr},
            {"condition_satisfied", r.condition_satisfied},
            {"condition_met", r.condition_met},
            {"nonconvergent", r.nonconvergent},
            {"passes", r.passes()}};
}

void write_report(const fs::path& dir, const std::string& check, const gb::Json& report) {
    try {
        fs::create_directories(dir);
    } catch (const fs::filesystem_error& e) {
        throw gb::IoError("cannot create output directory '" + dir.string() + "': " + e.what());
    }
    const fs::path path = dir / ("validate_" + check + ".json");
    std::ofstream out(path);
    if (!out) throw gb::IoError("cannot write '" + path.string() + "'");
    out << report.dump(2) << '\n';
    if (!out) throw gb::IoError("failed writing '" + path.string() + "'");
    std::cout << report.dump(2) << '\n';
    std::cerr << "wrote " << path.string() << '\n';
}

gb::Json check_theorem1(const gb::ExperimentConfig& cfg) {
    gb::Theorem1Options opt;
    opt.environment = cfg.environment;
    opt.n = cfg.n;
    opt.sigma = gb::effective_sigma(cfg);
    opt.delta = cfg.delta;
    opt.replications = cfg.replications;
    opt.seed = cfg.master_seed;
    opt.kappa = cfg.kappa;
    const auto dirs = gb::default_directions(cfg.environment.d, cfg.random_directions, cfg.master_seed);
    const auto result = gb::theorem1_coverage(opt, dirs);
    gb::Json j = coverage_json(result.report);
    j["check"] = "theorem1";
    j["directions"] = dirs.size();
    j["required_lambda_min"] = result.required_lambda_min;
    j["n"] = cfg.n;
    j["sigma"] = opt.sigma;
    j["delta"] = cfg.delta;
    return j;
}

gb::Json check_prop1(const gb::ExperimentConfig& cfg) {
    const auto report = gb::proposition1_growth(cfg.environment, cfg.n_grid, cfg.replications, cfg.master_seed);
    gb::Json rows = gb::Json::array();
    for (const auto& r : report.rows)
        rows.push_back({{"n", r.n},
                        {"ratio_min", r.ratio_min},
                        {"ratio_q05", r.ratio_q05},
                        {"ratio_median", r.ratio_median},
                        {"ratio_q95", r.ratio_q95},
                        {"ratio_max", r.ratio_max},
                        {"lambda_min_median", r.lambda_min_median}});
    return {{"check", "prop1"},
            {"rows", rows},
            {"sigma_lambda_min", report.sigma_lambda_min},
            {"linear_growth", report.linear_growth},
            {"monotone_paths", report.monotone_paths},
            {"replications", cfg.replications}};
}

gb::Json check_lemma4(const gb::ExperimentConfig& cfg) {
    gb::validate(cfg);
    const double s0 = gb::context_second_moment_min_eigenvalue(cfg.environment);
    const gb::Variant v = gb::make_variant(cfg, "ucb_glm", s0);
    std::vector<gb::EstimationTrace> traces(static_cast<std::size_t>(cfg.replications));
    gb::parallel_for(traces.size(), gb::worker_count_from_env(), [&](std::size_t r) {
        traces[r] = gb::record_ucb_glm_trace(cfg.environment, v.policy, cfg.master_seed, static_cast<std::uint32_t>(r));
    });
    const auto report = gb::lemma4_event_coverage(traces, v.policy.sigma, v.policy.kappa, v.policy.delta);
    int applicable = 0;
    int violations = 0;
    double worst = 0.0;
    for (const auto& t : traces) {
        const auto w = gb::width_sum_check(t);
        applicable += w.applicable ? 1 : 0;
        violations += w.violations;
        worst = std::max(worst, w.worst_ratio);
    }
    gb::Json j = coverage_json(report);
    j["check"] = "lemma4";
    j["alpha"] = v.policy.alpha;
    j["tau"] = v.policy.tau;
    j["kappa"] = v.policy.kappa;
    j["sigma"] = v.policy.sigma;
    j["width_sum"] = {{"applicable_runs", applicable}, {"violations", violations}, {"worst_ratio", worst}};
    return j;
}

gb::Json check_znorm(const gb::ExperimentConfig& cfg) {
    const auto samples = gb::generate_iid_logs(cfg.environment, cfg.n, cfg.replications, cfg.master_seed);
    const double sigma = gb::effective_sigma(cfg);
    const auto report = gb::znorm_bound_check(samples, gb::LinkFunction(cfg.environment.link), sigma, cfg.delta);
    gb::Json j = coverage_json(report);
    j["check"] = "znorm";
    j["n"] = cfg.n;
    j["sigma"] = sigma;
    j["delta"] = cfg.delta;
    return j;
}

int run_main(int argc, char** argv) {
    CLI::App app{"Generalized linear contextual bandit simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir;

    auto* run = app.add_subcommand("run", "Run an experiment and write summary, traces and metadata");
    run->add_option("--config", config_path, "JSON config file")->required();
    run->add_option("--seed", seed, "Override master_seed");
    run->add_option("--out", out_dir, "Output directory (default: the config's output key)");

    std::string check;
    auto* val = app.add_subcommand("validate", "Monte Carlo check of a confidence statement");
    val->add_option("--check", check, "Which check to run")
        ->required()
        ->check(CLI::IsMember({"theorem1", "prop1", "lemma4", "znorm"}));
    val->add_option("--config", config_path, "JSON config file")->required();
    val->add_option("--seed", seed, "Override master_seed");
    val->add_option("--out", out_dir, "Output directory (default: the config's output key)");

    std::string param;
    std::string values;
    auto* sweep = app.add_subcommand("sweep", "Run one experiment per value of a parameter");
    sweep->add_option("--config", config_path, "JSON config file")->required();
    sweep->add_option("--param", param, "Parameter to vary")->required();
    sweep->add_option("--values", values, "Comma-separated values")->required();
    sweep->add_option("--seed", seed, "Override master_seed");
    sweep->add_option("--out", out_dir, "Output directory (default: the config's output key)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    gb::ExperimentConfig cfg = gb::load_experiment_config(config_path);
    if (seed) cfg.master_seed = *seed;
    const fs::path out = out_dir.empty() ? fs::path(cfg.output) : fs::path(out_dir);

    if (run->parsed()) {
        const auto result = gb::run_experiment(cfg);
        gb::emit_csv(result, out);
        std::cerr << "wrote " << result.summary.rows.size() << " summary rows to " << out.string() << '\n';
    } else if (sweep->parsed()) {
        const auto variants = gb::sweep_variants(cfg, param, gb::parse_value_list(values));
        const auto result = gb::run_experiment(cfg, variants, gb::worker_count_from_env());
        gb::emit_csv(result, out);
        std::cerr << "wrote " << variants.size() << " variants to " << out.string() << '\n';
    } else {
        gb::Json report;
        if (check == "theorem1") report = check_theorem1(cfg);
        else if (check == "prop1") report = check_prop1(cfg);
        else if (check == "lemma4") report = check_lemma4(cfg);
        else report = check_znorm(cfg);
        write_report(out, check, report);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_main(argc, argv);
    } catch (const gb::InvalidConfig& e) {
        std::cerr << "invalid configuration: " << e.what() << '\n';
        return 1;
    } catch (const gb::IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return 2;
    } catch (const gb::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 3;
    }
}
