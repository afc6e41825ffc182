#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "glm_bandit/validation.hpp"

using namespace glm_bandit;

namespace {

EnvironmentConfig identity_env(int d, int K, double noise) {
    EnvironmentConfig e;
    e.d = d;
    e.K = K;
    e.link = LinkKind::identity;
    e.noise = NoiseKind::gaussian;
    e.noise_sigma = noise;
    return e;
}

PolicyConfig explicit_policy(int T, int d, int K, double alpha, int tau, double sigma) {
    PolicyConfig p;
    p.T = T;
    p.d = d;
    p.K = K;
    p.alpha = alpha;
    p.tau = tau;
    p.sigma = sigma;
    p.kappa = 1.0;
    return p;
}

}  // namespace

TEST(Coverage, ReportArithmetic) {
    const CoverageReport r = make_coverage_report(90, 100, 0.95, 100);
    EXPECT_DOUBLE_EQ(r.empirical_coverage, 0.9);
    EXPECT_NEAR(r.binomial_stderr, std::sqrt(0.95 * 0.05 / 100), 1e-15);
    EXPECT_TRUE(r.condition_satisfied);
    // 0.95 - 3 * 0.0218 = 0.8846
    EXPECT_TRUE(r.passes());
    EXPECT_FALSE(make_coverage_report(88, 100, 0.95, 100).passes());
    EXPECT_FALSE(make_coverage_report(5, 5, 0.9, 4).condition_satisfied);
}

TEST(Coverage, QuantileInterpolates) {
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    EXPECT_DOUBLE_EQ(sorted_quantile(v, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(sorted_quantile(v, 0.5), 2.5);
    EXPECT_DOUBLE_EQ(sorted_quantile(v, 1.0), 4.0);
    EXPECT_DOUBLE_EQ(sorted_quantile({7.0}, 0.3), 7.0);
}

TEST(Directions, BasisFirstThenUnitVectors) {
    const auto dirs = default_directions(3, 10, 5);
    ASSERT_EQ(dirs.size(), 13u);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(dirs[static_cast<std::size_t>(i)], Vector::Unit(3, i));
    for (const auto& x : dirs) EXPECT_NEAR(x.norm(), 1.0, 1e-12);
    EXPECT_EQ(default_directions(3, 10, 5), dirs);
    EXPECT_NE(default_directions(3, 10, 6)[5], dirs[5]);
}

TEST(Normality, RequiredLambdaMinForLinearLink) {
    // 16 * 0.01 * (3 + log 20) / 1
    EXPECT_NEAR(normality_required_lambda_min(LinkFunction(LinkKind::identity), 3, 0.1, 1.0, 0.05), 0.9593171,
                1e-6);
}

TEST(Normality, NoiselessLinearModelAlwaysCovers) {
    Theorem1Options opt;
    opt.environment = identity_env(3, 1, 0.0);
    opt.n = 50;
    opt.sigma = 0.0;
    opt.replications = 20;
    const auto res = theorem1_coverage(opt, default_directions(3, 20, 1));
    EXPECT_EQ(res.report.hits, 20);
    EXPECT_TRUE(res.report.passes());
    EXPECT_TRUE(res.report.condition_satisfied);
    EXPECT_EQ(res.report.nominal, 1.0 - 3.0 * 0.05);
}

TEST(Normality, MoreDirectionsNeverAddHits) {
    Theorem1Options opt;
    opt.environment = identity_env(3, 1, 0.1);
    opt.n = 200;
    opt.sigma = 0.1;
    opt.replications = 100;
    opt.seed = 11;
    const auto basis = theorem1_coverage(opt, default_directions(3, 0, 1));
    const auto all = theorem1_coverage(opt, default_directions(3, 100, 1));
    for (std::size_t r = 0; r < all.hit_indicators.size(); ++r) {
        if (all.hit_indicators[r]) {
            EXPECT_TRUE(basis.hit_indicators[r]) << "replication " << r;
        }
    }
    EXPECT_GE(basis.report.hits, all.report.hits);
}

TEST(Normality, DeterministicPerSeed) {
    Theorem1Options opt;
    opt.environment = identity_env(2, 1, 0.2);
    opt.n = 100;
    opt.sigma = 0.2;
    opt.replications = 30;
    const auto dirs = default_directions(2, 5, 3);
    EXPECT_EQ(theorem1_coverage(opt, dirs).hit_indicators, theorem1_coverage(opt, dirs).hit_indicators);
}

TEST(Normality, RejectsBadInput) {
    Theorem1Options opt;
    opt.environment = identity_env(3, 1, 0.1);
    opt.n = 2;
    EXPECT_THROW(theorem1_coverage(opt, default_directions(3, 0, 1)), InvalidConfig);
    opt.n = 10;
    EXPECT_THROW(theorem1_coverage(opt, default_directions(2, 0, 1)), InvalidConfig);
    opt.delta = 1.5;
    EXPECT_THROW(theorem1_coverage(opt, default_directions(3, 0, 1)), InvalidConfig);
}

TEST(Growth, EmptyDesignHasZeroRatio) {
    EnvironmentConfig ctx = identity_env(3, 1, 0.0);
    const auto rep = proposition1_growth(ctx, {0, 10, 100, 1000}, 10, 3);
    ASSERT_EQ(rep.rows.size(), 4u);
    EXPECT_EQ(rep.rows[0].ratio_median, 0.0);
    EXPECT_TRUE(rep.monotone_paths);
    EXPECT_NEAR(rep.sigma_lambda_min, 0.2, 1e-15);
    for (const auto& row : rep.rows) {
        EXPECT_LE(row.ratio_min, row.ratio_q05);
        EXPECT_LE(row.ratio_q05, row.ratio_median);
        EXPECT_LE(row.ratio_median, row.ratio_q95);
        EXPECT_LE(row.ratio_q95, row.ratio_max);
    }
}

TEST(Growth, UniformBallRatioNearOneFifth) {
    const auto rep = proposition1_growth(identity_env(3, 1, 0.0), {100, 10000}, 20, 8);
    EXPECT_GE(rep.rows.back().ratio_median, 0.18);
    EXPECT_LE(rep.rows.back().ratio_median, 0.22);
    EXPECT_TRUE(rep.linear_growth);
}

TEST(Growth, RejectsUnsortedGrid) {
    EXPECT_THROW(proposition1_growth(identity_env(2, 1, 0.0), {10, 10}, 2, 1), InvalidConfig);
    EXPECT_THROW(proposition1_growth(identity_env(2, 1, 0.0), {}, 2, 1), InvalidConfig);
}

TEST(EstimationRadius, HandValueAndMonotone) {
    // sqrt(log 2 + 1)
    EXPECT_NEAR(estimation_radius(1.0, 1.0, 2, 1, std::exp(-1.0)), std::sqrt(std::log(2.0) + 1.0), 1e-14);
    double prev = 0.0;
    for (int t = 1; t < 5000; t *= 3) {
        const double r = estimation_radius(0.5, 0.2, 4, t, 0.05);
        EXPECT_GT(r, prev);
        prev = r;
    }
    EXPECT_DOUBLE_EQ(estimation_radius(0.5, 0.2, 4, 10, 0.05), 2.0 * estimation_radius(0.25, 0.2, 4, 10, 0.05));
}

TEST(EstimationEvent, NoiselessRunsAreHits) {
    const auto env = identity_env(2, 3, 0.0);
    const auto policy = explicit_policy(200, 2, 3, 0.5, 40, 0.0);
    std::vector<EstimationTrace> traces;
    for (std::uint32_t r = 0; r < 5; ++r) traces.push_back(record_ucb_glm_trace(env, policy, 4, r));
    for (const auto& t : traces) {
        EXPECT_GE(t.warmup_lambda_min, 1.0);
        EXPECT_EQ(t.error_norms.size(), 160u);
        EXPECT_EQ(t.error_norms.front().first, 41);
    }
    const auto rep = lemma4_event_coverage(traces, 0.0, 1.0, 0.05);
    EXPECT_EQ(rep.hits, 5);
    EXPECT_TRUE(rep.condition_satisfied);
}

TEST(EstimationEvent, SkipsTracesWithWeakWarmup) {
    EstimationTrace weak;
    weak.d = 2;
    weak.warmup_lambda_min = 0.5;
    weak.error_norms = {{5, 100.0}};
    EstimationTrace good = weak;
    good.warmup_lambda_min = 2.0;
    good.error_norms = {{5, 0.1}};
    EstimationTrace bad = good;
    bad.error_norms = {{5, 0.1}, {6, 50.0}};
    const auto rep = lemma4_event_coverage({weak, good, bad}, 1.0, 1.0, 0.05);
    EXPECT_EQ(rep.replications, 2);
    EXPECT_EQ(rep.hits, 1);
    EXPECT_FALSE(rep.condition_satisfied);
}

TEST(WidthSum, HandTraces) {
    EstimationTrace t;
    t.d = 1;
    t.tau = 2;
    t.warmup_lambda_min = 1.0;
    // n=1: sqrt(2 log 3) = 1.482; n=2: sqrt(4 log 4) = 2.355
    t.chosen_widths = {1.0, 1.0};
    EXPECT_EQ(width_sum_check(t).violations, 0);
    EXPECT_NEAR(width_sum_check(t).worst_ratio, 2.0 / std::sqrt(4.0 * std::log(4.0)), 1e-12);
    t.chosen_widths = {1.6, 0.0};
    EXPECT_EQ(width_sum_check(t).violations, 1);
    t.warmup_lambda_min = 0.9;
    EXPECT_FALSE(width_sum_check(t).applicable);
    EXPECT_EQ(width_sum_check(t).violations, 0);
}

TEST(WidthSum, HoldsOnLogisticRuns) {
    EnvironmentConfig env;
    env.d = 3;
    env.K = 5;
    const auto policy = explicit_policy(600, 3, 5, 1.0, 100, 0.5);
    int applicable = 0;
    for (std::uint32_t r = 0; r < 5; ++r) {
        const auto w = width_sum_check(record_ucb_glm_trace(env, policy, 9, r));
        applicable += w.applicable ? 1 : 0;
        EXPECT_EQ(w.violations, 0);
        EXPECT_LE(w.worst_ratio, 1.0);
    }
    EXPECT_GT(applicable, 0);
}

TEST(StageEvent, NoiselessSupCbCovers) {
    const auto env = identity_env(2, 3, 0.0);
    auto policy = explicit_policy(128, 2, 3, 0.5, 20, 0.0);
    const auto rep = supcb_stage_event_coverage(env, policy, 3, 2);
    EXPECT_EQ(rep.hits, 3);
    EXPECT_EQ(rep.nonconvergent, 0);
}

TEST(NoiseSum, ZeroWithoutNoise) {
    const auto samples = generate_iid_logs(identity_env(3, 1, 0.0), 50, 4, 1);
    const LinkFunction link(LinkKind::identity);
    for (const auto& s : samples) EXPECT_NEAR(noise_sum_norm(s, link), 0.0, 1e-12);
    EXPECT_EQ(znorm_bound_check(samples, link, 0.0, 0.05).hits, 4);
}

TEST(NoiseSum, ScalesWithNoiseLevel) {
    const LinkFunction link(LinkKind::identity);
    const auto a = generate_iid_logs(identity_env(3, 1, 0.3), 200, 50, 6);
    const auto b = generate_iid_logs(identity_env(3, 1, 0.6), 200, 50, 6);
    for (std::size_t r = 0; r < a.size(); ++r)
        EXPECT_NEAR(noise_sum_norm(b[r], link), 2.0 * noise_sum_norm(a[r], link), 1e-9);
    EXPECT_EQ(znorm_bound_check(a, link, 0.3, 0.05).hits, znorm_bound_check(b, link, 0.6, 0.05).hits);
    EXPECT_TRUE(znorm_bound_check(a, link, 0.3, 0.05).passes());
}

TEST(NoiseSum, SkipsSingularDesigns) {
    const auto samples = generate_iid_logs(identity_env(3, 1, 0.1), 2, 3, 1);
    const auto rep = znorm_bound_check(samples, LinkFunction(LinkKind::identity), 0.1, 0.05);
    EXPECT_EQ(rep.replications, 0);
    EXPECT_FALSE(rep.condition_satisfied);
}
