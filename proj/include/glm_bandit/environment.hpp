#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "glm_bandit/errors.hpp"
#include "glm_bandit/linalg.hpp"
#include "glm_bandit/link.hpp"
#include "glm_bandit/rng.hpp"

namespace glm_bandit {

enum class ContextDistribution { uniform_ball, sphere, gaussian_normalized, fixed };
enum class NoiseKind { bernoulli, gaussian };

inline ContextDistribution parse_context_distribution(std::string_view name) {
    if (name == "uniform_ball") return ContextDistribution::uniform_ball;
    if (name == "sphere") return ContextDistribution::sphere;
    if (name == "gaussian_normalized") return ContextDistribution::gaussian_normalized;
    if (name == "fixed") return ContextDistribution::fixed;
    throw InvalidConfig("unknown context distribution '" + std::string(name) + "'");
}

inline std::string_view to_string(ContextDistribution dist) {
    switch (dist) {
        case ContextDistribution::uniform_ball:
            return "uniform_ball";
        case ContextDistribution::sphere:
            return "sphere";
        case ContextDistribution::gaussian_normalized:
            return "gaussian_normalized";
        case ContextDistribution::fixed:
            return "fixed";
    }
    return "unknown";
}

inline NoiseKind parse_noise(std::string_view name) {
    if (name == "bernoulli") return NoiseKind::bernoulli;
    if (name == "gaussian") return NoiseKind::gaussian;
    throw InvalidConfig("unknown noise kind '" + std::string(name) + "'");
}

inline std::string_view to_string(NoiseKind noise) {
    return noise == NoiseKind::bernoulli ? "bernoulli" : "gaussian";
}

/// One draw from a context distribution. `fixed` is handled by the caller.
inline Vector draw_context(ContextDistribution dist, int d, CounterRng& rng) {
    Vector g(d);
    for (int i = 0; i < d; ++i) g(i) = rng.normal();
    switch (dist) {
        case ContextDistribution::uniform_ball: {
            const double norm = g.norm();
            const double radius = std::pow(rng.uniform(), 1.0 / d);
            return norm > 0.0 ? Vector(g * (radius / norm)) : Vector::Zero(d);
        }
        case ContextDistribution::sphere: {
            const double norm = g.norm();
            if (norm == 0.0) {
                Vector e = Vector::Zero(d);
                e(0) = 1.0;
                return e;
            }
            return g / norm;
        }
        case ContextDistribution::gaussian_normalized: {
            g /= std::sqrt(static_cast<double>(d));
            return g / std::max(1.0, g.norm());
        }
        case ContextDistribution::fixed:
            break;
    }
    throw InvalidConfig("fixed contexts have no sampler");
}

/// Draws a vector uniformly on the sphere of the given radius.
inline Vector draw_on_sphere(int d, double radius, CounterRng& rng) {
    return radius * draw_context(ContextDistribution::sphere, d, rng);
}

struct EnvironmentConfig {
    int d = 2;
    int K = 2;
    LinkKind link = LinkKind::logistic;
    NoiseKind noise = NoiseKind::bernoulli;
    /// Standard deviation of Gaussian noise; ignored for Bernoulli rewards.
    double noise_sigma = 0.5;
    ContextDistribution contexts = ContextDistribution::uniform_ball;
    /// K vectors used every round when contexts == fixed.
    std::vector<Vector> fixed_contexts;
    /// Radius of the sphere theta* is drawn from when theta_star is unset.
    double theta_star_norm = 1.0;
    std::optional<Vector> theta_star;
};

inline void validate(const EnvironmentConfig& cfg) {
    if (cfg.d < 1) throw InvalidConfig("d must be at least 1");
    if (cfg.K < 1) throw InvalidConfig("K must be at least 1");
    if (cfg.noise == NoiseKind::bernoulli && cfg.link != LinkKind::logistic)
        throw InvalidConfig("bernoulli noise requires the logistic link");
    if (cfg.noise == NoiseKind::gaussian && !(cfg.noise_sigma >= 0.0))
        throw InvalidConfig("noise_sigma must be nonnegative");
    if (!(cfg.theta_star_norm >= 0.0)) throw InvalidConfig("theta_star_norm must be nonnegative");
    if (cfg.theta_star && cfg.theta_star->size() != cfg.d) throw InvalidConfig("theta_star has wrong dimension");
    if (cfg.contexts == ContextDistribution::fixed) {
        if (static_cast<int>(cfg.fixed_contexts.size()) != cfg.K)
            throw InvalidConfig("fixed_contexts must list exactly K vectors");
        for (const auto& x : cfg.fixed_contexts) {
            if (x.size() != cfg.d) throw InvalidConfig("fixed context has wrong dimension");
            if (x.norm() > 1.0 + kFeatureNormSlack) throw InvalidConfig("fixed context has norm above 1");
        }
    }
}

/// lambda_min of the per-vector second moment E[x x']. Closed form for the
/// ball and sphere; a fixed-seed Monte Carlo estimate for the clipped Gaussian.
inline double context_second_moment_min_eigenvalue(const EnvironmentConfig& cfg) {
    const double d = cfg.d;
    switch (cfg.contexts) {
        case ContextDistribution::uniform_ball:
            return 1.0 / (d + 2.0);
        case ContextDistribution::sphere:
            return 1.0 / d;
        case ContextDistribution::gaussian_normalized: {
            constexpr int kSamples = 200000;
            CounterRng rng(0x5eed5eedULL, 0, Purpose::validation, 0);
            double total = 0.0;
            for (int i = 0; i < kSamples; ++i)
                total += draw_context(cfg.contexts, cfg.d, rng).squaredNorm();
            return total / kSamples / d;
        }
        case ContextDistribution::fixed: {
            Matrix m = Matrix::Zero(cfg.d, cfg.d);
            for (const auto& x : cfg.fixed_contexts) m += x * x.transpose();
            return min_eigenvalue(m / static_cast<double>(cfg.K));
        }
    }
    return 0.0;
}

/// Synthetic GLM world for one replication. Owns theta*; every draw is
/// addressed by (seed, replication, purpose, round) so that all policies run
/// against the same replication see the same contexts and reward noise.
class Environment {
  public:
    Environment(EnvironmentConfig cfg, std::uint64_t seed, std::uint32_t replication)
        : cfg_(std::move(cfg)), link_(cfg_.link), seed_(seed), replication_(replication) {
        validate(cfg_);
        if (cfg_.theta_star) {
            theta_star_ = *cfg_.theta_star;
        } else {
            CounterRng rng(seed_, replication_, Purpose::theta, 0);
            theta_star_ = draw_on_sphere(cfg_.d, cfg_.theta_star_norm, rng);
        }
    }

    const EnvironmentConfig& config() const { return cfg_; }
    int dim() const { return cfg_.d; }
    int arms() const { return cfg_.K; }
    const LinkFunction& link() const { return link_; }
    const Vector& theta_star() const { return theta_star_; }

    /// Sub-Gaussian scale of the reward noise: 1/2 for Bernoulli, the
    /// standard deviation for Gaussian.
    double noise_scale() const { return cfg_.noise == NoiseKind::bernoulli ? 0.5 : cfg_.noise_sigma; }

    std::vector<Vector> sample_contexts(std::uint32_t t) const {
        if (cfg_.contexts == ContextDistribution::fixed) return cfg_.fixed_contexts;
        CounterRng rng(seed_, replication_, Purpose::contexts, t);
        std::vector<Vector> out;
        out.reserve(static_cast<std::size_t>(cfg_.K));
        for (int a = 0; a < cfg_.K; ++a) out.push_back(draw_context(cfg_.contexts, cfg_.d, rng));
        return out;
    }

    double mean_reward(const Vector& x) const { return link_.mean(x.dot(theta_star_)); }

    /// Reward for playing context x at round t. `draw` distinguishes several
    /// rewards requested in the same round.
    double sample_reward(const Vector& x, std::uint32_t t, std::uint32_t draw = 0) const {
        CounterRng rng(seed_, replication_, Purpose::rewards, t, draw);
        const double mean = mean_reward(x);
        if (cfg_.noise == NoiseKind::bernoulli) return rng.bernoulli(mean) ? 1.0 : 0.0;
        return mean + cfg_.noise_sigma * rng.normal();
    }

    /// argmax_a mu(x_a'theta*) with lowest-index tie-breaking.
    int optimal_arm(const std::vector<Vector>& contexts) const {
        int best = 0;
        double best_mean = mean_reward(contexts[0]);
        for (int a = 1; a < static_cast<int>(contexts.size()); ++a) {
            const double m = mean_reward(contexts[static_cast<std::size_t>(a)]);
            if (m > best_mean) {
                best = a;
                best_mean = m;
            }
        }
        return best;
    }

    /// argmax_a x_a'theta* on the linear scale; agrees with optimal_arm
    /// because mu is strictly increasing.
    int optimal_arm_linear(const std::vector<Vector>& contexts) const {
        int best = 0;
        double best_score = contexts[0].dot(theta_star_);
        for (int a = 1; a < static_cast<int>(contexts.size()); ++a) {
            const double s = contexts[static_cast<std::size_t>(a)].dot(theta_star_);
            if (s > best_score) {
                best = a;
                best_score = s;
            }
        }
        return best;
    }

    double instantaneous_regret(const std::vector<Vector>& contexts, int chosen) const {
        if (chosen < 0 || chosen >= static_cast<int>(contexts.size()))
            throw InvalidConfig("chosen arm out of range");
        const double best = mean_reward(contexts[static_cast<std::size_t>(optimal_arm(contexts))]);
        return std::max(0.0, best - mean_reward(contexts[static_cast<std::size_t>(chosen)]));
    }

  private:
    EnvironmentConfig cfg_;
    LinkFunction link_;
    std::uint64_t seed_;
    std::uint32_t replication_;
    Vector theta_star_;
};

}  // namespace glm_bandit
