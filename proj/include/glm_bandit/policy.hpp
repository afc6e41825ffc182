#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "glm_bandit/errors.hpp"
#include "glm_bandit/linalg.hpp"
#include "glm_bandit/link.hpp"
#include "glm_bandit/mle.hpp"
#include "glm_bandit/rng.hpp"

namespace glm_bandit {

/// How alpha (the exploration width multiplier) is chosen.
///   theorem2: (sigma/kappa) sqrt((d/2) log(1 + 2T/d) + log(1/delta)), the UCB-GLM tuning
///   theorem3: (3 sigma/kappa) sqrt(2 log(TK/delta)), the SupCB-GLM tuning
///   theorem4: L_mu sigma / kappa, the upper end of the small-alpha UCB-GLM tuning
enum class AlphaRule { explicit_value, theorem2, theorem3, theorem4 };

/// How tau (the number of uniformly random warm-up rounds) is chosen.
///   theorem2: C (d + log(1/delta)) / sigma0^2, floored at d
///   theorem3: sqrt(d T)
///   theorem4: (8 sigma^2 / kappa^2) d log T
enum class TauRule { explicit_value, theorem2, theorem3, theorem4 };

inline AlphaRule parse_alpha_rule(std::string_view s) {
    if (s == "explicit") return AlphaRule::explicit_value;
    if (s == "theorem2") return AlphaRule::theorem2;
    if (s == "theorem3") return AlphaRule::theorem3;
    if (s == "theorem4") return AlphaRule::theorem4;
    throw InvalidConfig("unknown alpha_rule '" + std::string(s) + "'");
}

inline TauRule parse_tau_rule(std::string_view s) {
    if (s == "explicit") return TauRule::explicit_value;
    if (s == "theorem2") return TauRule::theorem2;
    if (s == "theorem3") return TauRule::theorem3;
    if (s == "theorem4") return TauRule::theorem4;
    throw InvalidConfig("unknown tau_rule '" + std::string(s) + "'");
}

inline std::string_view to_string(AlphaRule r) {
    switch (r) {
        case AlphaRule::explicit_value:
            return "explicit";
        case AlphaRule::theorem2:
            return "theorem2";
        case AlphaRule::theorem3:
            return "theorem3";
        case AlphaRule::theorem4:
            return "theorem4";
    }
    return "explicit";
}

inline std::string_view to_string(TauRule r) {
    switch (r) {
        case TauRule::explicit_value:
            return "explicit";
        case TauRule::theorem2:
            return "theorem2";
        case TauRule::theorem3:
            return "theorem3";
        case TauRule::theorem4:
            return "theorem4";
    }
    return "explicit";
}

struct PolicyConfig {
    int T = 1000;
    int d = 2;
    int K = 2;
    double alpha = 1.0;
    int tau = 0;
    double kappa = 1.0;
    /// Sub-Gaussian scale of the reward noise.
    double sigma = 1.0;
    double delta = 0.05;
    AlphaRule alpha_rule = AlphaRule::explicit_value;
    TauRule tau_rule = TauRule::explicit_value;
    /// Universal constant C of the theorem2 tau rule.
    double tau_constant = 16.0;
    /// lambda_min of the context second moment; used by the theorem2 tau rule.
    double sigma0_squared = 0.0;
    /// L_mu of the link.
    double lipschitz = 1.0;
    /// Exploration probability for epsilon-greedy.
    double epsilon = 0.1;
    /// Prior ridge on the design matrix and the likelihood; 0 disables it.
    double ridge = 0.0;
    MleOptions mle;
};

inline double alpha_from_rule(AlphaRule rule, int T, int d, int K, double delta, double sigma, double kappa,
                              double lipschitz, double explicit_alpha = 0.0) {
    if (rule == AlphaRule::explicit_value) {
        if (!(explicit_alpha >= 0.0)) throw InvalidConfig("alpha must be nonnegative");
        return explicit_alpha;
    }
    if (T <= 0 || d <= 0 || K <= 0) throw InvalidConfig("alpha rule needs positive T, d, K");
    if (!(sigma > 0.0) || !(kappa > 0.0)) throw InvalidConfig("alpha rule needs positive sigma and kappa");
    if (!(delta > 0.0 && delta < 1.0)) throw InvalidConfig("delta must lie in (0, 1)");
    switch (rule) {
        case AlphaRule::theorem2:
            return (sigma / kappa) *
                   std::sqrt(0.5 * d * std::log(1.0 + 2.0 * T / d) + std::log(1.0 / delta));
        case AlphaRule::theorem3:
            return (3.0 * sigma / kappa) * std::sqrt(2.0 * std::log(static_cast<double>(T) * K / delta));
        case AlphaRule::theorem4:
            if (!(lipschitz > 0.0)) throw InvalidConfig("alpha rule needs positive L_mu");
            return lipschitz * sigma / kappa;
        case AlphaRule::explicit_value:
            break;
    }
    return explicit_alpha;
}

inline int tau_from_rule(TauRule rule, int T, int d, double delta, double sigma, double kappa,
                         double tau_constant, double sigma0_squared, int explicit_tau = 0) {
    switch (rule) {
        case TauRule::explicit_value:
            if (explicit_tau < 0) throw InvalidConfig("tau must be nonnegative");
            return explicit_tau;
        case TauRule::theorem2: {
            if (!(sigma0_squared > 0.0)) throw InvalidConfig("tau rule needs positive sigma0_squared");
            if (!(tau_constant > 0.0)) throw InvalidConfig("tau_constant must be positive");
            if (!(delta > 0.0 && delta < 1.0)) throw InvalidConfig("delta must lie in (0, 1)");
            const double raw = tau_constant / sigma0_squared * (d + std::log(1.0 / delta));
            return std::max(d, static_cast<int>(std::ceil(raw)));
        }
        case TauRule::theorem3:
            return static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d) * T)));
        case TauRule::theorem4: {
            if (!(sigma > 0.0) || !(kappa > 0.0)) throw InvalidConfig("tau rule needs positive sigma and kappa");
            const double raw = 8.0 * sigma * sigma / (kappa * kappa) * d * std::log(static_cast<double>(T));
            return static_cast<int>(std::ceil(raw));
        }
    }
    return explicit_tau;
}

/// Applies the alpha/tau rules and checks the config invariants.
inline PolicyConfig resolve(PolicyConfig cfg) {
    if (cfg.T < 1) throw InvalidConfig("T must be at least 1");
    if (cfg.d < 1) throw InvalidConfig("d must be at least 1");
    if (cfg.K < 1) throw InvalidConfig("K must be at least 1");
    if (!(cfg.kappa > 0.0)) throw InvalidConfig("kappa must be positive");
    if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw InvalidConfig("delta must lie in (0, 1)");
    if (!(cfg.epsilon >= 0.0 && cfg.epsilon <= 1.0)) throw InvalidConfig("epsilon must lie in [0, 1]");
    if (!(cfg.ridge >= 0.0)) throw InvalidConfig("ridge must be nonnegative");
    cfg.alpha = alpha_from_rule(cfg.alpha_rule, cfg.T, cfg.d, cfg.K, cfg.delta, cfg.sigma, cfg.kappa,
                                cfg.lipschitz, cfg.alpha);
    cfg.tau = tau_from_rule(cfg.tau_rule, cfg.T, cfg.d, cfg.delta, cfg.sigma, cfg.kappa, cfg.tau_constant,
                            cfg.sigma0_squared, cfg.tau);
    if (cfg.tau > cfg.T)
        throw InvalidConfig("tau = " + std::to_string(cfg.tau) + " exceeds the horizon T = " + std::to_string(cfg.T));
    return cfg;
}

/// The outcome of one selection. For SupCB-GLM, `assigned_set` names the set
/// that receives the round: -1 for the warm-up set, 0 for the exploit set,
/// s >= 1 for stage s.
struct Selection {
    int arm = 0;
    std::optional<int> stage;
    int assigned_set = -1;
    bool mle_converged = true;
};

/// Uniform policy interface driven by the simulation loop. Rounds are
/// 1-based; `rng` is a fresh stream for this (replication, round).
class Policy {
  public:
    virtual ~Policy() = default;
    virtual std::string_view name() const = 0;
    virtual Selection select(int t, const std::vector<Vector>& contexts, CounterRng& rng) = 0;
    virtual void update(const Selection& selection, const Vector& context, double reward) = 0;
};

/// Index of the largest entry; ties go to the lowest index.
inline int argmax_lowest_index(std::span<const double> values) {
    int best = 0;
    for (int i = 1; i < static_cast<int>(values.size()); ++i)
        if (values[static_cast<std::size_t>(i)] > values[static_cast<std::size_t>(best)]) best = i;
    return best;
}

/// x_a'theta + alpha ||x_a||_{V^{-1}} for every arm.
inline std::vector<double> ucb_scores(const Vector& theta_hat, const Matrix& v_inverse, double alpha,
                                      const std::vector<Vector>& contexts) {
    std::vector<double> scores;
    scores.reserve(contexts.size());
    for (const auto& x : contexts) scores.push_back(x.dot(theta_hat) + alpha * weighted_norm(x, v_inverse));
    return scores;
}

/// UCB-GLM arm choice. Throws SingularDesign if V is not invertible.
inline int ucb_glm_select(const Vector& theta_hat, const DesignState& design, double alpha,
                          const std::vector<Vector>& contexts) {
    if (!design.invertible())
        throw SingularDesign("UCB-GLM: design matrix is singular; the warm-up phase was too short");
    const auto scores = ucb_scores(theta_hat, design.inverse(), alpha, contexts);
    return argmax_lowest_index(scores);
}

/// Shared machinery for policies that fit the GLM on every observation so far.
class FullLogEstimator {
  public:
    FullLogEstimator(const PolicyConfig& cfg, LinkFunction link)
        : link_(link),
          design_(cfg.ridge > 0.0 ? DesignState(cfg.d, cfg.ridge) : DesignState(cfg.d)),
          theta_hat_(Vector::Zero(cfg.d)),
          mle_(cfg.mle) {
        mle_.ridge = cfg.ridge;
    }

    const DesignState& design() const { return design_; }
    const Vector& theta_hat() const { return theta_hat_; }
    bool last_fit_converged() const { return converged_; }

    void absorb(const Vector& x, double y) { design_.absorb(x, y); }

    /// Re-solves the MLE from the previous estimate if new data arrived.
    bool refresh() {
        if (fitted_count_ == design_.count() || design_.count() == 0) return converged_;
        MleResult fit = mle_fit(link_, design_.log(), theta_hat_, mle_);
        theta_hat_ = std::move(fit.theta_hat);
        converged_ = fit.converged;
        fitted_count_ = design_.count();
        return converged_;
    }

  private:
    LinkFunction link_;
    DesignState design_;
    Vector theta_hat_;
    MleOptions mle_;
    std::size_t fitted_count_ = 0;
    bool converged_ = true;
};

/// UCB-GLM: tau uniformly random rounds, then the arm maximizing
/// x'theta_hat + alpha ||x||_{V^{-1}} with theta_hat the MLE on all data.
class UcbGlm final : public Policy {
  public:
    UcbGlm(PolicyConfig cfg, LinkFunction link) : cfg_(resolve(std::move(cfg))), estimator_(cfg_, link) {}

    std::string_view name() const override { return "ucb_glm"; }
    const PolicyConfig& config() const { return cfg_; }
    const DesignState& design() const { return estimator_.design(); }
    const Vector& theta_hat() const { return estimator_.theta_hat(); }

    Selection select(int t, const std::vector<Vector>& contexts, CounterRng& rng) override {
        Selection sel;
        if (t <= cfg_.tau) {
            sel.arm = static_cast<int>(rng.below(contexts.size()));
            return sel;
        }
        if (!estimator_.design().invertible())
            throw SingularDesign("UCB-GLM: design matrix is singular after " + std::to_string(cfg_.tau) +
                                 " warm-up rounds");
        sel.mle_converged = estimator_.refresh();
        sel.arm = ucb_glm_select(estimator_.theta_hat(), estimator_.design(), cfg_.alpha, contexts);
        return sel;
    }

    void update(const Selection&, const Vector& context, double reward) override {
        estimator_.absorb(context, reward);
    }

  private:
    PolicyConfig cfg_;
    FullLogEstimator estimator_;
};

/// Greedy on x'theta_hat with probability 1 - epsilon, uniform otherwise.
/// Uniform during the tau warm-up rounds and whenever V is still singular.
class EpsilonGreedy final : public Policy {
  public:
    EpsilonGreedy(PolicyConfig cfg, LinkFunction link, bool pure = false)
        : cfg_(resolve(std::move(cfg))), estimator_(cfg_, link), pure_(pure) {
        if (pure_) cfg_.epsilon = 0.0;
    }

    std::string_view name() const override { return pure_ ? "pure_greedy" : "epsilon_greedy"; }
    const Vector& theta_hat() const { return estimator_.theta_hat(); }

    Selection select(int t, const std::vector<Vector>& contexts, CounterRng& rng) override {
        Selection sel;
        const auto k = contexts.size();
        if (t <= cfg_.tau || !estimator_.design().invertible()) {
            sel.arm = static_cast<int>(rng.below(k));
            return sel;
        }
        if (rng.uniform() < cfg_.epsilon) {
            sel.arm = static_cast<int>(rng.below(k));
            return sel;
        }
        sel.mle_converged = estimator_.refresh();
        std::vector<double> means;
        means.reserve(k);
        for (const auto& x : contexts) means.push_back(x.dot(estimator_.theta_hat()));
        sel.arm = argmax_lowest_index(means);
        return sel;
    }

    void update(const Selection&, const Vector& context, double reward) override {
        estimator_.absorb(context, reward);
    }

  private:
    PolicyConfig cfg_;
    FullLogEstimator estimator_;
    bool pure_;
};

class UniformRandom final : public Policy {
  public:
    std::string_view name() const override { return "uniform_random"; }
    Selection select(int, const std::vector<Vector>& contexts, CounterRng& rng) override {
        Selection sel;
        sel.arm = static_cast<int>(rng.below(contexts.size()));
        return sel;
    }
    void update(const Selection&, const Vector&, double) override {}
};

/// Plays argmax x'theta* using the true parameter; zero regret by construction.
class OraclePolicy final : public Policy {
  public:
    explicit OraclePolicy(Vector theta_star) : theta_star_(std::move(theta_star)) {}
    std::string_view name() const override { return "oracle"; }
    Selection select(int, const std::vector<Vector>& contexts, CounterRng&) override {
        std::vector<double> means;
        means.reserve(contexts.size());
        for (const auto& x : contexts) means.push_back(x.dot(theta_star_));
        Selection sel;
        sel.arm = argmax_lowest_index(means);
        return sel;
    }
    void update(const Selection&, const Vector&, double) override {}

  private:
    Vector theta_star_;
};

}  // namespace glm_bandit
