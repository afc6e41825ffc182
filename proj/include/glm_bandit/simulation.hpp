#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "glm_bandit/environment.hpp"
#include "glm_bandit/policy.hpp"
#include "glm_bandit/rng.hpp"

namespace glm_bandit {

struct RoundRecord {
    int t = 0;
    int arm = 0;
    int optimal_arm = 0;
    double reward = 0.0;
    double inst_regret = 0.0;
    double cum_regret = 0.0;
    bool mle_converged = true;
    std::optional<int> stage;

    bool operator==(const RoundRecord&) const = default;
};

struct RegretTrace {
    /// Rows kept by trace thinning; cumulative regret is exact on every row.
    std::vector<RoundRecord> rows;
    double final_cum_regret = 0.0;
    int nonconverged_rounds = 0;
};

/// True for rounds kept in a thinned trace: every `record_every`-th round and
/// the last one.
inline bool is_recorded_round(int t, int T, int record_every) { return t % record_every == 0 || t == T; }

/// Everything an observer sees about one round, before the policy is updated.
struct RoundView {
    int t;
    const std::vector<Vector>& contexts;
    const Selection& selection;
    double reward;
    double inst_regret;
};

/// Runs T rounds of the contextual bandit protocol. `observer(view)` is called
/// after the arm is chosen and before the policy observes the reward.
template <class Observer>
RegretTrace simulate(const Environment& env, Policy& policy, int T, std::uint64_t seed, std::uint32_t replication,
                     int record_every, Observer&& observer) {
    if (T < 1) throw InvalidConfig("T must be at least 1");
    if (record_every < 1) throw InvalidConfig("record_every must be at least 1");
    RegretTrace trace;
    double cumulative = 0.0;
    for (int t = 1; t <= T; ++t) {
        const auto round = static_cast<std::uint32_t>(t);
        const std::vector<Vector> contexts = env.sample_contexts(round);
        CounterRng rng(seed, replication, Purpose::policy, round);
        const Selection sel = policy.select(t, contexts, rng);
        const Vector& chosen = contexts[static_cast<std::size_t>(sel.arm)];
        const double reward = env.sample_reward(chosen, round);
        const double regret = env.instantaneous_regret(contexts, sel.arm);
        cumulative += regret;
        if (!sel.mle_converged) ++trace.nonconverged_rounds;

        observer(RoundView{t, contexts, sel, reward, regret});

        if (is_recorded_round(t, T, record_every)) {
            trace.rows.push_back(RoundRecord{t, sel.arm, env.optimal_arm(contexts), reward, regret, cumulative,
                                             sel.mle_converged, sel.stage});
        }
        policy.update(sel, chosen, reward);
    }
    trace.final_cum_regret = cumulative;
    return trace;
}

inline RegretTrace simulate(const Environment& env, Policy& policy, int T, std::uint64_t seed,
                            std::uint32_t replication, int record_every = 1) {
    return simulate(env, policy, T, seed, replication, record_every, [](const RoundView&) {});
}

}  // namespace glm_bandit
