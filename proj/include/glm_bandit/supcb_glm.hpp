#pragma once

#include <bit>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "glm_bandit/errors.hpp"
#include "glm_bandit/linalg.hpp"
#include "glm_bandit/link.hpp"
#include "glm_bandit/mle.hpp"
#include "glm_bandit/policy.hpp"

namespace glm_bandit {

/// Per-arm mean estimates m_a = x_a'theta_hat and widths w_a = alpha ||x_a||_{V^{-1}}.
struct ArmScores {
    std::vector<double> means;
    std::vector<double> widths;
    Vector theta_hat;
    bool converged = true;
};

inline ArmScores scores_from_estimate(const Vector& theta_hat, const Matrix& v_inverse, double alpha,
                                      const std::vector<Vector>& contexts) {
    ArmScores out;
    out.theta_hat = theta_hat;
    out.means.reserve(contexts.size());
    out.widths.reserve(contexts.size());
    for (const auto& x : contexts) {
        out.means.push_back(x.dot(theta_hat));
        out.widths.push_back(alpha * weighted_norm(x, v_inverse));
    }
    return out;
}

/// CB-GLM: fits the MLE on exactly the observations at `index_set` (zero-based
/// positions in `log`) and scores every context against that fit.
inline ArmScores cb_glm_scores(const std::vector<std::size_t>& index_set, const std::vector<Vector>& contexts,
                               double alpha, const ObservationLog& log, const LinkFunction& link,
                               const MleOptions& options = {}) {
    if (index_set.empty()) throw InvalidConfig("cb_glm_scores needs a nonempty index set");
    for (std::size_t i : index_set)
        if (i >= log.size()) throw InvalidConfig("cb_glm_scores index out of range");
    const ObservationLog sub = log.subset(index_set);
    DesignState design(log.dim());
    for (std::size_t i = 0; i < sub.size(); ++i) design.absorb(sub.feature(i), sub.reward(i));
    if (!design.invertible()) throw SingularDesign("CB-GLM: restricted design matrix is singular");
    const MleResult fit = mle_fit(link, sub, Vector::Zero(log.dim()), options);
    ArmScores out = scores_from_estimate(fit.theta_hat, design.inverse(), alpha, contexts);
    out.converged = fit.converged;
    return out;
}

/// Where a SupCB-GLM round ended up.
struct StageOutcome {
    int arm = 0;
    /// 0 for the exploit set, s >= 1 for stage s.
    int assigned_set = 0;
    int stage = 1;
    /// True when the stage budget S ran out and the exploit action was forced.
    bool forced = false;
    /// The candidate sets A_1, ..., A_{stage} that were visited.
    std::vector<std::vector<int>> candidate_sets;
    /// The stage scores that decided the round.
    ArmScores decisive_scores;
};

/// The SupCB-GLM stage loop for one round. `stage_scores(s)` returns scores
/// for all K arms from the stage-s fit. Ties go to the lowest arm index.
template <class StageScores>
StageOutcome run_stage_loop(int K, int S, int T, StageScores&& stage_scores) {
    if (S < 1) throw InvalidConfig("SupCB-GLM needs at least one stage (T >= 2)");
    const double exploit_width = 1.0 / std::sqrt(static_cast<double>(T));
    std::vector<int> active(static_cast<std::size_t>(K));
    std::iota(active.begin(), active.end(), 0);

    StageOutcome out;
    for (int s = 1;; ++s) {
        ArmScores scores = stage_scores(s);
        out.candidate_sets.push_back(active);
        const double level = std::ldexp(1.0, -s);

        for (int a : active) {
            if (scores.widths[static_cast<std::size_t>(a)] > level) {
                out.arm = a;
                out.assigned_set = s;
                out.stage = s;
                out.decisive_scores = std::move(scores);
                return out;
            }
        }

        int leader = active.front();
        bool all_narrow = true;
        for (int a : active) {
            if (scores.means[static_cast<std::size_t>(a)] > scores.means[static_cast<std::size_t>(leader)]) leader = a;
            if (scores.widths[static_cast<std::size_t>(a)] > exploit_width) all_narrow = false;
        }
        if (all_narrow || s == S) {
            out.arm = leader;
            out.assigned_set = 0;
            out.stage = s;
            out.forced = !all_narrow;
            out.decisive_scores = std::move(scores);
            return out;
        }

        const double cutoff = scores.means[static_cast<std::size_t>(leader)] - 2.0 * level;
        std::vector<int> next;
        for (int a : active)
            if (scores.means[static_cast<std::size_t>(a)] >= cutoff) next.push_back(a);
        active = std::move(next);
    }
}

/// SupCB-GLM. Rounds 1..tau are uniformly random and form the warm-up set F.
/// Afterwards each stage s fits on F plus its own round set Psi_s, so rewards
/// inside one stage set are chosen without looking at that set's rewards.
class SupCbGlm final : public Policy {
  public:
    struct StageRecord {
        int stage;
        ArmScores scores;
    };

    SupCbGlm(PolicyConfig cfg, LinkFunction link)
        : cfg_(resolve(std::move(cfg))),
          link_(link),
          stage_count_(cfg_.T >= 2 ? static_cast<int>(std::bit_width(static_cast<unsigned>(cfg_.T))) - 1 : 0),
          warmup_design_(cfg_.ridge > 0.0 ? DesignState(cfg_.d, cfg_.ridge) : DesignState(cfg_.d)),
          sets_(static_cast<std::size_t>(stage_count_) + 1) {
        if (stage_count_ < 1) throw InvalidConfig("SupCB-GLM needs T >= 2");
        mle_ = cfg_.mle;
        mle_.ridge = cfg_.ridge;
    }

    std::string_view name() const override { return "supcb_glm"; }
    const PolicyConfig& config() const { return cfg_; }

    /// S = floor(log2 T).
    int stage_count() const { return stage_count_; }

    /// Design built from the warm-up rounds alone.
    const DesignState& warmup_design() const { return warmup_design_; }

    /// Round indices (1-based) in F.
    const std::vector<int>& warmup_rounds() const { return warmup_; }

    /// Round indices in Psi_0, Psi_1, ..., Psi_S.
    const std::vector<std::vector<int>>& stage_sets() const { return sets_; }

    /// Scores computed at each stage visited by the most recent selection.
    const std::vector<StageRecord>& last_stage_records() const { return last_records_; }

    Selection select(int t, const std::vector<Vector>& contexts, CounterRng& rng) override {
        Selection sel;
        last_round_ = t;
        last_records_.clear();
        if (t <= cfg_.tau) {
            sel.arm = static_cast<int>(rng.below(contexts.size()));
            sel.assigned_set = -1;
            return sel;
        }
        bool converged = true;
        const StageOutcome outcome = run_stage_loop(cfg_.K, stage_count_, cfg_.T, [&](int s) {
            ArmScores scores = stage_scores(s, contexts);
            converged = converged && scores.converged;
            last_records_.push_back({s, scores});
            return scores;
        });
        sel.arm = outcome.arm;
        sel.stage = outcome.stage;
        sel.assigned_set = outcome.assigned_set;
        sel.mle_converged = converged;
        return sel;
    }

    void update(const Selection& sel, const Vector& context, double reward) override {
        if (sel.assigned_set < 0) {
            warmup_design_.absorb(context, reward);
            warmup_.push_back(last_round_);
            return;
        }
        sets_[static_cast<std::size_t>(sel.assigned_set)].push_back(last_round_);
        if (sel.assigned_set >= 1) stage(sel.assigned_set).design.absorb(context, reward);
    }

  private:
    struct StageFit {
        DesignState design;
        Vector theta;
        std::size_t fitted_count = 0;
        bool converged = true;
    };

    StageFit& stage(int s) {
        if (stages_.empty()) {
            // F is complete once the first post-warm-up round arrives.
            stages_.reserve(static_cast<std::size_t>(stage_count_));
            for (int i = 0; i < stage_count_; ++i)
                stages_.push_back({warmup_design_, Vector::Zero(cfg_.d), 0, true});
        }
        return stages_[static_cast<std::size_t>(s - 1)];
    }

    ArmScores stage_scores(int s, const std::vector<Vector>& contexts) {
        StageFit& fit = stage(s);
        const DesignState* design = &fit.design;
        if (!design->invertible()) {
            design = &warmup_design_;
            if (!design->invertible())
                throw SingularDesign("SupCB-GLM: stage " + std::to_string(s) + " and warm-up designs are singular");
        }
        if (design == &fit.design) {
            if (fit.fitted_count != design->count()) {
                MleResult r = mle_fit(link_, design->log(), fit.theta, mle_);
                fit.theta = std::move(r.theta_hat);
                fit.converged = r.converged;
                fit.fitted_count = design->count();
            }
            ArmScores out = scores_from_estimate(fit.theta, design->inverse(), cfg_.alpha, contexts);
            out.converged = fit.converged;
            return out;
        }
        const MleResult r = mle_fit(link_, design->log(), Vector::Zero(cfg_.d), mle_);
        ArmScores out = scores_from_estimate(r.theta_hat, design->inverse(), cfg_.alpha, contexts);
        out.converged = r.converged;
        return out;
    }

    PolicyConfig cfg_;
    LinkFunction link_;
    MleOptions mle_;
    int stage_count_;
    DesignState warmup_design_;
    std::vector<int> warmup_;
    std::vector<std::vector<int>> sets_;
    std::vector<StageFit> stages_;
    std::vector<StageRecord> last_records_;
    int last_round_ = 0;
};

}  // namespace glm_bandit
