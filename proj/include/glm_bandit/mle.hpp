#pragma once

#include <cmath>

#include "glm_bandit/errors.hpp"
#include "glm_bandit/linalg.hpp"
#include "glm_bandit/link.hpp"

namespace glm_bandit {

struct MleOptions {
    double tolerance = 1e-8;
    int max_iterations = 100;
    /// Optional penalty: solves sum (Y_i - mu(X_i'theta)) X_i - ridge * theta = 0.
    double ridge = 0.0;
};

struct MleResult {
    Vector theta_hat;
    int iterations = 0;
    bool converged = false;
    /// l-infinity norm of the score at theta_hat.
    double final_score_norm = 0.0;
};

/// Score of the GLM log-likelihood, sum (Y_i - mu(X_i'theta)) X_i - ridge * theta.
inline Vector mle_score(const LinkFunction& link, const ObservationLog& log, const Vector& theta,
                        double ridge = 0.0) {
    const auto x = log.features();
    const Vector z = x * theta;
    Vector residual(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) residual(i) = log.reward(static_cast<std::size_t>(i)) - link.mean(z(i));
    Vector score = x.transpose() * residual;
    if (ridge != 0.0) score -= ridge * theta;
    return score;
}

/// Fisher information sum mu'(X_i'theta) X_i X_i' (+ ridge I).
inline Matrix fisher_information(const LinkFunction& link, const ObservationLog& log, const Vector& theta,
                                 double ridge = 0.0) {
    const auto x = log.features();
    const Vector z = x * theta;
    Vector weight(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) weight(i) = link.derivative(z(i));
    Matrix fisher = x.transpose() * weight.asDiagonal() * x;
    if (ridge != 0.0) fisher.diagonal().array() += ridge;
    return fisher;
}

/// Solves the score equation by damped Newton: the step matrix is the Fisher
/// information, and each step is halved until the Euclidean score norm
/// decreases. Convergence is declared on the l-infinity score norm.
///
/// Running out of iterations is not an error: the last iterate comes back
/// with converged = false and the caller decides what to do with it.
inline MleResult mle_fit(const LinkFunction& link, const ObservationLog& log, const Vector& warm_start,
                         const MleOptions& options = {}) {
    constexpr double kSingularThreshold = 1e-10;
    constexpr double kFallbackRidge = 1e-8;
    constexpr int kMaxHalvings = 60;

    if (log.empty()) throw InvalidConfig("mle_fit needs at least one observation");
    if (warm_start.size() != log.dim()) throw InvalidConfig("warm start has wrong dimension");

    MleResult result;
    result.theta_hat = warm_start;
    Vector score = mle_score(link, log, result.theta_hat, options.ridge);
    double score_inf = score.lpNorm<Eigen::Infinity>();

    while (score_inf > options.tolerance && result.iterations < options.max_iterations) {
        Matrix fisher = fisher_information(link, log, result.theta_hat, options.ridge);
        if (min_eigenvalue(fisher) < kSingularThreshold) {
            fisher.diagonal().array() += kFallbackRidge;
            if (min_eigenvalue(fisher) < kSingularThreshold)
                throw SingularFisher("Fisher information is singular after ridge fallback");
        }
        const Vector step = fisher.llt().solve(score);

        const double score_l2 = score.norm();
        double eta = 1.0;
        bool accepted = false;
        for (int halving = 0; halving <= kMaxHalvings; ++halving, eta *= 0.5) {
            const Vector candidate = result.theta_hat + eta * step;
            Vector candidate_score = mle_score(link, log, candidate, options.ridge);
            if (candidate_score.allFinite() && candidate_score.norm() < score_l2) {
                result.theta_hat = candidate;
                score = std::move(candidate_score);
                accepted = true;
                break;
            }
        }
        ++result.iterations;
        score_inf = score.lpNorm<Eigen::Infinity>();
        if (!accepted) break;
    }

    result.final_score_norm = score_inf;
    result.converged = score_inf <= options.tolerance;
    return result;
}

inline MleResult mle_fit(const LinkFunction& link, const ObservationLog& log, const Vector& warm_start,
                         double tolerance, int max_iterations) {
    MleOptions options;
    options.tolerance = tolerance;
    options.max_iterations = max_iterations;
    return mle_fit(link, log, warm_start, options);
}

}  // namespace glm_bandit
