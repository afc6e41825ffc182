#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "glm_bandit/errors.hpp"

namespace glm_bandit {

enum class LinkKind { identity, logistic, probit };

/// Strictly increasing mean map mu with its first two derivatives and the
/// global bounds L_mu >= sup|mu'| and M_mu >= sup|mu''|.
class LinkFunction {
  public:
    constexpr explicit LinkFunction(LinkKind kind = LinkKind::logistic) : kind_(kind) {}

    constexpr LinkKind kind() const { return kind_; }

    double mean(double z) const {
        switch (kind_) {
            case LinkKind::identity:
                return z;
            case LinkKind::logistic:
                return sigmoid(z);
            case LinkKind::probit:
                return 0.5 * std::erfc(-z / std::sqrt(2.0));
        }
        return z;
    }

    double operator()(double z) const { return mean(z); }

    double derivative(double z) const {
        switch (kind_) {
            case LinkKind::identity:
                return 1.0;
            case LinkKind::logistic: {
                const double p = sigmoid(z);
                return p * (1.0 - p);
            }
            case LinkKind::probit:
                return normal_density(z);
        }
        return 1.0;
    }

    double second_derivative(double z) const {
        switch (kind_) {
            case LinkKind::identity:
                return 0.0;
            case LinkKind::logistic: {
                const double p = sigmoid(z);
                return p * (1.0 - p) * (1.0 - 2.0 * p);
            }
            case LinkKind::probit:
                return -z * normal_density(z);
        }
        return 0.0;
    }

    /// L_mu. The logistic value 1/4 is the conventional bound.
    double lipschitz_bound() const {
        switch (kind_) {
            case LinkKind::identity:
                return 1.0;
            case LinkKind::logistic:
                return 0.25;
            case LinkKind::probit:
                return normal_density(0.0);
        }
        return 1.0;
    }

    /// M_mu. For probit, |z phi(z)| peaks at z = 1.
    double curvature_bound() const {
        switch (kind_) {
            case LinkKind::identity:
                return 0.0;
            case LinkKind::logistic:
                return 0.25;
            case LinkKind::probit:
                return normal_density(1.0);
        }
        return 0.0;
    }

    std::string_view name() const {
        switch (kind_) {
            case LinkKind::identity:
                return "identity";
            case LinkKind::logistic:
                return "logistic";
            case LinkKind::probit:
                return "probit";
        }
        return "unknown";
    }

  private:
    static double sigmoid(double z) {
        if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
        const double e = std::exp(z);
        return e / (1.0 + e);
    }

    static double normal_density(double z) {
        return std::exp(-0.5 * z * z) / std::sqrt(2.0 * 3.14159265358979323846);
    }

    LinkKind kind_;
};

inline double link_eval(const LinkFunction& link, double z) { return link.mean(z); }

inline LinkFunction parse_link(std::string_view name) {
    if (name == "identity") return LinkFunction(LinkKind::identity);
    if (name == "logistic") return LinkFunction(LinkKind::logistic);
    if (name == "probit") return LinkFunction(LinkKind::probit);
    throw InvalidConfig("unknown link function '" + std::string(name) + "'");
}

/// kappa = inf mu'(z) over |z| <= ||theta*|| + 1. All built-in links have an
/// even, unimodal derivative, so the infimum sits at the interval endpoint.
inline double compute_kappa(const LinkFunction& link, double theta_star_norm) {
    if (!(theta_star_norm >= 0.0)) throw InvalidConfig("theta_star_norm must be nonnegative");
    return link.derivative(theta_star_norm + 1.0);
}

}  // namespace glm_bandit
