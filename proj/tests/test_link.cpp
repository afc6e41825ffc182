#include <gtest/gtest.h>

#include <cmath>

#include "glm_bandit/errors.hpp"
#include "glm_bandit/link.hpp"

using namespace glm_bandit;

namespace {
const LinkKind kAll[] = {LinkKind::identity, LinkKind::logistic, LinkKind::probit};
}

TEST(Link, SpotValues) {
    const LinkFunction logistic(LinkKind::logistic);
    const LinkFunction identity(LinkKind::identity);
    EXPECT_DOUBLE_EQ(link_eval(logistic, 0.0), 0.5);
    EXPECT_DOUBLE_EQ(link_eval(identity, 0.37), 0.37);
    EXPECT_NEAR(link_eval(logistic, std::log(3.0)), 0.75, 1e-15);
    EXPECT_NEAR(LinkFunction(LinkKind::probit).mean(0.0), 0.5, 1e-15);
}

TEST(Link, LogisticStaysInOpenInterval) {
    const LinkFunction logistic(LinkKind::logistic);
    for (double z = -30.0; z <= 30.0; z += 0.5) {
        EXPECT_GT(logistic.mean(z), 0.0);
        EXPECT_LT(logistic.mean(z), 1.0);
    }
}

TEST(Link, StrictlyIncreasingWithPositiveDerivative) {
    for (LinkKind kind : kAll) {
        const LinkFunction link(kind);
        double prev = link.mean(-10.0);
        for (int i = 1; i <= 2000; ++i) {
            const double z = -10.0 + 0.01 * i;
            const double m = link.mean(z);
            // Far in the right tail the mean rounds to 1; compare the mirrored
            // left tail there, which carries the same ordering.
            const bool increasing = m > prev || (m == prev && link.mean(-z) < link.mean(-(z - 0.01)));
            EXPECT_TRUE(increasing) << link.name() << " at " << z;
            EXPECT_GT(link.derivative(z), 0.0) << link.name() << " at " << z;
            prev = m;
        }
    }
}

TEST(Link, DerivativesWithinDeclaredBounds) {
    for (LinkKind kind : kAll) {
        const LinkFunction link(kind);
        for (int i = 0; i <= 2000; ++i) {
            const double z = -10.0 + 0.01 * i;
            EXPECT_LE(std::abs(link.derivative(z)), link.lipschitz_bound() + 1e-15) << link.name();
            EXPECT_LE(std::abs(link.second_derivative(z)), link.curvature_bound() + 1e-15) << link.name();
        }
    }
    EXPECT_DOUBLE_EQ(LinkFunction(LinkKind::logistic).lipschitz_bound(), 0.25);
    EXPECT_DOUBLE_EQ(LinkFunction(LinkKind::logistic).curvature_bound(), 0.25);
}

TEST(Link, DerivativesMatchFiniteDifferences) {
    const double h = 1e-5;
    for (LinkKind kind : kAll) {
        const LinkFunction link(kind);
        for (int i = 0; i <= 400; ++i) {
            const double z = -10.0 + 0.05 * i;
            const double fd1 = (link.mean(z + h) - link.mean(z - h)) / (2.0 * h);
            const double fd2 = (link.derivative(z + h) - link.derivative(z - h)) / (2.0 * h);
            EXPECT_LE(std::abs(link.derivative(z) - fd1), 1e-6) << link.name() << " at " << z;
            EXPECT_LE(std::abs(link.second_derivative(z) - fd2), 1e-6) << link.name() << " at " << z;
        }
    }
}

TEST(Link, Kappa) {
    EXPECT_DOUBLE_EQ(compute_kappa(LinkFunction(LinkKind::identity), 0.0), 1.0);
    EXPECT_DOUBLE_EQ(compute_kappa(LinkFunction(LinkKind::identity), 7.5), 1.0);
    const double e = std::exp(1.0);
    EXPECT_NEAR(compute_kappa(LinkFunction(LinkKind::logistic), 0.0), e / ((1 + e) * (1 + e)), 1e-15);
    EXPECT_NEAR(compute_kappa(LinkFunction(LinkKind::logistic), 0.0), 0.19661, 1e-5);
    EXPECT_NEAR(compute_kappa(LinkFunction(LinkKind::logistic), 1.0), 0.10499, 1e-5);
    EXPECT_THROW(compute_kappa(LinkFunction(LinkKind::logistic), -0.1), InvalidConfig);
}

TEST(Link, KappaIsTheInfimumOverTheInterval) {
    for (LinkKind kind : kAll) {
        const LinkFunction link(kind);
        for (double norm : {0.0, 0.5, 1.0, 2.0}) {
            double inf = link.derivative(0.0);
            for (int i = 0; i <= 1000; ++i) inf = std::min(inf, link.derivative(-(norm + 1) + 0.002 * (norm + 1) * i));
            EXPECT_NEAR(compute_kappa(link, norm), inf, 1e-12) << link.name();
        }
    }
}

TEST(Link, Parse) {
    EXPECT_EQ(parse_link("probit").kind(), LinkKind::probit);
    EXPECT_EQ(parse_link("logistic").name(), "logistic");
    EXPECT_THROW(parse_link("cauchit"), InvalidConfig);
}
