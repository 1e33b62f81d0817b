#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fxtda/common.hpp"
#include "fxtda/stl.hpp"

using namespace fxtda;

namespace {

Eigen::VectorXd sine(int n, double amplitude = 1.0) {
    Eigen::VectorXd x(n);
    for (int t = 0; t < n; ++t) x(t) = amplitude * std::sin(2.0 * std::numbers::pi * t / 12.0);
    return x;
}

}  // namespace

TEST(Stl, DefaultSpans) {
    EXPECT_EQ(next_odd(1.5 * 12 / (1 - 1.5 / 7)), 23);
    EXPECT_EQ(next_odd(12), 13);
    EXPECT_EQ(next_odd(7), 7);
}

TEST(Stl, ComponentsResumToInput) {
    std::mt19937 rng(3);
    std::normal_distribution<double> z;
    Eigen::VectorXd x(266);
    double level = 1.0;
    for (int t = 0; t < 266; ++t) x(t) = (level += 0.05 * z(rng));
    const auto d = stl_decompose(x);
    EXPECT_LE((d.trend + d.seasonal + d.residual - x).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Stl, RecoversPureSine) {
    const Eigen::VectorXd x = sine(120);
    const auto d = stl_decompose(x);
    EXPECT_LT((d.seasonal - x).cwiseAbs().maxCoeff(), 0.05);
    EXPECT_LT(d.trend.cwiseAbs().maxCoeff(), 0.05);
}

TEST(Stl, RecoversLinearRamp) {
    Eigen::VectorXd x(120);
    for (int t = 0; t < 120; ++t) x(t) = 0.01 * t;
    const auto d = stl_decompose(x);
    EXPECT_LT((d.trend - x).segment(12, 96).cwiseAbs().maxCoeff(), 0.05);
    EXPECT_LT(d.seasonal.cwiseAbs().maxCoeff(), 0.05);
}

TEST(Stl, SineOnRampResidualIsSmall) {
    Eigen::VectorXd x = sine(144, 0.5);
    for (int t = 0; t < 144; ++t) x(t) += 0.02 * t;
    const auto d = stl_decompose(x);
    const double var_x = (x.array() - x.mean()).square().mean();
    const double var_r = (d.residual.array() - d.residual.mean()).square().mean();
    EXPECT_LT(var_r, 0.01 * var_x);
    // seasonal roughly averages to zero over each full cycle
    for (int c = 0; c + 12 <= 144; c += 12) EXPECT_LT(std::abs(d.seasonal.segment(c, 12).mean()), 0.05);
}

TEST(Stl, ShortSeriesIsInsufficient) {
    try {
        stl_decompose(sine(23));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InsufficientData);
    }
}
