#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fxtda/common.hpp"
#include "fxtda/summaries.hpp"
#include "oracles.hpp"

using namespace fxtda;

namespace {

PersistenceDiagram diagram(std::vector<PersistencePair> pairs, int dim = 1, double eps = 4.0) {
    PersistenceDiagram d;
    d.dimension = dim;
    d.pairs = std::move(pairs);
    d.eps_max = eps;
    return d;
}

PersistenceDiagram random_diagram(std::mt19937_64& rng, int max_points) {
    std::uniform_int_distribution<int> count(0, max_points);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    std::vector<PersistencePair> pairs;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
        const double b = u(rng);
        pairs.push_back({b, b + 0.05 + u(rng)});
    }
    return diagram(pairs);
}

std::vector<oracle::Interval> intervals(const PersistenceDiagram& d) {
    std::vector<oracle::Interval> out;
    for (const auto& p : d.pairs) out.push_back({p.birth, p.death});
    return out;
}

}  // namespace

TEST(Barcode, SortsByBirthThenLongestFirst) {
    const auto bars = barcode(diagram({{0, 1}, {0, 2}, {-1, 0}}));
    ASSERT_EQ(bars.size(), 3u);
    EXPECT_EQ(bars[0], (PersistencePair{-1, 0}));
    EXPECT_EQ(bars[1], (PersistencePair{0, 2}));
    EXPECT_EQ(bars[2], (PersistencePair{0, 1}));
    EXPECT_TRUE(barcode(diagram({})).empty());
}

TEST(Landscape, SingleTent) {
    const auto l = landscape(diagram({{0, 2}}), 3, 5, 2.0);  // grid 0, .5, 1, 1.5, 2
    EXPECT_DOUBLE_EQ(l.layers(0, 2), 1.0);
    EXPECT_DOUBLE_EQ(l.layers(0, 1), 0.5);
    EXPECT_EQ(l.layers.row(1).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(l.layers.row(2).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Landscape, DisjointTents) {
    const auto l = landscape(diagram({{0, 1}, {2, 3}}), 2, 7, 3.0);  // step 0.5
    EXPECT_DOUBLE_EQ(l.layers(0, 1), 0.5);
    EXPECT_DOUBLE_EQ(l.layers(0, 5), 0.5);
    EXPECT_EQ(l.layers.row(1).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Landscape, MatchesKthMaxOracleAndLayersDominate) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const auto d = random_diagram(rng, 8);
        const auto l = landscape(d, 3, 50, 4.0);
        for (Eigen::Index g = 0; g < l.grid.size(); ++g) {
            const double t = l.grid(g);
            std::vector<double> tents;
            for (const auto& p : d.pairs) tents.push_back(std::max(0.0, std::min(t - p.birth, p.death - t)));
            std::sort(tents.rbegin(), tents.rend());
            tents.resize(3, 0.0);
            for (int k = 0; k < 3; ++k) EXPECT_NEAR(l.layers(k, g), tents[static_cast<std::size_t>(k)], 1e-12);
            EXPECT_GE(l.layers(0, g), l.layers(1, g));
            EXPECT_GE(l.layers(1, g), l.layers(2, g));
            EXPECT_GE(l.layers(2, g), 0.0);
        }
    }
}

TEST(BettiCurve, HalfOpenStabbing) {
    const auto d = diagram({{0, 1}, {0, 2}}, 0, 2.0);
    EXPECT_EQ(betti_number(d, 0.5), 2);
    EXPECT_EQ(betti_number(d, 1.5), 1);
    EXPECT_EQ(betti_number(d, 1.0), 1);
    const auto c = betti_curve(diagram({}), 10);
    EXPECT_TRUE(std::all_of(c.counts.begin(), c.counts.end(), [](long v) { return v == 0; }));
}

TEST(BettiCurve, MatchesScanOracleAndCountsEssentials) {
    std::mt19937_64 rng(4);
    auto d = random_diagram(rng, 12);
    d.essential_births = {0.5};
    const auto c = betti_curve(d, 40);
    for (Eigen::Index g = 0; g < c.grid.size(); ++g) {
        const double t = c.grid(g);
        long expected = t >= 0.5 ? 1 : 0;
        for (const auto& p : d.pairs) expected += p.birth <= t && t < p.death;
        EXPECT_EQ(c.counts[static_cast<std::size_t>(g)], expected);
    }
}

TEST(Wasserstein, ClosedForms) {
    const auto a = diagram({{0, 1}});
    EXPECT_NEAR(wasserstein(a, diagram({})), std::sqrt(0.5), 1e-15);
    EXPECT_EQ(wasserstein(a, a), 0.0);
    WassersteinOptions linf{2.0, std::numeric_limits<double>::infinity()};
    EXPECT_NEAR(wasserstein(a, diagram({}), linf), 0.5, 1e-15);
}

TEST(Wasserstein, DimensionMismatchThrows) {
    EXPECT_THROW(wasserstein(diagram({}, 0), diagram({}, 1)), Error);
}

TEST(Wasserstein, MatchesExhaustiveMatchingAndDiagonalBound) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 40; ++trial) {
        const auto a = random_diagram(rng, 4), b = random_diagram(rng, 4);
        for (const double p : {1.0, 2.0}) {
            const WassersteinOptions o{p, 2.0};
            const double w = wasserstein(a, b, o);
            EXPECT_NEAR(w, oracle::wasserstein_exhaustive(intervals(a), intervals(b), p, 2.0), 1e-9);
            EXPECT_EQ(w, wasserstein(b, a, o));
            EXPECT_LE(w, wasserstein(a, diagram({}), o) + wasserstein(diagram({}), b, o) + 1e-12);
        }
        EXPECT_NEAR(bottleneck(a, b), oracle::bottleneck_exhaustive(intervals(a), intervals(b)), 1e-12);
    }
}

TEST(Wasserstein, IgnoresEssentialClasses) {
    auto a = diagram({{0, 1}});
    auto b = a;
    b.essential_births = {0.2, 0.3};
    EXPECT_EQ(wasserstein(a, b), 0.0);
}

TEST(SolveAssignment, SmallMatrix) {
    Eigen::MatrixXd c(3, 3);
    c << 4, 1, 3, 2, 0, 5, 3, 2, 2;
    const auto rows = solve_assignment(c);
    double total = 0;
    for (int i = 0; i < 3; ++i) total += c(i, rows[static_cast<std::size_t>(i)]);
    EXPECT_EQ(total, 5.0);
}

TEST(DiagramDistanceMatrix, WeightedSumOfDegrees) {
    std::mt19937_64 rng(6);
    std::vector<std::vector<PersistenceDiagram>> dg;
    for (int i = 0; i < 3; ++i) {
        auto h0 = random_diagram(rng, 4);
        h0.dimension = 0;
        dg.push_back({h0, random_diagram(rng, 4)});
    }
    DiagramDistanceOptions opts;
    opts.dim_weights = {0.5, 2.0};
    opts.threads = 2;
    const auto m = diagram_distance_matrix({"A", "B", "C"}, dg, opts);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) {
            const double expected = i == j ? 0.0
                                           : 0.5 * oracle::wasserstein_exhaustive(intervals(dg[i][0]), intervals(dg[j][0]), 2, 2) +
                                                 2.0 * oracle::wasserstein_exhaustive(intervals(dg[i][1]), intervals(dg[j][1]), 2, 2);
            EXPECT_NEAR(m.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), expected, 1e-9);
        }
    EXPECT_TRUE(m.values == m.values.transpose());
}

TEST(DiagramDistanceMatrix, IdenticalDiagramsGiveZero) {
    std::mt19937_64 rng(7);
    const auto h1 = random_diagram(rng, 5);
    auto h0 = random_diagram(rng, 5);
    h0.dimension = 0;
    const std::vector<std::vector<PersistenceDiagram>> dg(4, {h0, h1});
    const auto m = diagram_distance_matrix({"A", "B", "C", "D"}, dg);
    EXPECT_EQ(m.values.cwiseAbs().maxCoeff(), 0.0);
}

TEST(DiagramDistanceMatrix, MissingDiagramNamesCurrency) {
    std::vector<std::vector<PersistenceDiagram>> dg{{diagram({}, 0), diagram({})}, {diagram({}, 0)}};
    try {
        diagram_distance_matrix({"AAA", "BBB"}, dg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::MissingDiagram);
        EXPECT_NE(std::string(e.what()).find("BBB"), std::string::npos);
    }
}
