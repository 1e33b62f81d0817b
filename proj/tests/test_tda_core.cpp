#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <cmath>
#include <random>
#include <sstream>

#include "fxtda/common.hpp"
#include "fxtda/summaries.hpp"
#include "fxtda/tda_core.hpp"
#include "oracles.hpp"

using namespace fxtda;

namespace {

Eigen::MatrixXd random_cloud(int n, int d, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::MatrixXd p(n, d);
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = u(rng);
    return p;
}

std::vector<double> deaths(const PersistenceDiagram& d) {
    std::vector<double> out;
    for (const auto& p : d.pairs) out.push_back(p.death);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::pair<double, double>> sorted_pairs(const PersistenceDiagram& d) {
    std::vector<std::pair<double, double>> out;
    for (const auto& p : d.pairs) out.emplace_back(p.birth, p.death);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::pair<double, double>> sorted_pairs(const oracle::Diagram& d) {
    std::vector<std::pair<double, double>> out;
    for (const auto& p : d.finite) out.emplace_back(p.birth, p.death);
    std::sort(out.begin(), out.end());
    return out;
}

DistanceMatrix square() {
    Eigen::MatrixXd p(4, 2);
    p << 0, 0, 1, 0, 1, 1, 0, 1;
    PointCloud c{p, "square", 2, 1};
    return pairwise_distances(c);
}

}  // namespace

TEST(DelayEmbed, UnrollsDefinition) {
    Eigen::VectorXd x(5);
    x << 1, 2, 3, 4, 5;
    const auto c = delay_embed(x, 2, 1, "x");
    Eigen::MatrixXd expected(4, 2);
    expected << 2, 1, 3, 2, 4, 3, 5, 4;
    EXPECT_TRUE(c.points == expected);
    EXPECT_EQ(c.window, 2);
}

TEST(DelayEmbed, WindowOneIsIdentityAndDelayStrides) {
    Eigen::VectorXd x(6);
    x << 1, 2, 3, 4, 5, 6;
    EXPECT_TRUE(delay_embed(x, 1, 1).points == x);
    const auto c = delay_embed(x, 3, 2);
    ASSERT_EQ(c.size(), 2);
    EXPECT_EQ(c.points(0, 0), 5);
    EXPECT_EQ(c.points(0, 1), 3);
    EXPECT_EQ(c.points(0, 2), 1);
}

TEST(DelayEmbed, StudyLengthGives263Points) {
    const auto c = delay_embed(Eigen::VectorXd::LinSpaced(266, 0, 1), 4, 1);
    EXPECT_EQ(c.size(), 263);
    EXPECT_EQ(c.points.cols(), 4);
}

TEST(DelayEmbed, TooShortReportsRequiredLength) {
    try {
        delay_embed(Eigen::VectorXd::Zero(6), 4, 2, "AAA");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Embedding);
        EXPECT_NE(std::string(e.what()).find("7"), std::string::npos) << e.what();
    }
}

TEST(PairwiseDistances, SquareAndDuplicate) {
    const auto d = square();
    std::vector<double> upper;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) upper.push_back(d.values(i, j));
    std::sort(upper.begin(), upper.end());
    EXPECT_EQ(upper[3], 1.0);
    EXPECT_DOUBLE_EQ(upper[4], std::sqrt(2.0));
    Eigen::MatrixXd p(2, 3);
    p << 1, 2, 3, 1, 2, 3;
    EXPECT_EQ(pairwise_distances(PointCloud{p, "", 3, 1}).values(0, 1), 0.0);
}

TEST(PairwiseDistances, MatchesScalarOracle) {
    std::mt19937_64 rng(1);
    const Eigen::MatrixXd p = random_cloud(25, 4, rng);
    const auto d = pairwise_distances(PointCloud{p, "", 4, 1});
    EXPECT_LE((d.values - oracle::euclidean(p)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_TRUE(d.values == d.values.transpose());
}

TEST(RipsPersistence, CollinearPoints) {
    Eigen::MatrixXd p(3, 1);
    p << 0, 1, 3;
    const auto dg = rips_persistence(pairwise_distances(PointCloud{p, "", 1, 1}), 1, 10.0);
    EXPECT_EQ(deaths(dg[0]), (std::vector<double>{1.0, 2.0}));
    EXPECT_EQ(dg[0].essential(), 1u);
    EXPECT_TRUE(dg[1].pairs.empty());
    EXPECT_EQ(dg[1].essential(), 0u);
}

TEST(RipsPersistence, UnitSquareHasOneLoop) {
    const auto dg = rips_persistence(square(), 1, 2.0);
    ASSERT_EQ(dg[1].pairs.size(), 1u);
    EXPECT_NEAR(dg[1].pairs[0].birth, 1.0, 1e-9);
    EXPECT_NEAR(dg[1].pairs[0].death, std::sqrt(2.0), 1e-9);
}

TEST(RipsPersistence, LoopAliveAtCeilingIsEssential) {
    const auto dg = rips_persistence(square(), 1, 1.2);
    EXPECT_TRUE(dg[1].pairs.empty());
    ASSERT_EQ(dg[1].essential(), 1u);
    EXPECT_EQ(dg[1].essential_births[0], 1.0);
}

TEST(RipsPersistence, SinglePoint) {
    const auto dg = rips_persistence(make_distance_matrix(Eigen::MatrixXd::Zero(1, 1)), 1, 1.0);
    EXPECT_TRUE(dg[0].pairs.empty());
    EXPECT_EQ(dg[0].essential(), 1u);
}

TEST(RipsPersistence, NonPositiveCeilingRejected) {
    EXPECT_THROW(rips_persistence(square(), 1, 0.0), Error);
}

TEST(RipsPersistence, MatchesNaiveOraclesOnRandomClouds) {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 5 + trial;
        const Eigen::MatrixXd p = random_cloud(n, 2 + trial % 3, rng);
        const auto d = pairwise_distances(PointCloud{p, "", 2, 1});
        const double eps = trial % 2 ? max_distance(d) : 0.6 * max_distance(d);
        const auto dg = rips_persistence(d, 1, eps);
        const auto h0 = oracle::h0_union_find(d.values, eps);
        const auto h1 = oracle::h1_boundary_matrix(d.values, eps);
        EXPECT_EQ(sorted_pairs(dg[0]), sorted_pairs(h0)) << "trial " << trial;
        EXPECT_EQ(dg[0].essential(), h0.essential.size());
        EXPECT_EQ(dg[0].pairs.size() + dg[0].essential(), static_cast<std::size_t>(n));
        EXPECT_EQ(sorted_pairs(dg[1]), sorted_pairs(h1)) << "trial " << trial;
        EXPECT_EQ(dg[1].essential_births, h1.essential) << "trial " << trial;
    }
}

TEST(RipsPersistence, PermutationInvariant) {
    std::mt19937_64 rng(5);
    const Eigen::MatrixXd p = random_cloud(20, 3, rng);
    std::vector<int> order(20);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    Eigen::MatrixXd q(20, 3);
    for (int i = 0; i < 20; ++i) q.row(i) = p.row(order[static_cast<std::size_t>(i)]);
    const auto a = rips_persistence(pairwise_distances(PointCloud{p, "", 3, 1}), 1, 10.0);
    const auto b = rips_persistence(pairwise_distances(PointCloud{q, "", 3, 1}), 1, 10.0);
    for (int k = 0; k < 2; ++k) {
        EXPECT_EQ(sorted_pairs(a[static_cast<std::size_t>(k)]), sorted_pairs(b[static_cast<std::size_t>(k)]));
    }
}

TEST(RipsComplex, FiltrationIsMonotone) {
    std::mt19937_64 rng(6);
    const auto d = pairwise_distances(PointCloud{random_cloud(10, 2, rng), "", 2, 1});
    const auto small = rips_complex(d, 0.5, 2);
    const auto large = rips_complex(d, 0.9, 2);
    for (const auto& s : small) {
        EXPECT_LE(s.value, 0.5);
        const bool found = std::any_of(large.begin(), large.end(), [&](const FilteredSimplex& t) { return t.vertices == s.vertices; });
        EXPECT_TRUE(found);
    }
}

TEST(Pca, PlanarDataIsFullyExplained) {
    std::mt19937_64 rng(7);
    const Eigen::MatrixXd plane = random_cloud(12, 2, rng);
    Eigen::MatrixXd basis(2, 5);
    basis << 1, 2, 0, -1, 3, 0, 1, 1, 2, -2;
    const Eigen::MatrixXd rows = (plane * basis).rowwise() + Eigen::RowVectorXd::Constant(5, 4.0);
    const auto pca = pca_project(rows, 2);
    EXPECT_NEAR(pca.explained_ratio.sum(), 1.0, 1e-9);
    EXPECT_LE(pca.coordinates.colwise().mean().cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Pca, VariancesMatchCovarianceEigenvalues) {
    std::mt19937_64 rng(8);
    const Eigen::MatrixXd rows = random_cloud(15, 4, rng);
    const auto pca = pca_project(rows, 2);
    const Eigen::MatrixXd centred = rows.rowwise() - rows.colwise().mean();
    const Eigen::MatrixXd cov = centred.transpose() * centred / 14.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    EXPECT_NEAR(pca.explained_variance(0), eig.eigenvalues()(3), 1e-10);
    EXPECT_NEAR(pca.explained_variance(1), eig.eigenvalues()(2), 1e-10);
}

TEST(DiagramCsv, RoundTripsIncludingEssentials) {
    std::mt19937_64 rng(9);
    const auto d = pairwise_distances(PointCloud{random_cloud(15, 2, rng), "", 2, 1});
    const auto dg = rips_persistence(d, 1, 0.5 * max_distance(d));
    std::stringstream buf;
    write_diagram_csv(buf, dg);
    const auto back = read_diagram_csv(buf);
    ASSERT_EQ(back.size(), 2u);
    for (std::size_t k = 0; k < 2; ++k) {
        EXPECT_EQ(back[k].pairs, dg[k].pairs);
        EXPECT_EQ(back[k].essential_births, dg[k].essential_births);
    }
}

TEST(RipsPersistence, TwoPointsPulledApartShiftByTwiceTheDisplacement) {
    // Moving each endpoint by delta changes the single H0 death by 2 * delta.
    Eigen::MatrixXd p(2, 1), q(2, 1);
    p << 0.0, 1.0;
    q << -0.01, 1.01;
    const auto a = rips_persistence(pairwise_distances(PointCloud{p, "", 1, 1}), 1, 2.0);
    const auto b = rips_persistence(pairwise_distances(PointCloud{q, "", 1, 1}), 1, 2.0);
    EXPECT_NEAR(b[0].pairs[0].death - a[0].pairs[0].death, 0.02, 1e-12);
}

TEST(RipsPersistence, BottleneckWithinTwiceThePerturbation) {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> z;
    for (int trial = 0; trial < 15; ++trial) {
        const Eigen::MatrixXd p = random_cloud(10 + trial, 3, rng);
        for (const double delta : {0.01, 0.05}) {
            Eigen::MatrixXd q = p;
            for (Eigen::Index i = 0; i < q.rows(); ++i) {
                const Eigen::RowVector3d dir(z(rng), z(rng), z(rng));
                q.row(i) += delta * dir / dir.norm();
            }
            const auto dp = pairwise_distances(PointCloud{p, "", 3, 1});
            const auto dq = pairwise_distances(PointCloud{q, "", 3, 1});
            const double eps = std::max(max_distance(dp), max_distance(dq));
            const auto a = rips_persistence(dp, 1, eps), b = rips_persistence(dq, 1, eps);
            for (std::size_t k = 0; k < 2; ++k) {
                EXPECT_LE(bottleneck(a[k], b[k]), 2.0 * delta + 1e-9);
                EXPECT_EQ(a[k].essential(), b[k].essential());
            }
        }
    }
}
