#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "fxtda/common.hpp"
#include "fxtda/eval.hpp"
#include "oracles.hpp"

using namespace fxtda;

namespace {

ClusterAssignment assign(const std::vector<int>& labels) {
    std::vector<std::string> items;
    for (std::size_t i = 0; i < labels.size(); ++i) items.push_back("I" + std::to_string(i));
    return make_assignment(items, labels);
}

std::vector<int> random_labels(std::size_t n, int k, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> pick(0, k - 1);
    std::vector<int> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = i < static_cast<std::size_t>(k) ? static_cast<int>(i) : pick(rng);
    return out;
}

Eigen::MatrixXd random_points(int n, int d, std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    Eigen::MatrixXd p(n, d);
    for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = z(rng);
    return p;
}

}  // namespace

TEST(Silhouette, CoincidentPairsScoreOne) {
    Eigen::MatrixXd p(4, 1);
    p << 0, 0, 5, 5;
    EXPECT_NEAR(silhouette(make_distance_matrix(oracle::euclidean(p)), assign({0, 0, 1, 1})), 1.0, 1e-9);
}

TEST(Silhouette, MatchesDirectOracleAndIsScaleInvariant) {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 4 + trial % 9;
        const auto labels = random_labels(static_cast<std::size_t>(n), 2 + trial % 3, rng);
        const Eigen::MatrixXd d = oracle::euclidean(random_points(n, 3, rng));
        const double s = silhouette(make_distance_matrix(d), assign(labels));
        EXPECT_NEAR(s, oracle::silhouette_direct(d, labels), 1e-12);
        EXPECT_NEAR(silhouette(make_distance_matrix(3.5 * d), assign(labels)), s, 1e-12);
        EXPECT_GE(s, -1.0);
        EXPECT_LE(s, 1.0);
    }
}

TEST(Silhouette, SingleClusterIsUndefined) {
    try {
        silhouette(make_distance_matrix(Eigen::MatrixXd::Zero(3, 3)), assign({0, 0, 0}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::UndefinedMetric);
    }
}

TEST(CalinskiHarabasz, MatchesOracleAndInvariances) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 5 + trial % 8;
        const auto labels = random_labels(static_cast<std::size_t>(n), 2 + trial % 3, rng);
        const Eigen::MatrixXd p = random_points(n, 3, rng);
        const auto ch = calinski_harabasz(p, assign(labels));
        EXPECT_FALSE(ch.degenerate);
        EXPECT_NEAR(ch.value, oracle::calinski_harabasz_direct(p, labels), 1e-9 * std::max(1.0, ch.value));
        const Eigen::MatrixXd moved = p.rowwise() + Eigen::RowVector3d(4, -2, 7);
        EXPECT_NEAR(calinski_harabasz(moved, assign(labels)).value, ch.value, 1e-9 * std::max(1.0, ch.value));
        const Eigen::Matrix3d rot = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
        EXPECT_NEAR(calinski_harabasz(p * rot, assign(labels)).value, ch.value, 1e-9 * std::max(1.0, ch.value));
    }
}

TEST(CalinskiHarabasz, SeparatedBlobsAndZeroScatter) {
    std::mt19937_64 rng(3);
    Eigen::MatrixXd p = 0.01 * random_points(10, 2, rng);
    p.bottomRows(5).array() += 1.0;
    EXPECT_GT(calinski_harabasz(p, assign({0, 0, 0, 0, 0, 1, 1, 1, 1, 1})).value, 100.0);
    Eigen::MatrixXd q(4, 1);
    q << 0, 0, 1, 1;
    const auto ch = calinski_harabasz(q, assign({0, 0, 1, 1}));
    EXPECT_TRUE(ch.degenerate);
    EXPECT_TRUE(std::isinf(ch.value));
}

TEST(AdjustedRand, IdentityRelabelingAndOracle) {
    EXPECT_DOUBLE_EQ(adjusted_rand(assign({0, 0, 1, 2}), assign({2, 2, 0, 1})), 1.0);
    EXPECT_NEAR(adjusted_rand(assign({0, 1, 0, 1, 2, 2}), assign({0, 0, 0, 0, 0, 0})), 0.0, 1e-12);
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 4 + static_cast<std::size_t>(trial % 9);
        const auto a = random_labels(n, 2 + trial % 3, rng), b = random_labels(n, 2 + (trial + 1) % 3, rng);
        EXPECT_NEAR(adjusted_rand(assign(a), assign(b)), oracle::ari_pairs(a, b), 1e-12);
    }
}

TEST(AdjustedRand, MismatchedItemsRejected) {
    auto b = assign({0, 1, 1});
    b.items[2] = "other";
    try {
        adjusted_rand(assign({0, 1, 1}), b);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::MismatchedItems);
    }
}

TEST(Nmi, IdentityOracleAndDegenerateSide) {
    EXPECT_NEAR(nmi(assign({0, 0, 1, 1, 2}), assign({1, 1, 0, 0, 2})).value, 1.0, 1e-12);
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 6 + static_cast<std::size_t>(trial % 7);
        const auto a = random_labels(n, 2 + trial % 3, rng), b = random_labels(n, 3, rng);
        const auto score = nmi(assign(a), assign(b));
        EXPECT_NEAR(score.value, oracle::nmi_direct(a, b), 1e-12);
        EXPECT_GE(score.value, 0.0);
        EXPECT_LE(score.value, 1.0 + 1e-12);
    }
    const auto flat = nmi(assign({0, 1, 2}), assign({0, 0, 0}));
    EXPECT_TRUE(flat.degenerate);
    EXPECT_EQ(flat.value, 0.0);
}

TEST(Nmi, IndependentPartitionsScoreLow) {
    std::mt19937_64 rng(6);
    const auto a = random_labels(1000, 3, rng), b = random_labels(1000, 3, rng);
    EXPECT_LT(nmi(assign(a), assign(b)).value, 0.05);
}

TEST(Mantel, AffineAndOracle) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 3 + trial % 10;
        const Eigen::MatrixXd a = oracle::euclidean(random_points(n, 2, rng));
        const Eigen::MatrixXd b = oracle::euclidean(random_points(n, 2, rng));
        const auto da = make_distance_matrix(a), db = make_distance_matrix(b);
        EXPECT_NEAR(mantel(da, db), oracle::mantel_direct(a, b), 1e-12);
        EXPECT_EQ(mantel(da, db), mantel(db, da));
        EXPECT_NEAR(mantel(da, da), 1.0, 1e-12);
        Eigen::MatrixXd affine = 2.0 * a.array() + 3.0;
        affine.diagonal().setZero();
        EXPECT_NEAR(mantel(da, make_distance_matrix(affine)), 1.0, 1e-12);
    }
}

TEST(Mantel, ConstantTriangleIsUndefined) {
    Eigen::MatrixXd c = Eigen::MatrixXd::Constant(4, 4, 1.0);
    c.diagonal().setZero();
    std::mt19937_64 rng(8);
    const auto other = make_distance_matrix(oracle::euclidean(random_points(4, 2, rng)));
    try {
        mantel(make_distance_matrix(c), other);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::UndefinedCorrelation);
    }
}

TEST(EvaluationCsv, RoundTrips) {
    EvaluationReport r;
    r.rows.push_back({"Statistical k-means", ClusterMethod::KMeans, FeatureSpace::Statistical, 3, 0.11, 2.6,
                      "euclidean_returns", "returns", ""});
    r.rows.push_back({"TDA-based hierarchical", ClusterMethod::Hierarchical, FeatureSpace::Tda, 3, 0.18, 5.9,
                      "wasserstein", "mds_embedding", "note, with comma"});
    std::stringstream buf;
    write_evaluation_csv(buf, r);
    const auto back = read_evaluation_csv(buf);
    ASSERT_EQ(back.rows.size(), 2u);
    EXPECT_EQ(back.rows[1].note, "note, with comma");
    EXPECT_EQ(back.rows[1].method, ClusterMethod::Hierarchical);
    EXPECT_EQ(back.rows[0].silhouette, 0.11);
}

TEST(SensitivityCsv, RoundTrips) {
    SensitivityReport r{"base", {{"d = 4, tau = 1 (baseline)", 1, 1, 1, ""}, {"d = 9", 0, 0, 0, "too short"}}};
    std::stringstream buf;
    write_sensitivity_csv(buf, r);
    const auto back = read_sensitivity_csv(buf);
    ASSERT_EQ(back.rows.size(), 2u);
    EXPECT_EQ(back.rows[0].param_change, r.rows[0].param_change);
    EXPECT_EQ(back.rows[1].error, "too short");
}
