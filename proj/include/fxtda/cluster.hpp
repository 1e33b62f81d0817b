#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fxtda/tda_core.hpp"

namespace fxtda {

enum class ClusterMethod { KMeans, Hierarchical };
enum class FeatureSpace { Statistical, Tda };

const char* to_string(ClusterMethod method);
const char* to_string(FeatureSpace space);

/// Item -> cluster id map. Ids are contiguous in [0, k) and numbered in order
/// of first appearance along `items`.
struct ClusterAssignment {
    std::vector<std::string> items;
    std::vector<int> labels;
    int k = 0;
    ClusterMethod method = ClusterMethod::KMeans;
    FeatureSpace feature_space = FeatureSpace::Statistical;
    double inertia = std::numeric_limits<double>::quiet_NaN();  // k-means only

    /// Throws ErrorKind::Parameter when ids are not contiguous or sizes disagree.
    void validate() const;
};

/// Relabels so ids appear in first-occurrence order and fills `k`.
ClusterAssignment make_assignment(std::vector<std::string> items, const std::vector<int>& labels,
                                  ClusterMethod method = ClusterMethod::KMeans,
                                  FeatureSpace space = FeatureSpace::Statistical);

struct KMeansOptions {
    std::uint64_t seed = 42;
    int restarts = 10;
    int max_iterations = 300;
    std::size_t threads = 1;
};

/// One Lloyd run. `inertia_history[t]` is the within-cluster sum of squares
/// after the t-th assignment step.
struct KMeansRun {
    std::vector<int> labels;
    Eigen::MatrixXd centroids;  // k x dims
    double inertia = 0.0;
    std::vector<double> inertia_history;
    int iterations = 0;
};

/// k-means++ seeding driven by a 64-bit Mersenne Twister.
Eigen::MatrixXd kmeans_plus_plus(const Eigen::Ref<const Eigen::MatrixXd>& points, int k, std::uint64_t seed);

/// Lloyd iterations from the given centroids. Empty clusters are re-seeded
/// with the point farthest from its centroid.
KMeansRun lloyd(const Eigen::Ref<const Eigen::MatrixXd>& points, Eigen::MatrixXd centroids, int max_iterations);

/// Best of `restarts` seeded k-means++ / Lloyd runs by inertia (ties: lowest
/// restart index). Deterministic for a given seed regardless of thread count.
KMeansRun kmeans_run(const Eigen::Ref<const Eigen::MatrixXd>& points, int k, const KMeansOptions& options = {});

ClusterAssignment kmeans(const Eigen::Ref<const Eigen::MatrixXd>& points, const std::vector<std::string>& items, int k,
                         const KMeansOptions& options = {}, FeatureSpace space = FeatureSpace::Statistical);

/// (k, WCSS) for k = 1..k_max. Each k also tries the k-1 solution plus its
/// worst-fitted point as a starting configuration, which keeps WCSS non-increasing.
std::vector<std::pair<int, double>> elbow_curve(const Eigen::Ref<const Eigen::MatrixXd>& points, int k_max,
                                                const KMeansOptions& options = {});

/// Total squared deviation from the centroid of each cluster.
double within_cluster_ss(const Eigen::Ref<const Eigen::MatrixXd>& points, const std::vector<int>& labels);

/// Merge of two nodes. Leaves are 0..n-1; the merge at step s creates node n+s.
struct Merge {
    int node_a = 0;
    int node_b = 0;
    double height = 0.0;
    int size = 0;
};

struct Dendrogram {
    std::vector<Merge> merges;
    int leaves = 0;
};

struct HierarchicalResult {
    Dendrogram dendrogram;
    ClusterAssignment assignment;
};

/// Complete-linkage agglomeration. Ties on height go to the lexicographically
/// smallest (node_a, node_b) pair.
Dendrogram complete_linkage(const DistanceMatrix& dist);

/// Labels obtained by applying the first n - k merges.
std::vector<int> cut_dendrogram(const Dendrogram& dendrogram, int k);

HierarchicalResult hierarchical_complete(const DistanceMatrix& dist, int k,
                                         FeatureSpace space = FeatureSpace::Statistical);

struct MdsResult {
    PointCloud embedding;
    Eigen::VectorXd eigenvalues;          // all, descending
    Eigen::VectorXd explained_fraction;   // retained dims / positive eigenvalue mass
    int clamped_negative = 0;             // retained eigenvalues clamped to zero
    int negative_eigenvalues = 0;         // all eigenvalues below zero

    double captured() const { return explained_fraction.sum(); }
};

/// Classical (Torgerson) scaling of -1/2 J D^2 J.
MdsResult classical_mds(const DistanceMatrix& dist, int out_dim);

/// CSV "item,label".
void write_assignment_csv(std::ostream& out, const ClusterAssignment& assignment);
ClusterAssignment read_assignment_csv(std::istream& in);

/// CSV "kind,node,a,b,height,size,label": one "leaf" row per item, then one
/// "merge" row per merge in order.
void write_dendrogram_csv(std::ostream& out, const Dendrogram& dendrogram, const std::vector<std::string>& labels);
Dendrogram read_dendrogram_csv(std::istream& in, std::vector<std::string>* labels = nullptr);

}  // namespace fxtda
