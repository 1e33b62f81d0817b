#pragma once

// Deliberately naive reference implementations used to check the library.
// None of them share code with src/.

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

struct Interval {
    double birth;
    double death;
};

struct Diagram {
    std::vector<Interval> finite;   // sorted
    std::vector<double> essential;  // sorted births
};

Eigen::MatrixXd euclidean(const Eigen::MatrixXd& points);

/// H0 from a union-find sweep over every edge in ascending order.
Diagram h0_union_find(const Eigen::MatrixXd& dist, double eps_max);

/// H1 from the full Z/2 boundary matrix of the 2-skeleton, reduced column by
/// column in filtration order. Zero-length pairs are dropped.
Diagram h1_boundary_matrix(const Eigen::MatrixXd& dist, double eps_max);

/// p-Wasserstein with l_q ground metric by enumerating every partial matching.
double wasserstein_exhaustive(const std::vector<Interval>& a, const std::vector<Interval>& b, double p, double q);

/// Bottleneck by enumerating every partial matching.
double bottleneck_exhaustive(const std::vector<Interval>& a, const std::vector<Interval>& b);

struct NaiveMerge {
    int a;
    int b;
    double height;
};

/// O(n^3) complete linkage; clusters keep explicit member lists. Ties go to
/// the smallest (a, b) node pair, with node ids numbered n + step.
std::vector<NaiveMerge> complete_linkage_naive(const Eigen::MatrixXd& dist);

double silhouette_direct(const Eigen::MatrixXd& dist, const std::vector<int>& labels);
double calinski_harabasz_direct(const Eigen::MatrixXd& points, const std::vector<int>& labels);
double ari_pairs(const std::vector<int>& a, const std::vector<int>& b);
double nmi_direct(const std::vector<int>& a, const std::vector<int>& b);
double mantel_direct(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace oracle
