#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fxtda/cluster.hpp"
#include "fxtda/tda_core.hpp"

namespace fxtda {

/// A score that may be undefined for the given input. `degenerate` marks the
/// sentinel cases (+inf Calinski-Harabasz, zero-entropy NMI).
struct FlaggedScore {
    double value = 0.0;
    bool degenerate = false;
};

/// Mean silhouette over items; singletons score 0.
double silhouette(const DistanceMatrix& dist, const ClusterAssignment& labels);

/// Per-item silhouette values.
Eigen::VectorXd silhouette_samples(const DistanceMatrix& dist, const ClusterAssignment& labels);

/// [tr(B)/(k-1)] / [tr(W)/(n-k)]. Zero within-cluster scatter yields +inf, flagged.
FlaggedScore calinski_harabasz(const Eigen::Ref<const Eigen::MatrixXd>& points, const ClusterAssignment& labels);

double adjusted_rand(const ClusterAssignment& a, const ClusterAssignment& b);

/// I(a;b) / sqrt(H(a) H(b)) with natural logs. A one-cluster side gives 0, flagged.
FlaggedScore nmi(const ClusterAssignment& a, const ClusterAssignment& b);

/// Pearson correlation of the strict upper triangles.
double mantel(const DistanceMatrix& a, const DistanceMatrix& b);

struct EvaluationRow {
    std::string model;
    ClusterMethod method = ClusterMethod::KMeans;
    FeatureSpace feature_space = FeatureSpace::Statistical;
    int k = 0;
    double silhouette = 0.0;
    double calinski_harabasz = 0.0;
    std::string silhouette_space;
    std::string ch_space;
    std::string note;
};

struct EvaluationReport {
    std::vector<EvaluationRow> rows;
};

void write_evaluation_csv(std::ostream& out, const EvaluationReport& report);
EvaluationReport read_evaluation_csv(std::istream& in);
std::string evaluation_to_json(const EvaluationReport& report);

struct SensitivityRow {
    std::string param_change;
    double mantel = 0.0;
    double ari = 0.0;
    double nmi = 0.0;
    std::string error;  // non-empty when the row could not be computed
};

struct SensitivityReport {
    std::string baseline;
    std::vector<SensitivityRow> rows;
};

void write_sensitivity_csv(std::ostream& out, const SensitivityReport& report);
SensitivityReport read_sensitivity_csv(std::istream& in);

}  // namespace fxtda
