#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fxtda {

/// Delay-embedded series: row t is (x_t, x_{t-tau}, ..., x_{t-(d-1)tau}).
struct PointCloud {
    Eigen::MatrixXd points;  // n x d
    std::string source_label;
    int window = 1;
    int delay = 1;

    Eigen::Index size() const { return points.rows(); }
};

/// Symmetric, zero-diagonal, nonnegative matrix of pairwise distances.
struct DistanceMatrix {
    std::vector<std::string> labels;
    Eigen::MatrixXd values;

    std::size_t size() const { return static_cast<std::size_t>(values.rows()); }
    /// Throws ErrorKind::Parameter if shape, symmetry, diagonal or sign is off.
    void validate() const;
};

DistanceMatrix make_distance_matrix(Eigen::MatrixXd values, std::vector<std::string> labels = {});

struct PersistencePair {
    double birth = 0.0;
    double death = 0.0;

    double persistence() const { return death - birth; }
    friend bool operator==(const PersistencePair&, const PersistencePair&) = default;
};

/// Finite pairs of one homology degree plus the births of classes still alive
/// at the filtration ceiling. Essential classes are reported separately so
/// that distances can ignore them; in CSV form they carry death = eps_max.
struct PersistenceDiagram {
    int dimension = 0;
    std::vector<PersistencePair> pairs;
    std::vector<double> essential_births;
    double eps_max = 0.0;

    std::size_t essential() const { return essential_births.size(); }
};

PointCloud delay_embed(const Eigen::Ref<const Eigen::VectorXd>& series, int window, int delay,
                       std::string label = {});

DistanceMatrix pairwise_distances(const PointCloud& cloud);

/// Largest entry of the matrix (the diameter of the point set).
double max_distance(const DistanceMatrix& dist);

/// Vietoris-Rips persistence in degrees 0..max_dim (max_dim <= 1) over Z/2,
/// restricted to simplices of diameter <= eps_max. Degree 0 comes from a
/// Kruskal sweep; degree 1 from a coboundary reduction with the spanning-tree
/// edges cleared. Zero-length degree-1 pairs are dropped.
std::vector<PersistenceDiagram> rips_persistence(const DistanceMatrix& dist, int max_dim, double eps_max);

/// A simplex of the Rips complex with its filtration value (diameter).
struct FilteredSimplex {
    std::vector<int> vertices;
    double value = 0.0;
};

/// All simplices of VR_eps up to `max_dim`, ordered by (dimension, value, vertices).
std::vector<FilteredSimplex> rips_complex(const DistanceMatrix& dist, double eps, int max_dim);

struct PcaProjection {
    Eigen::MatrixXd coordinates;        // rows x out_dim
    Eigen::MatrixXd components;         // cols x out_dim, unit columns
    Eigen::VectorXd explained_variance; // per retained component, sample variance
    Eigen::VectorXd explained_ratio;    // fraction of total variance
};

/// Centres rows and projects onto the leading right singular vectors. Component
/// signs are fixed so the largest-magnitude loading is positive.
PcaProjection pca_project(const Eigen::Ref<const Eigen::MatrixXd>& rows, int out_dim);

/// CSV rows: dimension,birth,death,essential. Essential rows use death = eps_max.
void write_diagram_csv(std::ostream& out, const std::vector<PersistenceDiagram>& diagrams);
std::vector<PersistenceDiagram> read_diagram_csv(std::istream& in);

}  // namespace fxtda
