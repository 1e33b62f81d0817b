#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fxtda/tda_core.hpp"

namespace fxtda {

/// Finite pairs ordered by birth, then by descending persistence.
std::vector<PersistencePair> barcode(const PersistenceDiagram& diagram);

/// Layers lambda_1 >= lambda_2 >= ... sampled on a uniform grid over [0, t_max].
struct PersistenceLandscape {
    Eigen::VectorXd grid;
    Eigen::MatrixXd layers;  // num_layers x grid.size()
};

/// Uniform grid of `grid_size` points over [0, t_max] (both ends included).
Eigen::VectorXd uniform_grid(double t_max, int grid_size);

/// t_max defaults to the diagram's eps_max. Only finite pairs contribute.
PersistenceLandscape landscape(const PersistenceDiagram& diagram, int num_layers, int grid_size,
                               std::optional<double> t_max = std::nullopt);

struct BettiCurve {
    int dimension = 0;
    Eigen::VectorXd grid;
    std::vector<long> counts;
};

/// Number of classes alive at each grid point under the half-open convention
/// [birth, death). Essential classes never die.
BettiCurve betti_curve(const PersistenceDiagram& diagram, int grid_size, std::optional<double> t_max = std::nullopt);

/// Number of classes alive at a single scale t.
long betti_number(const PersistenceDiagram& diagram, double t);

/// Exponent q of the ground metric in the birth-death plane; use infinity for l-inf.
struct WassersteinOptions {
    double p = 2.0;
    double q = 2.0;
};

/// Minimum-cost assignment on a square cost matrix (Hungarian method).
/// Returns the column assigned to each row.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

/// p-Wasserstein distance between the finite parts of two diagrams, with the
/// diagonal absorbing unmatched points. Essential classes are ignored.
double wasserstein(const PersistenceDiagram& a, const PersistenceDiagram& b, const WassersteinOptions& options = {});

/// Bottleneck distance (l-inf ground metric) between the finite parts.
double bottleneck(const PersistenceDiagram& a, const PersistenceDiagram& b);

/// l_q distance from a point to its orthogonal projection on the diagonal.
double diagonal_distance(const PersistencePair& pair, double q);

struct DiagramDistanceOptions {
    WassersteinOptions wasserstein;
    std::vector<double> dim_weights{1.0, 1.0};
    std::size_t threads = 1;
};

/// entry(i, j) = sum_k w_k * W_p(D_k(i), D_k(j)). `diagrams[i]` lists the
/// diagrams of item i indexed by homology degree.
DistanceMatrix diagram_distance_matrix(const std::vector<std::string>& labels,
                                       const std::vector<std::vector<PersistenceDiagram>>& diagrams,
                                       const DiagramDistanceOptions& options = {});

/// CSV: "t,lambda_1,...,lambda_k".
void write_landscape_csv(std::ostream& out, const PersistenceLandscape& landscape);
/// CSV: "t,count".
void write_betti_csv(std::ostream& out, const BettiCurve& curve);

}  // namespace fxtda
