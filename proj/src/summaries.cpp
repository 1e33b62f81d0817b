#include "fxtda/summaries.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <ostream>

#include "fxtda/common.hpp"
#include "fxtda/csv.hpp"

namespace fxtda {

namespace {

double ground_distance(const PersistencePair& a, const PersistencePair& b, double q) {
    const double dx = std::abs(a.birth - b.birth);
    const double dy = std::abs(a.death - b.death);
    if (std::isinf(q)) return std::max(dx, dy);
    if (q == 2.0) return std::hypot(dx, dy);
    return std::pow(std::pow(dx, q) + std::pow(dy, q), 1.0 / q);
}

bool pair_less(const PersistencePair& a, const PersistencePair& b) {
    return a.birth != b.birth ? a.birth < b.birth : a.death < b.death;
}

std::vector<PersistencePair> sorted_pairs(const PersistenceDiagram& d) {
    auto pairs = d.pairs;
    std::sort(pairs.begin(), pairs.end(), pair_less);
    return pairs;
}

// Orders the two arguments canonically so that f(a, b) and f(b, a) run the
// identical computation and agree bit for bit.
bool canonical_order(const std::vector<PersistencePair>& a, const std::vector<PersistencePair>& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), pair_less) || a == b;
}

// Kuhn's augmenting-path matching on the threshold graph of the augmented
// bottleneck problem.
bool has_perfect_matching(const std::vector<std::vector<int>>& adj, int right_size) {
    std::vector<int> match_right(static_cast<std::size_t>(right_size), -1);
    std::vector<char> seen;
    std::function<bool(int)> augment = [&](int u) {
        for (const int v : adj[static_cast<std::size_t>(u)]) {
            if (seen[static_cast<std::size_t>(v)]) continue;
            seen[static_cast<std::size_t>(v)] = 1;
            if (match_right[static_cast<std::size_t>(v)] < 0 || augment(match_right[static_cast<std::size_t>(v)])) {
                match_right[static_cast<std::size_t>(v)] = u;
                return true;
            }
        }
        return false;
    };
    for (int u = 0; u < static_cast<int>(adj.size()); ++u) {
        seen.assign(static_cast<std::size_t>(right_size), 0);
        if (!augment(u)) return false;
    }
    return true;
}

}  // namespace

std::vector<PersistencePair> barcode(const PersistenceDiagram& diagram) {
    auto bars = diagram.pairs;
    std::stable_sort(bars.begin(), bars.end(), [](const PersistencePair& a, const PersistencePair& b) {
        if (a.birth != b.birth) return a.birth < b.birth;
        return a.persistence() > b.persistence();
    });
    return bars;
}

Eigen::VectorXd uniform_grid(double t_max, int grid_size) {
    if (grid_size < 2) throw Error(ErrorKind::Parameter, "grid_size must be >= 2");
    if (!(t_max >= 0.0) || !std::isfinite(t_max)) throw Error(ErrorKind::Parameter, "grid range must be finite");
    Eigen::VectorXd grid(grid_size);
    for (int i = 0; i < grid_size; ++i) grid(i) = t_max * static_cast<double>(i) / static_cast<double>(grid_size - 1);
    return grid;
}

PersistenceLandscape landscape(const PersistenceDiagram& diagram, int num_layers, int grid_size,
                               std::optional<double> t_max) {
    if (num_layers < 1) throw Error(ErrorKind::Parameter, "num_layers must be >= 1");
    PersistenceLandscape out;
    out.grid = uniform_grid(t_max.value_or(diagram.eps_max), grid_size);
    out.layers = Eigen::MatrixXd::Zero(num_layers, grid_size);
    std::vector<double> tents;
    tents.reserve(diagram.pairs.size());
    for (int g = 0; g < grid_size; ++g) {
        const double t = out.grid(g);
        tents.clear();
        for (const auto& p : diagram.pairs) {
            const double v = std::min(t - p.birth, p.death - t);
            if (v > 0.0) tents.push_back(v);
        }
        const auto k = std::min<std::size_t>(tents.size(), static_cast<std::size_t>(num_layers));
        std::partial_sort(tents.begin(), tents.begin() + static_cast<std::ptrdiff_t>(k), tents.end(),
                          std::greater<>());
        for (std::size_t l = 0; l < k; ++l) out.layers(static_cast<Eigen::Index>(l), g) = tents[l];
    }
    return out;
}

long betti_number(const PersistenceDiagram& diagram, double t) {
    long count = 0;
    for (const auto& p : diagram.pairs) {
        if (p.birth <= t && t < p.death) ++count;
    }
    for (const double b : diagram.essential_births) {
        if (b <= t) ++count;
    }
    return count;
}

BettiCurve betti_curve(const PersistenceDiagram& diagram, int grid_size, std::optional<double> t_max) {
    BettiCurve out;
    out.dimension = diagram.dimension;
    out.grid = uniform_grid(t_max.value_or(diagram.eps_max), grid_size);
    // Sweep sorted event lists instead of stabbing every interval per grid point.
    std::vector<double> births, deaths;
    for (const auto& p : diagram.pairs) {
        births.push_back(p.birth);
        deaths.push_back(p.death);
    }
    births.insert(births.end(), diagram.essential_births.begin(), diagram.essential_births.end());
    std::sort(births.begin(), births.end());
    std::sort(deaths.begin(), deaths.end());
    out.counts.resize(static_cast<std::size_t>(grid_size));
    for (int g = 0; g < grid_size; ++g) {
        const double t = out.grid(g);
        const auto born = std::upper_bound(births.begin(), births.end(), t) - births.begin();
        const auto died = std::upper_bound(deaths.begin(), deaths.end(), t) - deaths.begin();
        out.counts[static_cast<std::size_t>(g)] = static_cast<long>(born - died);
    }
    return out;
}

double diagonal_distance(const PersistencePair& pair, double q) {
    const double half = std::abs(pair.death - pair.birth) / 2.0;
    if (std::isinf(q)) return half;
    return half * std::pow(2.0, 1.0 / q);
}

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
    // Shortest augmenting paths with row/column potentials; 1-based internally.
    const int n = static_cast<int>(cost.rows());
    if (cost.cols() != n) throw Error(ErrorKind::Parameter, "assignment cost matrix must be square");
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(n + 1), 0.0);
    std::vector<int> p(static_cast<std::size_t>(n + 1), 0), way(static_cast<std::size_t>(n + 1), 0);
    std::vector<double> minv(static_cast<std::size_t>(n + 1));
    std::vector<char> used(static_cast<std::size_t>(n + 1));
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = p[static_cast<std::size_t>(j0)];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> assignment(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= n; ++j) assignment[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
    return assignment;
}

double wasserstein(const PersistenceDiagram& a, const PersistenceDiagram& b, const WassersteinOptions& options) {
    if (a.dimension != b.dimension) {
        throw Error(ErrorKind::DimensionMismatch, "cannot compare diagrams of degree " + std::to_string(a.dimension) +
                                                      " and " + std::to_string(b.dimension));
    }
    if (!(options.p >= 1.0) || std::isinf(options.p)) throw Error(ErrorKind::Parameter, "Wasserstein p must be finite and >= 1");
    if (!(options.q >= 1.0)) throw Error(ErrorKind::Parameter, "ground exponent q must be >= 1");

    auto left = sorted_pairs(a);
    auto right = sorted_pairs(b);
    if (!canonical_order(left, right)) std::swap(left, right);
    const auto n = static_cast<Eigen::Index>(left.size());
    const auto m = static_cast<Eigen::Index>(right.size());
    if (n + m == 0) return 0.0;

    // Rows: left points, then one diagonal slot per right point.
    // Columns: right points, then one diagonal slot per left point.
    // Every diagonal slot is interchangeable, so a point pays its own diagonal
    // cost for any of them; diagonal-to-diagonal is free.
    const double p = options.p;
    Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(n + m, n + m);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double to_diag = std::pow(diagonal_distance(left[static_cast<std::size_t>(i)], options.q), p);
        for (Eigen::Index j = 0; j < m; ++j) {
            cost(i, j) = std::pow(ground_distance(left[static_cast<std::size_t>(i)], right[static_cast<std::size_t>(j)], options.q), p);
        }
        cost.block(i, m, 1, n).setConstant(to_diag);
    }
    for (Eigen::Index j = 0; j < m; ++j) {
        const double to_diag = std::pow(diagonal_distance(right[static_cast<std::size_t>(j)], options.q), p);
        cost.block(n, j, m, 1).setConstant(to_diag);
    }

    const auto assignment = solve_assignment(cost);
    double total = 0.0;
    for (Eigen::Index r = 0; r < n + m; ++r) total += cost(r, assignment[static_cast<std::size_t>(r)]);
    return std::pow(total, 1.0 / p);
}

double bottleneck(const PersistenceDiagram& a, const PersistenceDiagram& b) {
    if (a.dimension != b.dimension) {
        throw Error(ErrorKind::DimensionMismatch, "cannot compare diagrams of different degree");
    }
    auto left = sorted_pairs(a);
    auto right = sorted_pairs(b);
    if (!canonical_order(left, right)) std::swap(left, right);
    const int n = static_cast<int>(left.size());
    const int m = static_cast<int>(right.size());
    if (n + m == 0) return 0.0;
    const double inf = std::numeric_limits<double>::infinity();

    // Same augmented layout as wasserstein(), with l-inf ground costs.
    Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(n + m, n + m);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) cost(i, j) = ground_distance(left[static_cast<std::size_t>(i)], right[static_cast<std::size_t>(j)], inf);
        cost.block(i, m, 1, n).setConstant(diagonal_distance(left[static_cast<std::size_t>(i)], inf));
    }
    for (int j = 0; j < m; ++j) cost.block(n, j, m, 1).setConstant(diagonal_distance(right[static_cast<std::size_t>(j)], inf));

    std::vector<double> candidates(cost.data(), cost.data() + cost.size());
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    auto feasible = [&](double t) {
        std::vector<std::vector<int>> adj(static_cast<std::size_t>(n + m));
        for (int r = 0; r < n + m; ++r)
            for (int c = 0; c < n + m; ++c)
                if (cost(r, c) <= t) adj[static_cast<std::size_t>(r)].push_back(c);
        return has_perfect_matching(adj, n + m);
    };
    std::size_t lo = 0, hi = candidates.size() - 1;
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (feasible(candidates[mid])) hi = mid;
        else lo = mid + 1;
    }
    return candidates[lo];
}

DistanceMatrix diagram_distance_matrix(const std::vector<std::string>& labels,
                                       const std::vector<std::vector<PersistenceDiagram>>& diagrams,
                                       const DiagramDistanceOptions& options) {
    if (labels.size() != diagrams.size()) {
        throw Error(ErrorKind::Parameter, "one diagram list per label is required");
    }
    const std::size_t dims = options.dim_weights.size();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (diagrams[i].size() < dims) {
            throw Error(ErrorKind::MissingDiagram, labels[i] + " lacks a degree-" + std::to_string(diagrams[i].size()) + " diagram");
        }
        for (std::size_t k = 0; k < dims; ++k) {
            if (diagrams[i][k].dimension != static_cast<int>(k)) {
                throw Error(ErrorKind::MissingDiagram, labels[i] + " diagrams are not indexed by degree");
            }
        }
    }

    const std::size_t n = labels.size();
    std::vector<std::pair<std::size_t, std::size_t>> jobs;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) jobs.emplace_back(i, j);

    std::vector<double> results(jobs.size(), 0.0);
    parallel_for(jobs.size(), options.threads, [&](std::size_t job) {
        const auto [i, j] = jobs[job];
        double total = 0.0;
        for (std::size_t k = 0; k < dims; ++k) {
            if (options.dim_weights[k] == 0.0) continue;
            total += options.dim_weights[k] * wasserstein(diagrams[i][k], diagrams[j][k], options.wasserstein);
        }
        results[job] = total;
    });

    Eigen::MatrixXd values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t job = 0; job < jobs.size(); ++job) {
        const auto [i, j] = jobs[job];
        values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = results[job];
        values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = results[job];
    }
    return make_distance_matrix(std::move(values), labels);
}

void write_landscape_csv(std::ostream& out, const PersistenceLandscape& landscape) {
    std::vector<std::string> header{"t"};
    for (Eigen::Index l = 0; l < landscape.layers.rows(); ++l) header.push_back("lambda_" + std::to_string(l + 1));
    csv::write_row(out, header);
    for (Eigen::Index g = 0; g < landscape.grid.size(); ++g) {
        std::vector<std::string> row{format_double(landscape.grid(g))};
        for (Eigen::Index l = 0; l < landscape.layers.rows(); ++l) row.push_back(format_double(landscape.layers(l, g)));
        csv::write_row(out, row);
    }
}

void write_betti_csv(std::ostream& out, const BettiCurve& curve) {
    csv::write_row(out, {"t", "count"});
    for (Eigen::Index g = 0; g < curve.grid.size(); ++g) {
        csv::write_row(out, {format_double(curve.grid(g)), std::to_string(curve.counts[static_cast<std::size_t>(g)])});
    }
}

}  // namespace fxtda
