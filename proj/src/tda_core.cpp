#include "fxtda/tda_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <queue>
#include <unordered_map>

#include "fxtda/common.hpp"
#include "fxtda/csv.hpp"

namespace fxtda {

namespace {

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n), rank_(n, 0) { std::iota(parent_.begin(), parent_.end(), 0); }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    bool unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        if (rank_[a] < rank_[b]) std::swap(a, b);
        parent_[b] = a;
        if (rank_[a] == rank_[b]) ++rank_[a];
        return true;
    }

private:
    std::vector<std::size_t> parent_;
    std::vector<unsigned char> rank_;
};

struct Edge {
    double diam;
    int i;
    int j;
};

bool edge_less(const Edge& a, const Edge& b) {
    if (a.diam != b.diam) return a.diam < b.diam;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
}

std::vector<Edge> sorted_edges(const Eigen::MatrixXd& d, double eps_max) {
    const int n = static_cast<int>(d.rows());
    std::vector<Edge> edges;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (d(i, j) <= eps_max) edges.push_back({d(i, j), i, j});
        }
    }
    std::sort(edges.begin(), edges.end(), edge_less);
    return edges;
}

// Binomial table for the combinatorial number system used to index triangles.
class Binomial {
public:
    explicit Binomial(int n) : n_(n + 1), table_(static_cast<std::size_t>((n + 1) * 4), 0) {
        for (int i = 0; i <= n; ++i) {
            at(i, 0) = 1;
            for (int k = 1; k <= std::min(i, 3); ++k) at(i, k) = (k == i) ? 1 : at(i - 1, k - 1) + at(i - 1, k);
        }
    }
    std::uint64_t operator()(int i, int k) const { return k > i ? 0 : table_[static_cast<std::size_t>(i * 4 + k)]; }

private:
    std::uint64_t& at(int i, int k) { return table_[static_cast<std::size_t>(i * 4 + k)]; }
    int n_;
    std::vector<std::uint64_t> table_;
};

struct Cofacet {
    double diam;
    std::uint64_t id;

    friend bool operator==(const Cofacet& a, const Cofacet& b) { return a.id == b.id; }
};

// Min-heap ordering on (diameter, id).
struct CofacetGreater {
    bool operator()(const Cofacet& a, const Cofacet& b) const {
        if (a.diam != b.diam) return a.diam > b.diam;
        return a.id > b.id;
    }
};

using WorkingColumn = std::priority_queue<Cofacet, std::vector<Cofacet>, CofacetGreater>;

// Removes the leading entry with Z/2 cancellation of duplicates.
std::optional<Cofacet> pop_pivot(WorkingColumn& column) {
    while (!column.empty()) {
        Cofacet pivot = column.top();
        column.pop();
        if (column.empty() || !(column.top() == pivot)) return pivot;
        column.pop();  // pivot + pivot = 0
    }
    return std::nullopt;
}

std::optional<Cofacet> get_pivot(WorkingColumn& column) {
    auto pivot = pop_pivot(column);
    if (pivot) column.push(*pivot);
    return pivot;
}

class CoboundaryEnumerator {
public:
    CoboundaryEnumerator(const Eigen::MatrixXd& d, double eps_max) : d_(d), eps_max_(eps_max), binom_(static_cast<int>(d.rows())) {}

    void push_coboundary(const Edge& e, WorkingColumn& column) const {
        const int n = static_cast<int>(d_.rows());
        for (int k = 0; k < n; ++k) {
            if (k == e.i || k == e.j) continue;
            const double diam = std::max({e.diam, d_(e.i, k), d_(e.j, k)});
            if (diam > eps_max_) continue;
            int v[3] = {e.i, e.j, k};
            std::sort(v, v + 3);
            column.push({diam, binom_(v[2], 3) + binom_(v[1], 2) + binom_(v[0], 1)});
        }
    }

private:
    const Eigen::MatrixXd& d_;
    double eps_max_;
    Binomial binom_;
};

PersistenceDiagram degree_one(const Eigen::MatrixXd& d, double eps_max, const std::vector<Edge>& edges,
                              const std::vector<bool>& tree_edge) {
    PersistenceDiagram dgm;
    dgm.dimension = 1;
    dgm.eps_max = eps_max;

    const CoboundaryEnumerator coboundary(d, eps_max);
    std::unordered_map<std::uint64_t, std::size_t> pivot_owner;  // triangle id -> column slot
    std::vector<std::vector<std::size_t>> reductions;            // column slot -> edges summed

    for (std::size_t idx = edges.size(); idx-- > 0;) {
        if (tree_edge[idx]) continue;  // cleared: pairs with a vertex in degree 0
        const Edge& e = edges[idx];

        std::vector<std::size_t> combination{idx};
        WorkingColumn column;
        coboundary.push_coboundary(e, column);
        auto pivot = get_pivot(column);
        while (pivot) {
            const auto owner = pivot_owner.find(pivot->id);
            if (owner == pivot_owner.end()) break;
            for (const std::size_t other : reductions[owner->second]) {
                coboundary.push_coboundary(edges[other], column);
                combination.push_back(other);
            }
            pivot = get_pivot(column);
        }

        if (!pivot) {
            dgm.essential_births.push_back(e.diam);
            continue;
        }

        std::sort(combination.begin(), combination.end());
        std::vector<std::size_t> reduced;
        for (std::size_t k = 0; k < combination.size();) {
            std::size_t run = k;
            while (run < combination.size() && combination[run] == combination[k]) ++run;
            if ((run - k) % 2 == 1) reduced.push_back(combination[k]);
            k = run;
        }
        pivot_owner.emplace(pivot->id, reductions.size());
        reductions.push_back(std::move(reduced));

        if (pivot->diam > e.diam) dgm.pairs.push_back({e.diam, pivot->diam});
    }

    std::sort(dgm.pairs.begin(), dgm.pairs.end(), [](const PersistencePair& a, const PersistencePair& b) {
        return a.birth != b.birth ? a.birth < b.birth : a.death < b.death;
    });
    std::sort(dgm.essential_births.begin(), dgm.essential_births.end());
    return dgm;
}

}  // namespace

void DistanceMatrix::validate() const {
    const Eigen::Index n = values.rows();
    if (values.cols() != n) throw Error(ErrorKind::Parameter, "distance matrix is not square");
    if (!labels.empty() && labels.size() != static_cast<std::size_t>(n)) {
        throw Error(ErrorKind::Parameter, "distance matrix labels do not match its size");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (values(i, i) != 0.0) throw Error(ErrorKind::Parameter, "distance matrix has a nonzero diagonal");
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = values(i, j);
            if (!std::isfinite(v) || v < 0.0) {
                throw Error(ErrorKind::Parameter, "distance matrix has a negative or non-finite entry");
            }
            if (v != values(j, i)) throw Error(ErrorKind::Parameter, "distance matrix is not symmetric");
        }
    }
}

DistanceMatrix make_distance_matrix(Eigen::MatrixXd values, std::vector<std::string> labels) {
    if (labels.empty()) {
        for (Eigen::Index i = 0; i < values.rows(); ++i) labels.push_back(std::to_string(i));
    }
    DistanceMatrix m{std::move(labels), std::move(values)};
    m.validate();
    return m;
}

PointCloud delay_embed(const Eigen::Ref<const Eigen::VectorXd>& series, int window, int delay, std::string label) {
    if (window < 1 || delay < 1) throw Error(ErrorKind::Parameter, "window and delay must be >= 1");
    const Eigen::Index span = static_cast<Eigen::Index>(window - 1) * delay;
    if (series.size() <= span) {
        throw Error(ErrorKind::Embedding, (label.empty() ? std::string("series") : label) + ": length " +
                                              std::to_string(series.size()) + " is too short for window " +
                                              std::to_string(window) + ", delay " + std::to_string(delay) +
                                              " (need at least " + std::to_string(span + 1) + ")");
    }
    PointCloud cloud;
    cloud.source_label = std::move(label);
    cloud.window = window;
    cloud.delay = delay;
    const Eigen::Index n = series.size() - span;
    cloud.points.resize(n, window);
    for (Eigen::Index r = 0; r < n; ++r) {
        const Eigen::Index t = r + span;  // 0-based index of x_t
        for (int c = 0; c < window; ++c) cloud.points(r, c) = series(t - static_cast<Eigen::Index>(c) * delay);
    }
    for (Eigen::Index i = 0; i < cloud.points.size(); ++i) {
        if (!std::isfinite(cloud.points.data()[i])) {
            throw Error(ErrorKind::Embedding, cloud.source_label + ": non-finite coordinate");
        }
    }
    return cloud;
}

DistanceMatrix pairwise_distances(const PointCloud& cloud) {
    const Eigen::Index n = cloud.points.rows();
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double v = (cloud.points.row(i) - cloud.points.row(j)).norm();
            d(i, j) = v;
            d(j, i) = v;
        }
    }
    return make_distance_matrix(std::move(d));
}

double max_distance(const DistanceMatrix& dist) { return dist.values.size() ? dist.values.maxCoeff() : 0.0; }

std::vector<PersistenceDiagram> rips_persistence(const DistanceMatrix& dist, int max_dim, double eps_max) {
    if (!(eps_max > 0.0)) throw Error(ErrorKind::Parameter, "eps_max must be > 0");
    if (max_dim < 0 || max_dim > 1) throw Error(ErrorKind::Parameter, "max_dim must be 0 or 1");
    dist.validate();
    const auto n = dist.size();

    const std::vector<Edge> edges = sorted_edges(dist.values, eps_max);
    std::vector<bool> tree_edge(edges.size(), false);

    PersistenceDiagram h0;
    h0.dimension = 0;
    h0.eps_max = eps_max;
    UnionFind components(n);
    std::size_t merges = 0;
    for (std::size_t k = 0; k < edges.size() && merges + 1 < n; ++k) {
        if (components.unite(static_cast<std::size_t>(edges[k].i), static_cast<std::size_t>(edges[k].j))) {
            tree_edge[k] = true;
            h0.pairs.push_back({0.0, edges[k].diam});
            ++merges;
        }
    }
    h0.essential_births.assign(n - merges, 0.0);

    std::vector<PersistenceDiagram> out{std::move(h0)};
    if (max_dim >= 1) out.push_back(degree_one(dist.values, eps_max, edges, tree_edge));
    return out;
}

std::vector<FilteredSimplex> rips_complex(const DistanceMatrix& dist, double eps, int max_dim) {
    const int n = static_cast<int>(dist.size());
    const auto& d = dist.values;
    std::vector<FilteredSimplex> out;
    for (int i = 0; i < n; ++i) out.push_back({{i}, 0.0});
    if (max_dim >= 1) {
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (d(i, j) <= eps) out.push_back({{i, j}, d(i, j)});
    }
    if (max_dim >= 2) {
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                for (int k = j + 1; k < n; ++k) {
                    const double v = std::max({d(i, j), d(i, k), d(j, k)});
                    if (v <= eps) out.push_back({{i, j, k}, v});
                }
    }
    std::stable_sort(out.begin(), out.end(), [](const FilteredSimplex& a, const FilteredSimplex& b) {
        if (a.vertices.size() != b.vertices.size()) return a.vertices.size() < b.vertices.size();
        if (a.value != b.value) return a.value < b.value;
        return a.vertices < b.vertices;
    });
    return out;
}

PcaProjection pca_project(const Eigen::Ref<const Eigen::MatrixXd>& rows, int out_dim) {
    const Eigen::Index n = rows.rows();
    if (n < 2) throw Error(ErrorKind::Parameter, "PCA needs at least 2 rows");
    if (out_dim < 1 || out_dim > std::min<Eigen::Index>(n - 1, rows.cols())) {
        throw Error(ErrorKind::Parameter, "PCA out_dim must be in [1, min(rows - 1, cols)]");
    }
    const Eigen::MatrixXd centred = rows.rowwise() - rows.colwise().mean();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(centred, Eigen::ComputeThinV);
    const Eigen::VectorXd sv = svd.singularValues();
    const double total = sv.squaredNorm();

    PcaProjection out;
    out.components = svd.matrixV().leftCols(out_dim);
    for (int c = 0; c < out_dim; ++c) {
        Eigen::Index arg = 0;
        out.components.col(c).cwiseAbs().maxCoeff(&arg);
        if (out.components(arg, c) < 0.0) out.components.col(c) *= -1.0;
    }
    out.coordinates = centred * out.components;
    out.explained_variance = sv.head(out_dim).array().square() / static_cast<double>(n - 1);
    out.explained_ratio = total > 0.0 ? Eigen::VectorXd(sv.head(out_dim).array().square() / total)
                                      : Eigen::VectorXd::Zero(out_dim);
    return out;
}

void write_diagram_csv(std::ostream& out, const std::vector<PersistenceDiagram>& diagrams) {
    csv::write_row(out, {"dimension", "birth", "death", "essential"});
    for (const auto& dgm : diagrams) {
        const std::string dim = std::to_string(dgm.dimension);
        for (const auto& p : dgm.pairs) {
            csv::write_row(out, {dim, format_double(p.birth), format_double(p.death), "0"});
        }
        for (const double b : dgm.essential_births) {
            csv::write_row(out, {dim, format_double(b), format_double(dgm.eps_max), "1"});
        }
    }
}

std::vector<PersistenceDiagram> read_diagram_csv(std::istream& in) {
    const csv::Table table = csv::read(in);
    if (table.header != std::vector<std::string>{"dimension", "birth", "death", "essential"}) {
        throw Error(ErrorKind::Parse, "line 1: expected header 'dimension,birth,death,essential'");
    }
    std::vector<PersistenceDiagram> out;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string tag = "line " + std::to_string(table.line_numbers[r]);
        if (row.size() != 4) throw Error(ErrorKind::Parse, tag + ": expected 4 fields");
        const auto dim = csv::parse_double(row[0]);
        const auto birth = csv::parse_double(row[1]);
        const auto death = csv::parse_double(row[2]);
        if (!dim || !birth || !death || (row[3] != "0" && row[3] != "1")) {
            throw Error(ErrorKind::Parse, tag + ": malformed diagram row");
        }
        const int k = static_cast<int>(*dim);
        while (static_cast<int>(out.size()) <= k) {
            out.push_back({});
            out.back().dimension = static_cast<int>(out.size()) - 1;
        }
        auto& dgm = out[static_cast<std::size_t>(k)];
        if (row[3] == "1") {
            dgm.essential_births.push_back(*birth);
            dgm.eps_max = *death;
        } else {
            dgm.pairs.push_back({*birth, *death});
        }
    }
    return out;
}

}  // namespace fxtda
