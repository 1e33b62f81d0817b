#include "fxtda/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <random>

#include "fxtda/common.hpp"
#include "fxtda/csv.hpp"

namespace fxtda {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Uniform in [0, 1) from the top 53 bits; identical on every platform.
double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double squared_distance(const Eigen::Ref<const Eigen::MatrixXd>& points, Eigen::Index row,
                        const Eigen::MatrixXd& centroids, Eigen::Index c) {
    return (points.row(row) - centroids.row(c)).squaredNorm();
}

// Reassigns every point; keeps the current label on exact ties. Returns true if
// any label changed.
bool assign(const Eigen::Ref<const Eigen::MatrixXd>& points, const Eigen::MatrixXd& centroids,
            std::vector<int>& labels, double& inertia) {
    bool changed = false;
    inertia = 0.0;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        int best = labels[static_cast<std::size_t>(i)];
        double best_d = best >= 0 ? squared_distance(points, i, centroids, best)
                                  : std::numeric_limits<double>::infinity();
        for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
            const double d = squared_distance(points, i, centroids, c);
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(c);
            }
        }
        if (best != labels[static_cast<std::size_t>(i)]) {
            labels[static_cast<std::size_t>(i)] = best;
            changed = true;
        }
        inertia += best_d;
    }
    return changed;
}

void check_kmeans_args(const Eigen::Ref<const Eigen::MatrixXd>& points, int k) {
    if (points.rows() < 2) throw Error(ErrorKind::Parameter, "k-means needs at least 2 rows");
    if (k < 1 || k > points.rows()) {
        throw Error(ErrorKind::Parameter, "k = " + std::to_string(k) + " must lie in [1, " +
                                              std::to_string(points.rows()) + "]");
    }
}

}  // namespace

const char* to_string(ClusterMethod method) {
    return method == ClusterMethod::KMeans ? "kmeans" : "hierarchical";
}

const char* to_string(FeatureSpace space) { return space == FeatureSpace::Statistical ? "statistical" : "tda"; }

void ClusterAssignment::validate() const {
    if (items.size() != labels.size()) throw Error(ErrorKind::Parameter, "assignment items and labels differ in size");
    std::vector<bool> seen(static_cast<std::size_t>(std::max(k, 0)), false);
    for (const int l : labels) {
        if (l < 0 || l >= k) throw Error(ErrorKind::Parameter, "cluster id out of range");
        seen[static_cast<std::size_t>(l)] = true;
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
        throw Error(ErrorKind::Parameter, "cluster ids are not contiguous");
    }
}

ClusterAssignment make_assignment(std::vector<std::string> items, const std::vector<int>& labels, ClusterMethod method,
                                  FeatureSpace space) {
    if (items.empty()) {
        for (std::size_t i = 0; i < labels.size(); ++i) items.push_back(std::to_string(i));
    }
    ClusterAssignment out;
    out.items = std::move(items);
    out.method = method;
    out.feature_space = space;
    std::map<int, int> remap;
    for (const int l : labels) {
        const auto [it, inserted] = remap.emplace(l, static_cast<int>(remap.size()));
        out.labels.push_back(it->second);
    }
    out.k = static_cast<int>(remap.size());
    out.validate();
    return out;
}

Eigen::MatrixXd kmeans_plus_plus(const Eigen::Ref<const Eigen::MatrixXd>& points, int k, std::uint64_t seed) {
    check_kmeans_args(points, k);
    std::mt19937_64 rng(seed);
    const Eigen::Index n = points.rows();
    Eigen::MatrixXd centroids(k, points.cols());
    std::vector<bool> chosen(static_cast<std::size_t>(n), false);

    auto first = static_cast<Eigen::Index>(unit_uniform(rng) * static_cast<double>(n));
    first = std::min(first, n - 1);
    centroids.row(0) = points.row(first);
    chosen[static_cast<std::size_t>(first)] = true;

    Eigen::VectorXd nearest(n);
    for (Eigen::Index i = 0; i < n; ++i) nearest(i) = squared_distance(points, i, centroids, 0);

    for (int c = 1; c < k; ++c) {
        const double total = nearest.sum();
        Eigen::Index pick = -1;
        if (total > 0.0) {
            const double target = unit_uniform(rng) * total;
            double cumulative = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                cumulative += nearest(i);
                if (nearest(i) > 0.0 && target < cumulative) {
                    pick = i;
                    break;
                }
            }
            if (pick < 0) {  // rounding at the top end
                for (Eigen::Index i = n; i-- > 0;) {
                    if (nearest(i) > 0.0) {
                        pick = i;
                        break;
                    }
                }
            }
        } else {
            for (Eigen::Index i = 0; i < n; ++i) {
                if (!chosen[static_cast<std::size_t>(i)]) {
                    pick = i;
                    break;
                }
            }
        }
        centroids.row(c) = points.row(pick);
        chosen[static_cast<std::size_t>(pick)] = true;
        for (Eigen::Index i = 0; i < n; ++i) nearest(i) = std::min(nearest(i), squared_distance(points, i, centroids, c));
    }
    return centroids;
}

KMeansRun lloyd(const Eigen::Ref<const Eigen::MatrixXd>& points, Eigen::MatrixXd centroids, int max_iterations) {
    const Eigen::Index n = points.rows();
    const auto k = centroids.rows();
    KMeansRun run;
    run.labels.assign(static_cast<std::size_t>(n), -1);
    double inertia = 0.0;
    assign(points, centroids, run.labels, inertia);
    run.inertia_history.push_back(inertia);

    for (int iter = 0; iter < max_iterations; ++iter) {
        ++run.iterations;
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
        std::vector<int> counts(static_cast<std::size_t>(k), 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            sums.row(run.labels[static_cast<std::size_t>(i)]) += points.row(i);
            ++counts[static_cast<std::size_t>(run.labels[static_cast<std::size_t>(i)])];
        }
        for (Eigen::Index c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) centroids.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
        }
        for (Eigen::Index c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) continue;
            // Move the worst-fitted point (from a cluster that can spare it) into the empty one.
            Eigen::Index far = -1;
            double far_d = -1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const int l = run.labels[static_cast<std::size_t>(i)];
                if (counts[static_cast<std::size_t>(l)] < 2) continue;
                const double d = squared_distance(points, i, centroids, l);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            if (far < 0) break;
            --counts[static_cast<std::size_t>(run.labels[static_cast<std::size_t>(far)])];
            run.labels[static_cast<std::size_t>(far)] = static_cast<int>(c);
            counts[static_cast<std::size_t>(c)] = 1;
            centroids.row(c) = points.row(far);
        }
        const bool changed = assign(points, centroids, run.labels, inertia);
        run.inertia_history.push_back(inertia);
        if (!changed) break;
    }

    // Final centroids are the means of the final clusters.
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
        sums.row(run.labels[static_cast<std::size_t>(i)]) += points.row(i);
        ++counts[static_cast<std::size_t>(run.labels[static_cast<std::size_t>(i)])];
    }
    for (Eigen::Index c = 0; c < k; ++c) {
        if (counts[static_cast<std::size_t>(c)] > 0) centroids.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
    }
    run.centroids = std::move(centroids);
    run.inertia = within_cluster_ss(points, run.labels);
    return run;
}

double within_cluster_ss(const Eigen::Ref<const Eigen::MatrixXd>& points, const std::vector<int>& labels) {
    std::map<int, std::vector<Eigen::Index>> members;
    for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(static_cast<Eigen::Index>(i));
    double total = 0.0;
    for (const auto& [label, rows] : members) {
        Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(points.cols());
        for (const auto r : rows) mean += points.row(r);
        mean /= static_cast<double>(rows.size());
        for (const auto r : rows) total += (points.row(r) - mean).squaredNorm();
    }
    return total;
}

KMeansRun kmeans_run(const Eigen::Ref<const Eigen::MatrixXd>& points, int k, const KMeansOptions& options) {
    check_kmeans_args(points, k);
    if (options.restarts < 1) throw Error(ErrorKind::Parameter, "k-means restarts must be >= 1");
    std::vector<KMeansRun> runs(static_cast<std::size_t>(options.restarts));
    parallel_for(runs.size(), options.threads, [&](std::size_t r) {
        const std::uint64_t sub_seed = splitmix64(options.seed ^ splitmix64(r + 1));
        runs[r] = lloyd(points, kmeans_plus_plus(points, k, sub_seed), options.max_iterations);
    });
    std::size_t best = 0;
    for (std::size_t r = 1; r < runs.size(); ++r) {
        if (runs[r].inertia < runs[best].inertia) best = r;
    }
    return std::move(runs[best]);
}

ClusterAssignment kmeans(const Eigen::Ref<const Eigen::MatrixXd>& points, const std::vector<std::string>& items, int k,
                         const KMeansOptions& options, FeatureSpace space) {
    if (!items.empty() && items.size() != static_cast<std::size_t>(points.rows())) {
        throw Error(ErrorKind::Parameter, "one item name per row is required");
    }
    const KMeansRun run = kmeans_run(points, k, options);
    ClusterAssignment out = make_assignment(items, run.labels, ClusterMethod::KMeans, space);
    out.inertia = run.inertia;
    return out;
}

std::vector<std::pair<int, double>> elbow_curve(const Eigen::Ref<const Eigen::MatrixXd>& points, int k_max,
                                                const KMeansOptions& options) {
    check_kmeans_args(points, k_max);
    std::vector<std::pair<int, double>> curve;
    KMeansRun previous;
    for (int k = 1; k <= k_max; ++k) {
        KMeansOptions per_k = options;
        per_k.seed = splitmix64(options.seed + static_cast<std::uint64_t>(k));
        KMeansRun run = kmeans_run(points, k, per_k);
        if (k > 1) {
            // Split start: previous centroids plus the point worst served by them.
            Eigen::Index far = 0;
            double far_d = -1.0;
            for (Eigen::Index i = 0; i < points.rows(); ++i) {
                const double d = squared_distance(points, i, previous.centroids, previous.labels[static_cast<std::size_t>(i)]);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            Eigen::MatrixXd start(k, points.cols());
            start.topRows(k - 1) = previous.centroids;
            start.row(k - 1) = points.row(far);
            KMeansRun split = lloyd(points, start, options.max_iterations);
            if (split.inertia < run.inertia) run = std::move(split);
        }
        curve.emplace_back(k, run.inertia);
        previous = std::move(run);
    }
    return curve;
}

Dendrogram complete_linkage(const DistanceMatrix& dist) {
    dist.validate();
    const int n = static_cast<int>(dist.size());
    Dendrogram out;
    out.leaves = n;
    if (n == 0) return out;

    const int total = 2 * n - 1;
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(total, total);
    d.topLeftCorner(n, n) = dist.values;
    std::vector<int> active(static_cast<std::size_t>(n));
    std::iota(active.begin(), active.end(), 0);
    std::vector<int> size(static_cast<std::size_t>(total), 1);

    for (int step = 0; step < n - 1; ++step) {
        int best_a = -1, best_b = -1;
        double best = std::numeric_limits<double>::infinity();
        // `active` is kept sorted, so scanning (a, b) in order resolves ties lexicographically.
        for (std::size_t x = 0; x < active.size(); ++x) {
            for (std::size_t y = x + 1; y < active.size(); ++y) {
                const double v = d(active[x], active[y]);
                if (v < best) {
                    best = v;
                    best_a = active[x];
                    best_b = active[y];
                }
            }
        }
        const int node = n + step;
        size[static_cast<std::size_t>(node)] = size[static_cast<std::size_t>(best_a)] + size[static_cast<std::size_t>(best_b)];
        out.merges.push_back({best_a, best_b, best, size[static_cast<std::size_t>(node)]});
        active.erase(std::remove_if(active.begin(), active.end(), [&](int c) { return c == best_a || c == best_b; }),
                     active.end());
        for (const int c : active) {
            const double v = std::max(d(best_a, c), d(best_b, c));
            d(node, c) = v;
            d(c, node) = v;
        }
        active.push_back(node);
    }
    return out;
}

std::vector<int> cut_dendrogram(const Dendrogram& dendrogram, int k) {
    const int n = dendrogram.leaves;
    if (k < 1 || k > n) throw Error(ErrorKind::Parameter, "cut size k must lie in [1, n]");
    std::vector<int> owner(static_cast<std::size_t>(2 * n), 0);  // node -> representative
    std::iota(owner.begin(), owner.end(), 0);
    std::vector<int> parent(static_cast<std::size_t>(2 * n));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)];
        return x;
    };
    for (int s = 0; s < n - k; ++s) {
        const auto& m = dendrogram.merges[static_cast<std::size_t>(s)];
        const int node = n + s;
        parent[static_cast<std::size_t>(find(m.node_a))] = node;
        parent[static_cast<std::size_t>(find(m.node_b))] = node;
    }
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = find(i);
    return labels;
}

HierarchicalResult hierarchical_complete(const DistanceMatrix& dist, int k, FeatureSpace space) {
    HierarchicalResult out;
    out.dendrogram = complete_linkage(dist);
    out.assignment = make_assignment(dist.labels, cut_dendrogram(out.dendrogram, k), ClusterMethod::Hierarchical, space);
    return out;
}

MdsResult classical_mds(const DistanceMatrix& dist, int out_dim) {
    dist.validate();
    const auto n = static_cast<Eigen::Index>(dist.size());
    if (out_dim < 1 || out_dim >= n) {
        throw Error(ErrorKind::Parameter, "MDS out_dim must lie in [1, n - 1]");
    }
    const Eigen::MatrixXd sq = dist.values.array().square();
    const Eigen::MatrixXd centring = Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / n);
    Eigen::MatrixXd b = -0.5 * centring * sq * centring;
    b = 0.5 * (b + b.transpose());

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b);
    const Eigen::VectorXd ascending = eig.eigenvalues();
    const Eigen::VectorXd values = ascending.reverse();
    const Eigen::MatrixXd vectors = eig.eigenvectors().rowwise().reverse();

    MdsResult out;
    out.eigenvalues = values;
    double positive_mass = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (values(i) > 0.0) positive_mass += values(i);
        else if (values(i) < 0.0) ++out.negative_eigenvalues;
    }
    out.embedding.points.resize(n, out_dim);
    out.embedding.source_label = "mds";
    out.explained_fraction.resize(out_dim);
    for (int c = 0; c < out_dim; ++c) {
        const double lambda = values(c);
        Eigen::VectorXd v = vectors.col(c);
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0.0) v = -v;
        if (lambda > 0.0) {
            out.embedding.points.col(c) = v * std::sqrt(lambda);
            out.explained_fraction(c) = positive_mass > 0.0 ? lambda / positive_mass : 0.0;
        } else {
            if (lambda < 0.0) ++out.clamped_negative;
            out.embedding.points.col(c).setZero();
            out.explained_fraction(c) = 0.0;
        }
    }
    return out;
}

void write_assignment_csv(std::ostream& out, const ClusterAssignment& assignment) {
    csv::write_row(out, {"item", "label"});
    for (std::size_t i = 0; i < assignment.items.size(); ++i) {
        csv::write_row(out, {assignment.items[i], std::to_string(assignment.labels[i])});
    }
}

ClusterAssignment read_assignment_csv(std::istream& in) {
    const csv::Table table = csv::read(in);
    if (table.header != std::vector<std::string>{"item", "label"}) {
        throw Error(ErrorKind::Parse, "line 1: expected header 'item,label'");
    }
    std::vector<std::string> items;
    std::vector<int> labels;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const auto v = row.size() == 2 ? csv::parse_double(row[1]) : std::nullopt;
        if (!v) throw Error(ErrorKind::Parse, "line " + std::to_string(table.line_numbers[r]) + ": malformed row");
        items.push_back(row[0]);
        labels.push_back(static_cast<int>(*v));
    }
    return make_assignment(std::move(items), labels);
}

void write_dendrogram_csv(std::ostream& out, const Dendrogram& dendrogram, const std::vector<std::string>& labels) {
    csv::write_row(out, {"kind", "node", "a", "b", "height", "size", "label"});
    for (int i = 0; i < dendrogram.leaves; ++i) {
        csv::write_row(out, {"leaf", std::to_string(i), "", "", "0", "1",
                             static_cast<std::size_t>(i) < labels.size() ? labels[static_cast<std::size_t>(i)] : std::to_string(i)});
    }
    for (std::size_t s = 0; s < dendrogram.merges.size(); ++s) {
        const auto& m = dendrogram.merges[s];
        csv::write_row(out, {"merge", std::to_string(dendrogram.leaves + static_cast<int>(s)), std::to_string(m.node_a),
                             std::to_string(m.node_b), format_double(m.height), std::to_string(m.size), ""});
    }
}

Dendrogram read_dendrogram_csv(std::istream& in, std::vector<std::string>* labels) {
    const csv::Table table = csv::read(in);
    if (table.header != std::vector<std::string>{"kind", "node", "a", "b", "height", "size", "label"}) {
        throw Error(ErrorKind::Parse, "line 1: expected dendrogram header");
    }
    Dendrogram out;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string tag = "line " + std::to_string(table.line_numbers[r]);
        if (row.size() != 7) throw Error(ErrorKind::Parse, tag + ": expected 7 fields");
        if (row[0] == "leaf") {
            ++out.leaves;
            if (labels) labels->push_back(row[6]);
        } else if (row[0] == "merge") {
            const auto a = csv::parse_double(row[2]);
            const auto b = csv::parse_double(row[3]);
            const auto h = csv::parse_double(row[4]);
            const auto s = csv::parse_double(row[5]);
            if (!a || !b || !h || !s) throw Error(ErrorKind::Parse, tag + ": malformed merge");
            out.merges.push_back({static_cast<int>(*a), static_cast<int>(*b), *h, static_cast<int>(*s)});
        } else {
            throw Error(ErrorKind::Parse, tag + ": unknown row kind '" + row[0] + "'");
        }
    }
    return out;
}

}  // namespace fxtda
