#include "fxtda/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>

#include <json.hpp>

#include "fxtda/common.hpp"
#include "fxtda/csv.hpp"
#include "fxtda/stats.hpp"

namespace fxtda {

namespace {

void check_labels(std::size_t n, const ClusterAssignment& labels) {
    if (labels.labels.size() != n) {
        throw Error(ErrorKind::MismatchedItems, "assignment covers " + std::to_string(labels.labels.size()) +
                                                    " items, expected " + std::to_string(n));
    }
    labels.validate();
}

// Labels of b re-ordered to follow a's item order.
std::vector<int> aligned_labels(const ClusterAssignment& a, const ClusterAssignment& b) {
    if (a.items.size() != b.items.size()) throw Error(ErrorKind::MismatchedItems, "partitions cover different item counts");
    std::map<std::string, int> lookup;
    for (std::size_t i = 0; i < b.items.size(); ++i) lookup[b.items[i]] = b.labels[i];
    if (lookup.size() != b.items.size()) throw Error(ErrorKind::MismatchedItems, "duplicate item names");
    std::vector<int> out;
    out.reserve(a.items.size());
    for (const auto& item : a.items) {
        const auto it = lookup.find(item);
        if (it == lookup.end()) throw Error(ErrorKind::MismatchedItems, "item " + item + " missing from second partition");
        out.push_back(it->second);
    }
    return out;
}

struct Contingency {
    std::map<std::pair<int, int>, double> cells;
    std::map<int, double> rows;
    std::map<int, double> cols;
    double n = 0.0;
};

Contingency contingency(const ClusterAssignment& a, const ClusterAssignment& b) {
    const auto lb = aligned_labels(a, b);
    Contingency t;
    for (std::size_t i = 0; i < lb.size(); ++i) {
        t.cells[{a.labels[i], lb[i]}] += 1.0;
        t.rows[a.labels[i]] += 1.0;
        t.cols[lb[i]] += 1.0;
    }
    t.n = static_cast<double>(lb.size());
    return t;
}

double choose2(double x) { return x * (x - 1.0) / 2.0; }

std::string fmt(double v) { return format_double(v); }

}  // namespace

Eigen::VectorXd silhouette_samples(const DistanceMatrix& dist, const ClusterAssignment& labels) {
    const std::size_t n = dist.size();
    check_labels(n, labels);
    if (labels.k < 2) throw Error(ErrorKind::UndefinedMetric, "silhouette needs at least 2 clusters");

    std::vector<int> sizes(static_cast<std::size_t>(labels.k), 0);
    for (const int l : labels.labels) ++sizes[static_cast<std::size_t>(l)];

    Eigen::VectorXd s = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    std::vector<double> sums(static_cast<std::size_t>(labels.k));
    for (std::size_t i = 0; i < n; ++i) {
        const int own = labels.labels[i];
        if (sizes[static_cast<std::size_t>(own)] < 2) continue;
        std::fill(sums.begin(), sums.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            sums[static_cast<std::size_t>(labels.labels[j])] += dist.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
        const double a = sums[static_cast<std::size_t>(own)] / (sizes[static_cast<std::size_t>(own)] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (int c = 0; c < labels.k; ++c) {
            if (c == own) continue;
            b = std::min(b, sums[static_cast<std::size_t>(c)] / sizes[static_cast<std::size_t>(c)]);
        }
        const double denom = std::max(a, b);
        s(static_cast<Eigen::Index>(i)) = denom > 0.0 ? (b - a) / denom : 0.0;
    }
    return s;
}

double silhouette(const DistanceMatrix& dist, const ClusterAssignment& labels) {
    return silhouette_samples(dist, labels).mean();
}

FlaggedScore calinski_harabasz(const Eigen::Ref<const Eigen::MatrixXd>& points, const ClusterAssignment& labels) {
    const auto n = static_cast<std::size_t>(points.rows());
    check_labels(n, labels);
    const int k = labels.k;
    if (k < 2) throw Error(ErrorKind::UndefinedMetric, "Calinski-Harabasz needs at least 2 clusters");
    if (static_cast<int>(n) <= k) throw Error(ErrorKind::UndefinedMetric, "Calinski-Harabasz needs more items than clusters");

    const Eigen::RowVectorXd overall = points.colwise().mean();
    Eigen::MatrixXd centroids = Eigen::MatrixXd::Zero(k, points.cols());
    std::vector<double> sizes(static_cast<std::size_t>(k), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        centroids.row(labels.labels[i]) += points.row(static_cast<Eigen::Index>(i));
        sizes[static_cast<std::size_t>(labels.labels[i])] += 1.0;
    }
    double between = 0.0;
    for (int c = 0; c < k; ++c) {
        centroids.row(c) /= sizes[static_cast<std::size_t>(c)];
        between += sizes[static_cast<std::size_t>(c)] * (centroids.row(c) - overall).squaredNorm();
    }
    double within = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        within += (points.row(static_cast<Eigen::Index>(i)) - centroids.row(labels.labels[i])).squaredNorm();
    }
    if (within == 0.0) return {std::numeric_limits<double>::infinity(), true};
    return {(between / (k - 1)) / (within / (static_cast<double>(n) - k)), false};
}

double adjusted_rand(const ClusterAssignment& a, const ClusterAssignment& b) {
    const Contingency t = contingency(a, b);
    double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
    for (const auto& [cell, count] : t.cells) index += choose2(count);
    for (const auto& [label, count] : t.rows) sum_rows += choose2(count);
    for (const auto& [label, count] : t.cols) sum_cols += choose2(count);
    const double total = choose2(t.n);
    if (total == 0.0) return 1.0;
    const double expected = sum_rows * sum_cols / total;
    const double max_index = 0.5 * (sum_rows + sum_cols);
    if (max_index == expected) {
        // Both partitions trivial in the same way (all singletons or one block).
        return index == expected ? 1.0 : 0.0;
    }
    return (index - expected) / (max_index - expected);
}

FlaggedScore nmi(const ClusterAssignment& a, const ClusterAssignment& b) {
    const Contingency t = contingency(a, b);
    auto entropy = [&](const std::map<int, double>& margins) {
        double h = 0.0;
        for (const auto& [label, count] : margins) {
            const double p = count / t.n;
            if (p > 0.0) h -= p * std::log(p);
        }
        return h;
    };
    const double ha = entropy(t.rows);
    const double hb = entropy(t.cols);
    if (t.rows.size() < 2 || t.cols.size() < 2 || ha <= 0.0 || hb <= 0.0) return {0.0, true};
    double mi = 0.0;
    for (const auto& [cell, count] : t.cells) {
        const double pij = count / t.n;
        const double pi = t.rows.at(cell.first) / t.n;
        const double pj = t.cols.at(cell.second) / t.n;
        mi += pij * std::log(pij / (pi * pj));
    }
    return {std::clamp(mi / std::sqrt(ha * hb), 0.0, 1.0), false};
}

double mantel(const DistanceMatrix& a, const DistanceMatrix& b) {
    if (a.size() != b.size() || a.labels != b.labels) {
        throw Error(ErrorKind::MismatchedItems, "Mantel needs matrices over the same labels in the same order");
    }
    const auto n = static_cast<Eigen::Index>(a.size());
    if (n < 3) throw Error(ErrorKind::InsufficientData, "Mantel needs at least 3 items");
    Eigen::VectorXd x(n * (n - 1) / 2), y(n * (n - 1) / 2);
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j, ++k) {
            x(k) = a.values(i, j);
            y(k) = b.values(i, j);
        }
    }
    return pearson(x, y, "distance matrix upper triangle");
}

void write_evaluation_csv(std::ostream& out, const EvaluationReport& report) {
    csv::write_row(out, {"model", "method", "feature_space", "k", "silhouette", "calinski_harabasz",
                         "silhouette_space", "ch_space", "note"});
    for (const auto& r : report.rows) {
        csv::write_row(out, {r.model, to_string(r.method), to_string(r.feature_space), std::to_string(r.k),
                             fmt(r.silhouette), fmt(r.calinski_harabasz), r.silhouette_space, r.ch_space, r.note});
    }
}

EvaluationReport read_evaluation_csv(std::istream& in) {
    const csv::Table table = csv::read(in);
    if (table.header.size() != 9 || table.header[0] != "model") {
        throw Error(ErrorKind::Parse, "line 1: expected evaluation report header");
    }
    EvaluationReport report;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string tag = "line " + std::to_string(table.line_numbers[r]);
        if (row.size() != 9) throw Error(ErrorKind::Parse, tag + ": expected 9 fields");
        EvaluationRow e;
        e.model = row[0];
        if (row[1] == "kmeans") e.method = ClusterMethod::KMeans;
        else if (row[1] == "hierarchical") e.method = ClusterMethod::Hierarchical;
        else throw Error(ErrorKind::Parse, tag + ": unknown method");
        if (row[2] == "statistical") e.feature_space = FeatureSpace::Statistical;
        else if (row[2] == "tda") e.feature_space = FeatureSpace::Tda;
        else throw Error(ErrorKind::Parse, tag + ": unknown feature space");
        const auto k = csv::parse_double(row[3]);
        const auto s = csv::parse_double(row[4]);
        const auto ch = csv::parse_double(row[5]);
        if (!k || !s || !ch) throw Error(ErrorKind::Parse, tag + ": malformed number");
        e.k = static_cast<int>(*k);
        e.silhouette = *s;
        e.calinski_harabasz = *ch;
        e.silhouette_space = row[6];
        e.ch_space = row[7];
        e.note = row[8];
        report.rows.push_back(std::move(e));
    }
    return report;
}

std::string evaluation_to_json(const EvaluationReport& report) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"model", r.model},
                        {"method", to_string(r.method)},
                        {"feature_space", to_string(r.feature_space)},
                        {"k", r.k},
                        {"silhouette", r.silhouette},
                        {"calinski_harabasz", std::isfinite(r.calinski_harabasz) ? nlohmann::json(r.calinski_harabasz)
                                                                                 : nlohmann::json("inf")},
                        {"silhouette_space", r.silhouette_space},
                        {"ch_space", r.ch_space},
                        {"note", r.note}});
    }
    return nlohmann::json{{"rows", rows}}.dump(2);
}

void write_sensitivity_csv(std::ostream& out, const SensitivityReport& report) {
    csv::write_row(out, {"param_change", "mantel", "ari", "nmi", "error"});
    for (const auto& r : report.rows) {
        if (r.error.empty()) {
            csv::write_row(out, {r.param_change, fmt(r.mantel), fmt(r.ari), fmt(r.nmi), ""});
        } else {
            csv::write_row(out, {r.param_change, "", "", "", r.error});
        }
    }
}

SensitivityReport read_sensitivity_csv(std::istream& in) {
    const csv::Table table = csv::read(in);
    if (table.header != std::vector<std::string>{"param_change", "mantel", "ari", "nmi", "error"}) {
        throw Error(ErrorKind::Parse, "line 1: expected sensitivity report header");
    }
    SensitivityReport report;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row.size() != 5) throw Error(ErrorKind::Parse, "line " + std::to_string(table.line_numbers[r]) + ": expected 5 fields");
        SensitivityRow s;
        s.param_change = row[0];
        s.error = row[4];
        if (s.error.empty()) {
            const auto m = csv::parse_double(row[1]);
            const auto a = csv::parse_double(row[2]);
            const auto n = csv::parse_double(row[3]);
            if (!m || !a || !n) throw Error(ErrorKind::Parse, "line " + std::to_string(table.line_numbers[r]) + ": malformed number");
            s.mantel = *m;
            s.ari = *a;
            s.nmi = *n;
        }
        report.rows.push_back(std::move(s));
    }
    if (!report.rows.empty()) report.baseline = report.rows.front().param_change;
    return report;
}

}  // namespace fxtda
