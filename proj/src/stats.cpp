#include "fxtda/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "fxtda/common.hpp"
#include "fxtda/csv.hpp"

namespace fxtda {

namespace {

void require_rows(const ReturnPanel& panel, std::size_t min_rows, const char* op) {
    if (panel.rows() < min_rows) {
        throw Error(ErrorKind::InsufficientData, std::string(op) + " needs at least " +
                                                     std::to_string(min_rows) + " rows, got " +
                                                     std::to_string(panel.rows()));
    }
}

SymmetricMatrix pearson_of_columns(const Eigen::MatrixXd& data, const std::vector<std::string>& labels) {
    const Eigen::Index n = data.cols();
    SymmetricMatrix out{labels, Eigen::MatrixXd::Identity(n, n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const double r = pearson(data.col(i), data.col(j),
                                     labels[static_cast<std::size_t>(i)] + "/" +
                                         labels[static_cast<std::size_t>(j)]);
            out.values(i, j) = r;
            out.values(j, i) = r;
        }
    }
    return out;
}

}  // namespace

double SymmetricMatrix::at(const std::string& a, const std::string& b) const {
    const auto ia = std::find(labels.begin(), labels.end(), a);
    const auto ib = std::find(labels.begin(), labels.end(), b);
    if (ia == labels.end() || ib == labels.end()) {
        throw Error(ErrorKind::Parameter, "unknown label " + (ia == labels.end() ? a : b));
    }
    return values(ia - labels.begin(), ib - labels.begin());
}

double pearson(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
               const std::string& what) {
    if (x.size() != y.size() || x.size() < 2) {
        throw Error(ErrorKind::InsufficientData, "correlation of " + what + " needs two equal-length samples");
    }
    const Eigen::ArrayXd dx = x.array() - x.mean();
    const Eigen::ArrayXd dy = y.array() - y.mean();
    const double sxx = dx.square().sum();
    const double syy = dy.square().sum();
    if (!(sxx > 0.0) || !(syy > 0.0)) {
        throw Error(ErrorKind::UndefinedCorrelation, what + " contains a constant column");
    }
    const double r = (dx * dy).sum() / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

Eigen::VectorXd average_ranks(const Eigen::Ref<const Eigen::VectorXd>& x) {
    const auto n = static_cast<std::size_t>(x.size());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return x(static_cast<Eigen::Index>(a)) < x(static_cast<Eigen::Index>(b));
    });
    Eigen::VectorXd ranks(x.size());
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && x(static_cast<Eigen::Index>(order[j])) == x(static_cast<Eigen::Index>(order[i]))) ++j;
        const double avg = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
        for (std::size_t k = i; k < j; ++k) ranks(static_cast<Eigen::Index>(order[k])) = avg;
        i = j;
    }
    return ranks;
}

SymmetricMatrix covariance_matrix(const ReturnPanel& panel) {
    if (!panel.standardized) {
        throw Error(ErrorKind::Parameter, "covariance_matrix expects a standardised panel");
    }
    require_rows(panel, 3, "covariance_matrix");
    const Eigen::MatrixXd centred = panel.values.rowwise() - panel.values.colwise().mean();
    const double denom = static_cast<double>(panel.rows()) - 1.0;
    const Eigen::Index n = panel.values.cols();
    SymmetricMatrix out{panel.currencies, Eigen::MatrixXd(n, n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            const double c = centred.col(i).dot(centred.col(j)) / denom;
            out.values(i, j) = c;
            out.values(j, i) = c;
        }
    }
    return out;
}

SymmetricMatrix pearson_matrix(const ReturnPanel& panel) {
    require_rows(panel, 3, "pearson_matrix");
    return pearson_of_columns(panel.values, panel.currencies);
}

SymmetricMatrix spearman_matrix(const ReturnPanel& panel) {
    require_rows(panel, 3, "spearman_matrix");
    Eigen::MatrixXd ranks(panel.values.rows(), panel.values.cols());
    for (Eigen::Index j = 0; j < panel.values.cols(); ++j) ranks.col(j) = average_ranks(panel.values.col(j));
    return pearson_of_columns(ranks, panel.currencies);
}

SymmetricMatrix cross_correlation_matrix(const ReturnPanel& panel, int max_lag) {
    if (max_lag < 0) throw Error(ErrorKind::Parameter, "max_lag must be >= 0");
    require_rows(panel, static_cast<std::size_t>(max_lag) + 3, "cross_correlation_matrix");
    const Eigen::Index rows = panel.values.rows();
    const Eigen::Index n = panel.values.cols();
    SymmetricMatrix out{panel.currencies, Eigen::MatrixXd::Identity(n, n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const std::string what = panel.currencies[static_cast<std::size_t>(i)] + "/" +
                                     panel.currencies[static_cast<std::size_t>(j)];
            double best = 0.0;
            bool have = false;
            for (int lag = -max_lag; lag <= max_lag; ++lag) {
                const Eigen::Index len = rows - std::abs(lag);
                const Eigen::Index xs = lag >= 0 ? 0 : -lag;
                const Eigen::Index ys = lag >= 0 ? lag : 0;
                const double r = pearson(panel.values.col(i).segment(xs, len),
                                         panel.values.col(j).segment(ys, len), what);
                if (!have || std::abs(r) > std::abs(best)) {
                    best = r;
                    have = true;
                }
            }
            out.values(i, j) = best;
            out.values(j, i) = best;
        }
    }
    return out;
}

Eigen::VectorXd variance_summary(const ReturnPanel& panel) {
    require_rows(panel, 2, "variance_summary");
    const double denom = static_cast<double>(panel.rows()) - 1.0;
    const Eigen::MatrixXd centred = panel.values.rowwise() - panel.values.colwise().mean();
    return centred.colwise().squaredNorm().transpose() / denom;
}

void write_matrix_csv(std::ostream& out, const std::vector<std::string>& labels,
                      const Eigen::MatrixXd& values) {
    std::vector<std::string> fields{"label"};
    fields.insert(fields.end(), labels.begin(), labels.end());
    csv::write_row(out, fields);
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        fields.assign(1, labels[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < values.cols(); ++j) fields.push_back(format_double(values(i, j)));
        csv::write_row(out, fields);
    }
}

void write_matrix_csv(std::ostream& out, const SymmetricMatrix& m) { write_matrix_csv(out, m.labels, m.values); }

SymmetricMatrix read_matrix_csv(std::istream& in) {
    const csv::Table table = csv::read(in);
    if (table.header.empty() || table.header.front() != "label") {
        throw Error(ErrorKind::Parse, "line 1: expected header 'label,<codes...>'");
    }
    SymmetricMatrix m;
    m.labels.assign(table.header.begin() + 1, table.header.end());
    const auto n = static_cast<Eigen::Index>(m.labels.size());
    if (table.rows.size() != m.labels.size()) {
        throw Error(ErrorKind::Parse, "matrix CSV is not square");
    }
    m.values.resize(n, n);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::string tag = "line " + std::to_string(table.line_numbers[r]);
        if (row.size() != table.header.size() || row[0] != m.labels[r]) {
            throw Error(ErrorKind::Parse, tag + ": row label or width mismatch");
        }
        for (std::size_t c = 1; c < row.size(); ++c) {
            const auto v = csv::parse_double(row[c]);
            if (!v) throw Error(ErrorKind::Parse, tag + ": bad number '" + row[c] + "'");
            m.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c - 1)) = *v;
        }
    }
    return m;
}

std::string matrix_to_json(const SymmetricMatrix& m) {
    nlohmann::json j;
    j["labels"] = m.labels;
    auto& rows = j["values"] = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
        std::vector<double> row;
        for (Eigen::Index k = 0; k < m.values.cols(); ++k) row.push_back(m.values(i, k));
        rows.push_back(row);
    }
    return j.dump(2);
}

}  // namespace fxtda
