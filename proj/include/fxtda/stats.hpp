#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fxtda/ingest.hpp"

namespace fxtda {

/// Square symmetric matrix labelled by currency code. Builders fill the upper
/// triangle and mirror it, so values(i, j) == values(j, i) bit for bit.
struct SymmetricMatrix {
    std::vector<std::string> labels;
    Eigen::MatrixXd values;

    std::size_t size() const { return labels.size(); }
    double at(const std::string& a, const std::string& b) const;
};

/// Sample covariance (n-1). Requires a standardised panel with at least 3 rows.
SymmetricMatrix covariance_matrix(const ReturnPanel& panel);

SymmetricMatrix pearson_matrix(const ReturnPanel& panel);

/// Pearson correlation of column ranks; ties take their average rank.
SymmetricMatrix spearman_matrix(const ReturnPanel& panel);

/// For each pair, the signed correlation with the largest magnitude over lags
/// -max_lag..max_lag. Lag l pairs x[t] with y[t + l].
SymmetricMatrix cross_correlation_matrix(const ReturnPanel& panel, int max_lag);

/// Sample variance (n-1) per column, in panel column order.
Eigen::VectorXd variance_summary(const ReturnPanel& panel);

/// Pearson correlation of two equally long vectors. Throws UndefinedCorrelation
/// when either side is constant; `what` names the offending input.
double pearson(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& y,
               const std::string& what = "series");

/// 1-based ranks with ties averaged.
Eigen::VectorXd average_ranks(const Eigen::Ref<const Eigen::VectorXd>& x);

/// Labelled CSV: header "label,<codes...>", one row per label.
void write_matrix_csv(std::ostream& out, const std::vector<std::string>& labels,
                      const Eigen::MatrixXd& values);
void write_matrix_csv(std::ostream& out, const SymmetricMatrix& m);
SymmetricMatrix read_matrix_csv(std::istream& in);

std::string matrix_to_json(const SymmetricMatrix& m);

}  // namespace fxtda
