#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fxtda/cluster.hpp"
#include "fxtda/tda_core.hpp"

namespace fxtda::svg {

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

struct LabelledPoint {
    std::string label;
    double x = 0.0;
    double y = 0.0;
};

/// Square matrix as coloured cells with row/column labels.
std::string heatmap(const std::vector<std::string>& labels, const Eigen::MatrixXd& values, const std::string& title);

std::string line_plot(const std::vector<Series>& series, const std::string& title, const std::string& x_label,
                      const std::string& y_label);

std::string bar_chart(const std::vector<std::string>& labels, const std::vector<double>& values,
                      const std::string& title, const std::string& y_label);

std::string scatter(const std::vector<LabelledPoint>& points, const std::string& title, const std::string& x_label,
                    const std::string& y_label);

/// Birth-death scatter with the diagonal; essential classes drawn at the top edge.
std::string persistence_diagram(const std::vector<PersistenceDiagram>& diagrams, const std::string& title);

std::string barcode(const std::vector<PersistenceDiagram>& diagrams, const std::string& title);

std::string dendrogram(const Dendrogram& dendrogram, const std::vector<std::string>& labels, const std::string& title);

/// Escapes &, <, >, " and ' for use in text and attributes.
std::string escape(const std::string& text);

}  // namespace fxtda::svg
