#pragma once

#include <iosfwd>
#include <optional>

#include <Eigen/Dense>

namespace fxtda {

/// Spans must be odd and >= 3; trend/low-pass spans default to the usual
/// STL choices derived from the period and seasonal span.
struct StlConfig {
    int period = 12;
    int seasonal_span = 7;
    std::optional<int> trend_span;
    std::optional<int> lowpass_span;
    int seasonal_degree = 0;
    int trend_degree = 1;
    int lowpass_degree = 1;
    int inner_loops = 2;
    int outer_loops = 1;
};

struct StlDecomposition {
    Eigen::VectorXd trend;
    Eigen::VectorXd seasonal;
    Eigen::VectorXd residual;
    Eigen::VectorXd robustness_weights;
    int period = 0;
};

/// Smallest odd integer >= value.
int next_odd(double value);

/// Additive seasonal-trend decomposition by LOESS. Residual is computed as
/// series - trend - seasonal, so the three components re-sum to the input.
StlDecomposition stl_decompose(const Eigen::Ref<const Eigen::VectorXd>& series, const StlConfig& config = {});

/// 3-column CSV: trend,seasonal,residual.
void write_stl_csv(std::ostream& out, const StlDecomposition& stl);

}  // namespace fxtda
