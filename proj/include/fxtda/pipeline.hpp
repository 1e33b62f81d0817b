#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fxtda/cluster.hpp"
#include "fxtda/eval.hpp"
#include "fxtda/ingest.hpp"
#include "fxtda/stl.hpp"
#include "fxtda/summaries.hpp"
#include "fxtda/tda_core.hpp"

namespace fxtda {

enum class DataLayout { PerCurrency, Wide };

/// Where the daily reference rates live. PerCurrency reads one file per code
/// (file_pattern with "{code}" substituted); Wide reads a single file with one
/// column per code.
struct DataSource {
    std::filesystem::path dir;
    DataLayout layout = DataLayout::PerCurrency;
    std::string file_pattern = "{code}.csv";
    std::string wide_file = "eurofxref-hist.csv";
    ParseOptions parse;
};

/// One sensitivity-grid row. Only the embedding and the filtration ceiling can
/// be overridden; eps_scale multiplies the ceiling the row would otherwise use.
struct SensitivityOverride {
    std::string name;
    std::optional<int> window;
    std::optional<int> delay;
    std::optional<double> eps_max;
    std::optional<double> eps_scale;
};

struct PipelineConfig {
    DataSource data;
    std::vector<std::string> currencies;
    std::vector<std::string> exclude{"EUR"};
    std::optional<Date> start;
    std::optional<Date> end;
    MonthlyAggregation aggregation = MonthlyAggregation::Last;

    int window = 4;
    int delay = 1;
    std::optional<double> eps_max;  // nullopt: largest pairwise distance over all clouds
    WassersteinOptions wasserstein;
    std::vector<double> dim_weights{1.0, 1.0};

    int k = 3;
    std::uint64_t seed = 42;
    int k_max_elbow = 10;
    int kmeans_restarts = 10;
    int kmeans_max_iterations = 300;

    int max_lag = 1;
    int grid_size = 200;
    int landscape_layers = 3;
    int mds_dim = 5;
    StlConfig stl;

    std::vector<SensitivityOverride> sensitivity_grid;
    std::filesystem::path output_dir = "report";
    std::size_t threads = 1;

    /// Currencies after removing the excluded codes, in configured order.
    std::vector<std::string> active_currencies() const;
    /// Throws ErrorKind::Config naming the offending field.
    void validate() const;
};

/// (3,1), (4,1), (5,1), (4,2), (6,1) and the filtration ceiling at +/-25%.
std::vector<SensitivityOverride> default_sensitivity_grid();

/// Parses the JSON configuration; relative paths resolve against base_dir.
PipelineConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const PipelineConfig& config);

struct PreparedData {
    RatePanel daily;
    RatePanel monthly;
    ReturnPanel returns;
    ReturnPanel standardized;
    std::vector<std::string> warnings;
};

/// Ingest stage: parse, clip, merge, resample, log-return, standardise.
PreparedData prepare_data(const PipelineConfig& config);

struct TdaParams {
    int window = 4;
    int delay = 1;
    std::optional<double> eps_max;
    WassersteinOptions wasserstein;
    std::vector<double> dim_weights{1.0, 1.0};
};

struct TdaFeatures {
    std::vector<std::string> labels;
    std::vector<PointCloud> clouds;
    std::vector<std::vector<PersistenceDiagram>> diagrams;  // [currency][degree]
    double eps_max = 0.0;
    DistanceMatrix wasserstein;
};

/// Embeds every column, computes H0/H1 diagrams and the Wasserstein matrix.
TdaFeatures compute_tda_features(const ReturnPanel& standardized, const TdaParams& params, std::size_t threads = 1);

struct PipelineResult {
    PreparedData data;
    TdaFeatures tda;
    MdsResult mds;
    ClusterAssignment statistical_kmeans;
    HierarchicalResult statistical_hierarchical;
    ClusterAssignment tda_kmeans;
    HierarchicalResult tda_hierarchical;
    EvaluationReport evaluation;
    std::optional<SensitivityReport> sensitivity;
    std::vector<std::string> notes;
    std::filesystem::path output_dir;
};

/// Full run. Output is staged next to output_dir and moved into place only on
/// success; a failed run leaves no partial tree behind.
PipelineResult run_pipeline(const PipelineConfig& config);

/// Computes every stage in memory without writing files.
PipelineResult analyse(const PipelineConfig& config);

SensitivityReport run_sensitivity(const PipelineConfig& config);
SensitivityReport run_sensitivity(const PipelineConfig& config, const ReturnPanel& standardized,
                                  const TdaFeatures& baseline);

/// Writes every CSV of a finished analysis below `dir`.
void write_report(const PipelineResult& result, const PipelineConfig& config, const std::filesystem::path& dir);

/// Renders the SVG figures from the CSVs of a report directory.
void render_plots(const std::filesystem::path& report_dir);

}  // namespace fxtda
