#include "fxtda/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fxtda/common.hpp"
#include "fxtda/csv.hpp"
#include "fxtda/stats.hpp"
#include "fxtda/svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace fxtda {

namespace {

// Re-throws library errors with the module, stage and subject prefixed.
template <class F>
auto in_stage(const std::string& module, const std::string& subject, F&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const Error& e) {
        throw Error(e.kind(), "[" + module + "] " + (subject.empty() ? "" : subject + ": ") + e.message());
    }
}

void write_file(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

template <class F>
void write_with(const fs::path& path, F&& fill) {
    std::ostringstream out;
    fill(out);
    write_file(path, out.str());
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "missing file " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

csv::Table read_table(const fs::path& path) {
    if (!fs::exists(path)) throw Error(ErrorKind::Io, "missing file " + path.string());
    return csv::read_file(path);
}

// Config JSON helpers ------------------------------------------------------

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw Error(ErrorKind::Config, where + " must be an object");
    for (const auto& [key, value] : j.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
            throw Error(ErrorKind::Config, "unknown key '" + key + "' in " + where);
        }
    }
}

template <class T>
T get(const json& j, const char* key, const std::string& where, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorKind::Config, where + "." + key + " has the wrong type");
    }
}

Date get_date(const json& j, const char* key, const std::string& where) {
    const auto text = get<std::string>(j, key, where, "");
    const auto d = parse_date(text);
    if (!d) throw Error(ErrorKind::Config, where + "." + key + " must be an ISO date, got '" + text + "'");
    return *d;
}

double get_exponent(const json& j, const char* key, const std::string& where, double fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (v.is_string() && (v.get<std::string>() == "inf" || v.get<std::string>() == "infinity")) {
        return std::numeric_limits<double>::infinity();
    }
    if (!v.is_number()) throw Error(ErrorKind::Config, where + "." + key + " must be a number or \"inf\"");
    return v.get<double>();
}

std::string describe(const SensitivityOverride& o) {
    if (!o.name.empty()) return o.name;
    std::ostringstream s;
    bool first = true;
    auto sep = [&] {
        if (!first) s << ", ";
        first = false;
    };
    if (o.window) sep(), s << "d = " << *o.window;
    if (o.delay) sep(), s << "tau = " << *o.delay;
    if (o.eps_max) sep(), s << "eps_max = " << format_double(*o.eps_max);
    if (o.eps_scale) sep(), s << "eps_max x " << format_double(*o.eps_scale);
    return first ? std::string("baseline") : s.str();
}

// Analysis helpers ---------------------------------------------------------

DistanceMatrix euclidean_rows(const Eigen::MatrixXd& rows, const std::vector<std::string>& labels) {
    const Eigen::Index n = rows.rows();
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) d(i, j) = d(j, i) = (rows.row(i) - rows.row(j)).norm();
    return make_distance_matrix(std::move(d), labels);
}

Eigen::MatrixXd stacked_landscapes(const TdaFeatures& tda, int layers, int grid_size) {
    const auto n = static_cast<Eigen::Index>(tda.labels.size());
    const Eigen::Index per = static_cast<Eigen::Index>(layers) * grid_size;
    Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(n, 2 * per);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int k = 0; k < 2; ++k) {
            const auto l = landscape(tda.diagrams[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)], layers,
                                     grid_size, tda.eps_max);
            for (int layer = 0; layer < layers; ++layer) {
                rows.block(i, k * per + static_cast<Eigen::Index>(layer) * grid_size, 1, grid_size) = l.layers.row(layer);
            }
        }
    }
    return rows;
}

struct ScoredSpace {
    std::string name;
    const DistanceMatrix* dist;
    const Eigen::MatrixXd* points;
};

EvaluationRow score(const std::string& model, const ClusterAssignment& a, const DistanceMatrix& sil_dist,
                    const std::string& sil_space, const Eigen::MatrixXd& ch_points, const std::string& ch_space,
                    std::string note) {
    EvaluationRow row;
    row.model = model;
    row.method = a.method;
    row.feature_space = a.feature_space;
    row.k = a.k;
    row.silhouette = in_stage("eval", model, [&] { return silhouette(sil_dist, a); });
    const auto ch = in_stage("eval", model, [&] { return calinski_harabasz(ch_points, a); });
    row.calinski_harabasz = ch.value;
    if (ch.degenerate) note += (note.empty() ? "" : "; ") + std::string("zero within-cluster scatter");
    row.silhouette_space = sil_space;
    row.ch_space = ch_space;
    row.note = std::move(note);
    return row;
}

}  // namespace

// Config ---------------------------------------------------------------------

std::vector<std::string> PipelineConfig::active_currencies() const {
    std::vector<std::string> out;
    for (const auto& c : currencies) {
        if (std::find(exclude.begin(), exclude.end(), c) == exclude.end()) out.push_back(c);
    }
    return out;
}

void PipelineConfig::validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorKind::Config, m); };
    const auto active = active_currencies();
    if (active.empty()) fail("currencies: at least one non-excluded currency is required");
    if (std::set<std::string>(currencies.begin(), currencies.end()).size() != currencies.size()) {
        fail("currencies: duplicate code");
    }
    if (start && end && *end < *start) fail("date_range: end precedes start");
    if (window < 1) fail("embed.d must be >= 1");
    if (delay < 1) fail("embed.tau must be >= 1");
    if (eps_max && !(*eps_max > 0.0)) fail("eps_max must be > 0 or \"auto\"");
    if (!(wasserstein.p >= 1.0) || std::isinf(wasserstein.p)) fail("wasserstein.p must be finite and >= 1");
    if (!(wasserstein.q >= 1.0)) fail("wasserstein.q must be >= 1");
    if (dim_weights.size() != 2 || dim_weights[0] < 0.0 || dim_weights[1] < 0.0) {
        fail("wasserstein.dim_weights must hold two nonnegative weights (H0, H1)");
    }
    if (k < 2) fail("k must be >= 2");
    if (static_cast<std::size_t>(k) > active.size()) fail("k exceeds the number of currencies");
    if (k_max_elbow < 1) fail("k_max_elbow must be >= 1");
    if (kmeans_restarts < 1 || kmeans_max_iterations < 1) fail("kmeans.restarts and kmeans.max_iterations must be >= 1");
    if (max_lag < 0) fail("max_lag must be >= 0");
    if (grid_size < 2) fail("grid_size must be >= 2");
    if (landscape_layers < 1) fail("landscape_layers must be >= 1");
    if (mds_dim < 1) fail("mds_dim must be >= 1");
    if (stl.period < 2) fail("stl.period must be >= 2");
    for (const auto& o : sensitivity_grid) {
        if (o.window && *o.window < 1) fail("sensitivity_grid: d must be >= 1");
        if (o.delay && *o.delay < 1) fail("sensitivity_grid: tau must be >= 1");
        if (o.eps_max && !(*o.eps_max > 0.0)) fail("sensitivity_grid: eps_max must be > 0");
        if (o.eps_scale && !(*o.eps_scale > 0.0)) fail("sensitivity_grid: eps_scale must be > 0");
        if (o.eps_max && o.eps_scale) fail("sensitivity_grid: give eps_max or eps_scale, not both");
    }
    if (threads < 1) fail("threads must be >= 1");
}

std::vector<SensitivityOverride> default_sensitivity_grid() {
    return {
        {"d = 3, tau = 1", 3, 1, std::nullopt, std::nullopt},
        {"d = 4, tau = 1", 4, 1, std::nullopt, std::nullopt},
        {"d = 5, tau = 1", 5, 1, std::nullopt, std::nullopt},
        {"d = 4, tau = 2", 4, 2, std::nullopt, std::nullopt},
        {"d = 6, tau = 1", 6, 1, std::nullopt, std::nullopt},
        {"eps_max increased by 25%", std::nullopt, std::nullopt, std::nullopt, 1.25},
        {"eps_max decreased by 25%", std::nullopt, std::nullopt, std::nullopt, 0.75},
    };
}

PipelineConfig parse_config(const std::string& json_text, const fs::path& base_dir) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::Config, std::string("invalid JSON: ") + e.what());
    }
    check_keys(root, "config",
               {"data", "currencies", "exclude", "date_range", "aggregation", "embed", "eps_max", "wasserstein", "k",
                "seed", "k_max_elbow", "kmeans", "max_lag", "grid_size", "landscape_layers", "mds_dim", "stl",
                "sensitivity_grid", "output_dir", "threads"});
    auto resolve = [&](const std::string& p) {
        fs::path path(p);
        return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
    };

    PipelineConfig c;
    if (!root.contains("data")) throw Error(ErrorKind::Config, "config.data is required");
    const json& data = root.at("data");
    check_keys(data, "data",
               {"dir", "layout", "file_pattern", "wide_file", "delimiter", "date_column", "rate_column", "date_format"});
    c.data.dir = resolve(get<std::string>(data, "dir", "data", "."));
    const auto layout = get<std::string>(data, "layout", "data", "per_currency");
    if (layout == "per_currency") c.data.layout = DataLayout::PerCurrency;
    else if (layout == "wide") c.data.layout = DataLayout::Wide;
    else throw Error(ErrorKind::Config, "data.layout must be \"per_currency\" or \"wide\"");
    c.data.file_pattern = get<std::string>(data, "file_pattern", "data", c.data.file_pattern);
    c.data.wide_file = get<std::string>(data, "wide_file", "data", c.data.wide_file);
    const auto delim = get<std::string>(data, "delimiter", "data", ",");
    if (delim.size() != 1) throw Error(ErrorKind::Config, "data.delimiter must be one character");
    c.data.parse.delimiter = delim[0];
    c.data.parse.date_column = get<std::string>(data, "date_column", "data", c.data.parse.date_column);
    c.data.parse.rate_column = get<std::string>(data, "rate_column", "data", c.data.parse.rate_column);
    c.data.parse.date_format = get<std::string>(data, "date_format", "data", c.data.parse.date_format);

    c.currencies = get<std::vector<std::string>>(root, "currencies", "config", {});
    c.exclude = get<std::vector<std::string>>(root, "exclude", "config", c.exclude);
    if (root.contains("date_range")) {
        const json& range = root.at("date_range");
        check_keys(range, "date_range", {"start", "end"});
        if (range.contains("start")) c.start = get_date(range, "start", "date_range");
        if (range.contains("end")) c.end = get_date(range, "end", "date_range");
    }
    const auto agg = get<std::string>(root, "aggregation", "config", "last");
    if (agg == "last") c.aggregation = MonthlyAggregation::Last;
    else if (agg == "mean") c.aggregation = MonthlyAggregation::Mean;
    else throw Error(ErrorKind::Config, "aggregation must be \"last\" or \"mean\"");

    if (root.contains("embed")) {
        const json& e = root.at("embed");
        check_keys(e, "embed", {"d", "tau"});
        c.window = get<int>(e, "d", "embed", c.window);
        c.delay = get<int>(e, "tau", "embed", c.delay);
    }
    if (root.contains("eps_max")) {
        const json& e = root.at("eps_max");
        if (e.is_string() && e.get<std::string>() == "auto") c.eps_max.reset();
        else if (e.is_number()) c.eps_max = e.get<double>();
        else throw Error(ErrorKind::Config, "eps_max must be a number or \"auto\"");
    }
    if (root.contains("wasserstein")) {
        const json& w = root.at("wasserstein");
        check_keys(w, "wasserstein", {"p", "q", "dim_weights"});
        c.wasserstein.p = get_exponent(w, "p", "wasserstein", c.wasserstein.p);
        c.wasserstein.q = get_exponent(w, "q", "wasserstein", c.wasserstein.q);
        c.dim_weights = get<std::vector<double>>(w, "dim_weights", "wasserstein", c.dim_weights);
    }
    c.k = get<int>(root, "k", "config", c.k);
    c.seed = get<std::uint64_t>(root, "seed", "config", c.seed);
    c.k_max_elbow = get<int>(root, "k_max_elbow", "config", c.k_max_elbow);
    if (root.contains("kmeans")) {
        const json& km = root.at("kmeans");
        check_keys(km, "kmeans", {"restarts", "max_iterations"});
        c.kmeans_restarts = get<int>(km, "restarts", "kmeans", c.kmeans_restarts);
        c.kmeans_max_iterations = get<int>(km, "max_iterations", "kmeans", c.kmeans_max_iterations);
    }
    c.max_lag = get<int>(root, "max_lag", "config", c.max_lag);
    c.grid_size = get<int>(root, "grid_size", "config", c.grid_size);
    c.landscape_layers = get<int>(root, "landscape_layers", "config", c.landscape_layers);
    c.mds_dim = get<int>(root, "mds_dim", "config", c.mds_dim);
    if (root.contains("stl")) {
        const json& s = root.at("stl");
        check_keys(s, "stl", {"period", "seasonal_span", "trend_span", "lowpass_span", "seasonal_degree", "trend_degree",
                              "lowpass_degree", "inner_loops", "outer_loops"});
        c.stl.period = get<int>(s, "period", "stl", c.stl.period);
        c.stl.seasonal_span = get<int>(s, "seasonal_span", "stl", c.stl.seasonal_span);
        if (s.contains("trend_span")) c.stl.trend_span = get<int>(s, "trend_span", "stl", 0);
        if (s.contains("lowpass_span")) c.stl.lowpass_span = get<int>(s, "lowpass_span", "stl", 0);
        c.stl.seasonal_degree = get<int>(s, "seasonal_degree", "stl", c.stl.seasonal_degree);
        c.stl.trend_degree = get<int>(s, "trend_degree", "stl", c.stl.trend_degree);
        c.stl.lowpass_degree = get<int>(s, "lowpass_degree", "stl", c.stl.lowpass_degree);
        c.stl.inner_loops = get<int>(s, "inner_loops", "stl", c.stl.inner_loops);
        c.stl.outer_loops = get<int>(s, "outer_loops", "stl", c.stl.outer_loops);
    }
    if (root.contains("sensitivity_grid")) {
        const json& g = root.at("sensitivity_grid");
        if (g.is_string() && g.get<std::string>() == "default") {
            c.sensitivity_grid = default_sensitivity_grid();
        } else if (g.is_array()) {
            for (const auto& entry : g) {
                check_keys(entry, "sensitivity_grid entry", {"name", "d", "tau", "eps_max", "eps_scale"});
                SensitivityOverride o;
                o.name = get<std::string>(entry, "name", "sensitivity_grid", "");
                if (entry.contains("d")) o.window = get<int>(entry, "d", "sensitivity_grid", 0);
                if (entry.contains("tau")) o.delay = get<int>(entry, "tau", "sensitivity_grid", 0);
                if (entry.contains("eps_max")) o.eps_max = get<double>(entry, "eps_max", "sensitivity_grid", 0.0);
                if (entry.contains("eps_scale")) o.eps_scale = get<double>(entry, "eps_scale", "sensitivity_grid", 0.0);
                o.name = describe(o);
                c.sensitivity_grid.push_back(std::move(o));
            }
        } else {
            throw Error(ErrorKind::Config, "sensitivity_grid must be an array or \"default\"");
        }
    }
    c.output_dir = resolve(get<std::string>(root, "output_dir", "config", "report"));
    c.threads = get<std::size_t>(root, "threads", "config", c.threads);
    c.validate();
    return c;
}

PipelineConfig load_config(const fs::path& path) {
    return parse_config(read_file(path), path.parent_path());
}

std::string config_to_json(const PipelineConfig& c) {
    auto exponent = [](double v) { return std::isinf(v) ? json("inf") : json(v); };
    json grid = json::array();
    for (const auto& o : c.sensitivity_grid) {
        json e{{"name", o.name}};
        if (o.window) e["d"] = *o.window;
        if (o.delay) e["tau"] = *o.delay;
        if (o.eps_max) e["eps_max"] = *o.eps_max;
        if (o.eps_scale) e["eps_scale"] = *o.eps_scale;
        grid.push_back(e);
    }
    json stl{{"period", c.stl.period},
             {"seasonal_span", c.stl.seasonal_span},
             {"seasonal_degree", c.stl.seasonal_degree},
             {"trend_degree", c.stl.trend_degree},
             {"lowpass_degree", c.stl.lowpass_degree},
             {"inner_loops", c.stl.inner_loops},
             {"outer_loops", c.stl.outer_loops}};
    if (c.stl.trend_span) stl["trend_span"] = *c.stl.trend_span;
    if (c.stl.lowpass_span) stl["lowpass_span"] = *c.stl.lowpass_span;
    json range = json::object();
    if (c.start) range["start"] = format_date(*c.start);
    if (c.end) range["end"] = format_date(*c.end);
    json j{
        {"data",
         {{"layout", c.data.layout == DataLayout::Wide ? "wide" : "per_currency"},
          {"file_pattern", c.data.file_pattern},
          {"wide_file", c.data.wide_file},
          {"delimiter", std::string(1, c.data.parse.delimiter)},
          {"date_column", c.data.parse.date_column},
          {"rate_column", c.data.parse.rate_column},
          {"date_format", c.data.parse.date_format}}},
        {"currencies", c.currencies},
        {"exclude", c.exclude},
        {"date_range", range},
        {"aggregation", c.aggregation == MonthlyAggregation::Last ? "last" : "mean"},
        {"embed", {{"d", c.window}, {"tau", c.delay}}},
        {"eps_max", c.eps_max ? json(*c.eps_max) : json("auto")},
        {"wasserstein", {{"p", exponent(c.wasserstein.p)}, {"q", exponent(c.wasserstein.q)}, {"dim_weights", c.dim_weights}}},
        {"k", c.k},
        {"seed", c.seed},
        {"k_max_elbow", c.k_max_elbow},
        {"kmeans", {{"restarts", c.kmeans_restarts}, {"max_iterations", c.kmeans_max_iterations}}},
        {"max_lag", c.max_lag},
        {"grid_size", c.grid_size},
        {"landscape_layers", c.landscape_layers},
        {"mds_dim", c.mds_dim},
        {"stl", stl},
        {"sensitivity_grid", grid},
    };
    return j.dump(2);
}

// Stages ---------------------------------------------------------------------

PreparedData prepare_data(const PipelineConfig& config) {
    config.validate();
    const auto codes = config.active_currencies();
    PreparedData out;
    std::vector<RatePanel> series;

    if (config.data.layout == DataLayout::Wide) {
        const fs::path path = config.data.dir / config.data.wide_file;
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error(ErrorKind::Io, "[ingest] cannot open " + path.string());
        auto parsed = in_stage("ingest", path.filename().string(), [&] { return parse_wide_rate_csv(in, codes, config.data.parse); });
        for (auto& p : parsed) {
            for (auto& w : p.warnings) out.warnings.push_back(p.panel.currencies.front() + ": " + w);
            series.push_back(std::move(p.panel));
        }
    } else {
        std::vector<ParsedSeries> parsed(codes.size());
        parallel_for(codes.size(), config.threads, [&](std::size_t i) {
            std::string name = config.data.file_pattern;
            const auto pos = name.find("{code}");
            if (pos != std::string::npos) name.replace(pos, 6, codes[i]);
            const fs::path path = config.data.dir / name;
            std::ifstream in(path, std::ios::binary);
            if (!in) throw Error(ErrorKind::Io, "[ingest] " + codes[i] + ": cannot open " + path.string());
            parsed[i] = in_stage("ingest", codes[i], [&] { return parse_rate_csv(in, codes[i], config.data.parse); });
        });
        for (auto& p : parsed) {
            for (auto& w : p.warnings) out.warnings.push_back(p.panel.currencies.front() + ": " + w);
            series.push_back(std::move(p.panel));
        }
    }

    for (auto& s : series) s = clip_dates(s, config.start, config.end);
    out.daily = in_stage("ingest", "merge", [&] { return merge_and_interpolate(series); });
    out.monthly = in_stage("ingest", "resample", [&] { return resample_monthly(out.daily, config.aggregation); });
    out.returns = in_stage("ingest", "log returns", [&] { return log_returns(out.monthly); });
    out.standardized = in_stage("ingest", "standardise", [&] { return standardize(out.returns); });
    return out;
}

TdaFeatures compute_tda_features(const ReturnPanel& standardized, const TdaParams& params, std::size_t threads) {
    TdaFeatures out;
    out.labels = standardized.currencies;
    const std::size_t n = out.labels.size();
    out.clouds.resize(n);
    std::vector<DistanceMatrix> distances(n);
    parallel_for(n, threads, [&](std::size_t i) {
        in_stage("tda_core", out.labels[i], [&] {
            out.clouds[i] = delay_embed(standardized.values.col(static_cast<Eigen::Index>(i)), params.window, params.delay,
                                        out.labels[i]);
            distances[i] = pairwise_distances(out.clouds[i]);
        });
    });

    if (params.eps_max) {
        out.eps_max = *params.eps_max;
    } else {
        out.eps_max = 0.0;
        for (const auto& d : distances) out.eps_max = std::max(out.eps_max, max_distance(d));
        if (!(out.eps_max > 0.0)) throw Error(ErrorKind::Parameter, "[tda_core] every point cloud is a single point");
    }

    out.diagrams.resize(n);
    parallel_for(n, threads, [&](std::size_t i) {
        out.diagrams[i] = in_stage("tda_core", out.labels[i], [&] { return rips_persistence(distances[i], 1, out.eps_max); });
    });

    DiagramDistanceOptions opts;
    opts.wasserstein = params.wasserstein;
    opts.dim_weights = params.dim_weights;
    opts.threads = threads;
    out.wasserstein = in_stage("tda_summaries", "wasserstein", [&] { return diagram_distance_matrix(out.labels, out.diagrams, opts); });
    return out;
}

PipelineResult analyse(const PipelineConfig& config) {
    config.validate();
    PipelineResult r;
    r.data = prepare_data(config);
    const auto& z = r.data.standardized;
    const auto& labels = z.currencies;
    const int n = static_cast<int>(labels.size());
    if (config.k > n) throw Error(ErrorKind::Config, "k exceeds the number of currencies");

    // Statistical branch: one standardised return vector per currency.
    const Eigen::MatrixXd stat_points = z.values.transpose();
    const DistanceMatrix stat_dist = euclidean_rows(stat_points, labels);
    KMeansOptions km;
    km.seed = config.seed;
    km.restarts = config.kmeans_restarts;
    km.max_iterations = config.kmeans_max_iterations;
    km.threads = config.threads;
    r.statistical_kmeans = in_stage("cluster", "statistical k-means",
                                    [&] { return kmeans(stat_points, labels, config.k, km, FeatureSpace::Statistical); });
    r.statistical_hierarchical = in_stage("cluster", "statistical hierarchical",
                                          [&] { return hierarchical_complete(stat_dist, config.k, FeatureSpace::Statistical); });

    // Topological branch from the same standardised panel.
    TdaParams tp{config.window, config.delay, config.eps_max, config.wasserstein, config.dim_weights};
    r.tda = compute_tda_features(z, tp, config.threads);

    int mds_dim = config.mds_dim;
    if (mds_dim >= n) {
        mds_dim = n - 1;
        r.notes.push_back("mds_dim reduced to " + std::to_string(mds_dim) + " (needs fewer dimensions than currencies)");
    }
    r.mds = in_stage("cluster", "MDS", [&] { return classical_mds(r.tda.wasserstein, mds_dim); });
    r.mds.embedding.source_label = "wasserstein";
    if (r.mds.captured() <= 0.90) {
        r.notes.push_back("MDS captured variance " + format_double(r.mds.captured()) + " is not above 0.90");
    }
    const Eigen::MatrixXd& mds_points = r.mds.embedding.points;
    const DistanceMatrix mds_dist = euclidean_rows(mds_points, labels);
    r.tda_kmeans = in_stage("cluster", "TDA k-means", [&] { return kmeans(mds_points, labels, config.k, km, FeatureSpace::Tda); });
    r.tda_hierarchical = in_stage("cluster", "TDA hierarchical",
                                  [&] { return hierarchical_complete(r.tda.wasserstein, config.k, FeatureSpace::Tda); });

    r.evaluation.rows.push_back(score("Statistical k-means", r.statistical_kmeans, stat_dist, "euclidean_returns",
                                      stat_points, "returns", ""));
    r.evaluation.rows.push_back(score("Statistical hierarchical", r.statistical_hierarchical.assignment, stat_dist,
                                      "euclidean_returns", stat_points, "returns", ""));
    r.evaluation.rows.push_back(score("TDA-based k-means", r.tda_kmeans, mds_dist, "mds_embedding", mds_points,
                                      "mds_embedding", ""));
    r.evaluation.rows.push_back(score("TDA-based hierarchical", r.tda_hierarchical.assignment, r.tda.wasserstein,
                                      "wasserstein", mds_points, "mds_embedding",
                                      "CH computed on the MDS embedding of the Wasserstein matrix"));

    if (!config.sensitivity_grid.empty()) r.sensitivity = run_sensitivity(config, z, r.tda);
    return r;
}

SensitivityReport run_sensitivity(const PipelineConfig& config) {
    const PreparedData data = prepare_data(config);
    TdaParams tp{config.window, config.delay, config.eps_max, config.wasserstein, config.dim_weights};
    const TdaFeatures baseline = compute_tda_features(data.standardized, tp, config.threads);
    return run_sensitivity(config, data.standardized, baseline);
}

SensitivityReport run_sensitivity(const PipelineConfig& config, const ReturnPanel& standardized,
                                  const TdaFeatures& baseline) {
    if (config.sensitivity_grid.empty()) throw Error(ErrorKind::Config, "sensitivity_grid is empty");
    const auto base_assign = hierarchical_complete(baseline.wasserstein, config.k, FeatureSpace::Tda).assignment;

    auto same_as_baseline = [&](const SensitivityOverride& o) {
        const int w = o.window.value_or(config.window);
        const int d = o.delay.value_or(config.delay);
        if (w != config.window || d != config.delay) return false;
        double eps = o.eps_max.value_or(baseline.eps_max);
        if (o.eps_scale) eps *= *o.eps_scale;
        return eps == baseline.eps_max;
    };

    auto evaluate = [&](const std::string& name, const DistanceMatrix& w) {
        SensitivityRow row;
        row.param_change = name;
        const auto assign = hierarchical_complete(w, config.k, FeatureSpace::Tda).assignment;
        row.mantel = mantel(baseline.wasserstein, w);
        row.ari = adjusted_rand(base_assign, assign);
        row.nmi = nmi(base_assign, assign).value;
        return row;
    };

    SensitivityReport report;
    std::vector<const SensitivityOverride*> rest;
    const SensitivityOverride* base_entry = nullptr;
    for (const auto& o : config.sensitivity_grid) {
        if (!base_entry && same_as_baseline(o)) base_entry = &o;
        else rest.push_back(&o);
    }
    report.baseline = base_entry ? base_entry->name + " (baseline)"
                                 : "d = " + std::to_string(config.window) + ", tau = " + std::to_string(config.delay) +
                                       " (baseline)";
    try {
        report.rows.push_back(evaluate(report.baseline, baseline.wasserstein));
    } catch (const Error& e) {
        report.rows.push_back({report.baseline, 0, 0, 0, e.what()});
    }

    for (const auto* o : rest) {
        try {
            TdaParams tp{o->window.value_or(config.window), o->delay.value_or(config.delay), config.eps_max,
                         config.wasserstein, config.dim_weights};
            if (o->eps_max) tp.eps_max = *o->eps_max;
            if (o->eps_scale) {
                if (tp.window == config.window && tp.delay == config.delay) {
                    tp.eps_max = baseline.eps_max * *o->eps_scale;
                } else {
                    // Resolve the row's own ceiling first, then scale it.
                    TdaParams probe = tp;
                    const double own = tp.eps_max ? *tp.eps_max : [&] {
                        double m = 0.0;
                        for (Eigen::Index c = 0; c < standardized.values.cols(); ++c) {
                            const auto cloud = delay_embed(standardized.values.col(c), probe.window, probe.delay,
                                                           standardized.currencies[static_cast<std::size_t>(c)]);
                            m = std::max(m, max_distance(pairwise_distances(cloud)));
                        }
                        return m;
                    }();
                    tp.eps_max = own * *o->eps_scale;
                }
            }
            const TdaFeatures features = compute_tda_features(standardized, tp, config.threads);
            report.rows.push_back(evaluate(o->name, features.wasserstein));
        } catch (const Error& e) {
            report.rows.push_back({o->name, 0, 0, 0, e.what()});
        }
    }
    return report;
}

// Output ---------------------------------------------------------------------

void write_report(const PipelineResult& r, const PipelineConfig& config, const fs::path& dir) {
    const auto& labels = r.data.standardized.currencies;

    // panels/
    write_with(dir / "panels" / "rates_daily.csv", [&](std::ostream& o) { write_panel_csv(o, r.data.daily); });
    write_with(dir / "panels" / "rates_monthly.csv", [&](std::ostream& o) { write_panel_csv(o, r.data.monthly); });
    write_with(dir / "panels" / "log_returns.csv", [&](std::ostream& o) { write_panel_csv(o, r.data.returns); });
    write_with(dir / "panels" / "returns_standardized.csv", [&](std::ostream& o) { write_panel_csv(o, r.data.standardized); });
    write_with(dir / "panels" / "ingest_warnings.txt", [&](std::ostream& o) {
        for (const auto& w : r.data.warnings) o << w << '\n';
    });

    // stats/
    const auto cov = in_stage("stats", "covariance", [&] { return covariance_matrix(r.data.standardized); });
    const auto pear = in_stage("stats", "pearson", [&] { return pearson_matrix(r.data.standardized); });
    const auto spear = in_stage("stats", "spearman", [&] { return spearman_matrix(r.data.standardized); });
    const auto cross = in_stage("stats", "cross-correlation", [&] { return cross_correlation_matrix(r.data.standardized, config.max_lag); });
    for (const auto& [name, m] : std::vector<std::pair<std::string, const SymmetricMatrix*>>{
             {"covariance", &cov}, {"pearson", &pear}, {"spearman", &spear}, {"cross_correlation", &cross}}) {
        write_with(dir / "stats" / (name + ".csv"), [&](std::ostream& o) { write_matrix_csv(o, *m); });
        write_file(dir / "stats" / (name + ".json"), matrix_to_json(*m) + "\n");
    }
    const Eigen::VectorXd var = variance_summary(r.data.returns);
    write_with(dir / "stats" / "variance.csv", [&](std::ostream& o) {
        csv::write_row(o, {"currency", "variance"});
        for (std::size_t i = 0; i < labels.size(); ++i) {
            csv::write_row(o, {labels[i], format_double(var(static_cast<Eigen::Index>(i)))});
        }
    });
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const Eigen::VectorXd level = r.data.monthly.values.col(static_cast<Eigen::Index>(i));
        if (level.size() < 2 * config.stl.period) break;
        const auto stl = in_stage("stats", labels[i] + " STL", [&] { return stl_decompose(level, config.stl); });
        write_with(dir / "stats" / "stl" / (labels[i] + ".csv"), [&](std::ostream& o) { write_stl_csv(o, stl); });
    }

    // tda/
    {
        std::ostringstream manifest;
        csv::write_row(manifest, {"currency", "diagram", "h0_pairs", "h0_essential", "h1_pairs", "h1_essential"});
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const auto& dg = r.tda.diagrams[i];
            write_with(dir / "tda" / "diagrams" / (labels[i] + ".csv"), [&](std::ostream& o) { write_diagram_csv(o, dg); });
            csv::write_row(manifest, {labels[i], "diagrams/" + labels[i] + ".csv", std::to_string(dg[0].pairs.size()),
                                      std::to_string(dg[0].essential()), std::to_string(dg[1].pairs.size()),
                                      std::to_string(dg[1].essential())});
            for (int k = 0; k < 2; ++k) {
                const auto& d = dg[static_cast<std::size_t>(k)];
                const std::string stem = labels[i] + "_H" + std::to_string(k) + ".csv";
                const auto land = landscape(d, config.landscape_layers, config.grid_size, r.tda.eps_max);
                write_with(dir / "tda" / "landscapes" / stem, [&](std::ostream& o) { write_landscape_csv(o, land); });
                const auto betti = betti_curve(d, config.grid_size, r.tda.eps_max);
                write_with(dir / "tda" / "betti" / stem, [&](std::ostream& o) { write_betti_csv(o, betti); });
            }
        }
        write_file(dir / "tda" / "manifest.csv", manifest.str());
    }
    write_with(dir / "tda" / "wasserstein.csv", [&](std::ostream& o) { write_matrix_csv(o, labels, r.tda.wasserstein.values); });
    write_with(dir / "tda" / "parameters.csv", [&](std::ostream& o) {
        csv::write_row(o, {"parameter", "value"});
        csv::write_row(o, {"d", std::to_string(config.window)});
        csv::write_row(o, {"tau", std::to_string(config.delay)});
        csv::write_row(o, {"eps_max", format_double(r.tda.eps_max)});
        csv::write_row(o, {"p", format_double(config.wasserstein.p)});
        csv::write_row(o, {"q", format_double(config.wasserstein.q)});
    });
    {
        const Eigen::MatrixXd stacked = stacked_landscapes(r.tda, config.landscape_layers, config.grid_size);
        const auto pca = in_stage("tda_core", "PCA", [&] { return pca_project(stacked, 2); });
        write_with(dir / "tda" / "pca.csv", [&](std::ostream& o) {
            csv::write_row(o, {"item", "pc1", "pc2"});
            for (std::size_t i = 0; i < labels.size(); ++i) {
                csv::write_row(o, {labels[i], format_double(pca.coordinates(static_cast<Eigen::Index>(i), 0)),
                                   format_double(pca.coordinates(static_cast<Eigen::Index>(i), 1))});
            }
        });
        write_with(dir / "tda" / "pca_explained.csv", [&](std::ostream& o) {
            csv::write_row(o, {"component", "explained_ratio"});
            for (Eigen::Index c = 0; c < pca.explained_ratio.size(); ++c) {
                csv::write_row(o, {std::to_string(c + 1), format_double(pca.explained_ratio(c))});
            }
        });
    }
    write_with(dir / "tda" / "mds_embedding.csv", [&](std::ostream& o) {
        std::vector<std::string> header{"item"};
        for (Eigen::Index c = 0; c < r.mds.embedding.points.cols(); ++c) header.push_back("dim" + std::to_string(c + 1));
        csv::write_row(o, header);
        for (std::size_t i = 0; i < labels.size(); ++i) {
            std::vector<std::string> row{labels[i]};
            for (Eigen::Index c = 0; c < r.mds.embedding.points.cols(); ++c) {
                row.push_back(format_double(r.mds.embedding.points(static_cast<Eigen::Index>(i), c)));
            }
            csv::write_row(o, row);
        }
    });
    write_with(dir / "tda" / "mds_summary.csv", [&](std::ostream& o) {
        csv::write_row(o, {"dimension", "eigenvalue", "explained_fraction"});
        for (Eigen::Index c = 0; c < r.mds.explained_fraction.size(); ++c) {
            csv::write_row(o, {std::to_string(c + 1), format_double(r.mds.eigenvalues(c)),
                               format_double(r.mds.explained_fraction(c))});
        }
        csv::write_row(o, {"captured", "", format_double(r.mds.captured())});
    });

    // clusters/
    const Eigen::MatrixXd stat_points = r.data.standardized.values.transpose();
    KMeansOptions km;
    km.seed = config.seed;
    km.restarts = config.kmeans_restarts;
    km.max_iterations = config.kmeans_max_iterations;
    km.threads = config.threads;
    const int k_max = std::min(config.k_max_elbow, static_cast<int>(labels.size()));
    const auto elbow = in_stage("cluster", "elbow", [&] { return elbow_curve(stat_points, k_max, km); });
    write_with(dir / "clusters" / "elbow.csv", [&](std::ostream& o) {
        csv::write_row(o, {"k", "wcss"});
        for (const auto& [k, w] : elbow) csv::write_row(o, {std::to_string(k), format_double(w)});
    });
    write_with(dir / "clusters" / "statistical_kmeans.csv", [&](std::ostream& o) { write_assignment_csv(o, r.statistical_kmeans); });
    write_with(dir / "clusters" / "statistical_hierarchical.csv",
               [&](std::ostream& o) { write_assignment_csv(o, r.statistical_hierarchical.assignment); });
    write_with(dir / "clusters" / "tda_kmeans.csv", [&](std::ostream& o) { write_assignment_csv(o, r.tda_kmeans); });
    write_with(dir / "clusters" / "tda_hierarchical.csv",
               [&](std::ostream& o) { write_assignment_csv(o, r.tda_hierarchical.assignment); });
    write_with(dir / "clusters" / "statistical_dendrogram.csv",
               [&](std::ostream& o) { write_dendrogram_csv(o, r.statistical_hierarchical.dendrogram, labels); });
    write_with(dir / "clusters" / "tda_dendrogram.csv",
               [&](std::ostream& o) { write_dendrogram_csv(o, r.tda_hierarchical.dendrogram, labels); });

    // eval/
    write_with(dir / "eval" / "evaluation_report.csv", [&](std::ostream& o) { write_evaluation_csv(o, r.evaluation); });
    write_file(dir / "eval" / "evaluation_report.json", evaluation_to_json(r.evaluation) + "\n");
    write_with(dir / "eval" / "notes.txt", [&](std::ostream& o) {
        for (const auto& n : r.notes) o << n << '\n';
    });
    if (r.sensitivity) {
        write_with(dir / "sensitivity" / "sensitivity_report.csv",
                   [&](std::ostream& o) { write_sensitivity_csv(o, *r.sensitivity); });
    }
    write_file(dir / "resolved_config.json", config_to_json(config) + "\n");
}

PipelineResult run_pipeline(const PipelineConfig& config) {
    config.validate();
    const fs::path target = config.output_dir;
    fs::path staging = target;
    staging += ".partial";
    std::error_code ec;
    fs::remove_all(staging, ec);
    try {
        PipelineResult result = analyse(config);
        fs::create_directories(staging);
        write_report(result, config, staging);
        in_stage("cli", "plots", [&] { render_plots(staging); });
        fs::remove_all(target, ec);
        if (target.has_parent_path()) fs::create_directories(target.parent_path());
        fs::rename(staging, target);
        result.output_dir = target;
        return result;
    } catch (...) {
        fs::remove_all(staging, ec);
        throw;
    }
}

// Plots ----------------------------------------------------------------------

void render_plots(const fs::path& dir) {
    auto column = [](const csv::Table& t, std::size_t c, const fs::path& path) {
        std::vector<double> v;
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            const auto x = c < t.rows[r].size() ? csv::parse_double(t.rows[r][c]) : std::nullopt;
            if (!x) throw Error(ErrorKind::Parse, path.string() + " line " + std::to_string(t.line_numbers[r]) + ": bad number");
            v.push_back(*x);
        }
        return v;
    };
    auto sorted_csvs = [](const fs::path& sub) {
        std::vector<fs::path> files;
        if (fs::is_directory(sub)) {
            for (const auto& e : fs::directory_iterator(sub)) {
                if (e.path().extension() == ".csv") files.push_back(e.path());
            }
        }
        std::sort(files.begin(), files.end());
        return files;
    };
    auto open = [](const fs::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error(ErrorKind::Io, "missing file " + path.string());
        return in;
    };

    for (const char* name : {"covariance", "pearson", "spearman", "cross_correlation"}) {
        const fs::path path = dir / "stats" / (std::string(name) + ".csv");
        auto in = open(path);
        const auto m = read_matrix_csv(in);
        write_file(dir / "stats" / (std::string(name) + "_heatmap.svg"), svg::heatmap(m.labels, m.values, name));
    }
    {
        const fs::path path = dir / "stats" / "variance.csv";
        const auto t = read_table(path);
        std::vector<std::string> names;
        for (const auto& row : t.rows) names.push_back(row.at(0));
        write_file(dir / "stats" / "variance.svg", svg::bar_chart(names, column(t, 1, path), "Variance of log-returns", "variance"));
    }
    for (const auto& path : sorted_csvs(dir / "stats" / "stl")) {
        const auto t = read_table(path);
        std::vector<double> x(t.rows.size());
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i);
        std::vector<svg::Series> s{{"trend", x, column(t, 0, path)}, {"seasonal", x, column(t, 1, path)},
                                   {"residual", x, column(t, 2, path)}};
        write_file(path.parent_path() / (path.stem().string() + ".svg"),
                   svg::line_plot(s, "STL decomposition: " + path.stem().string(), "month", "rate"));
    }

    for (const auto& path : sorted_csvs(dir / "tda" / "diagrams")) {
        auto in = open(path);
        const auto diagrams = read_diagram_csv(in);
        const std::string code = path.stem().string();
        write_file(path.parent_path() / (code + ".svg"), svg::persistence_diagram(diagrams, "Persistence diagram: " + code));
        write_file(dir / "tda" / "barcodes" / (code + ".svg"), svg::barcode(diagrams, "Barcode: " + code));
    }
    for (const auto& path : sorted_csvs(dir / "tda" / "landscapes")) {
        const auto t = read_table(path);
        const auto grid = column(t, 0, path);
        std::vector<svg::Series> s;
        for (std::size_t c = 1; c < t.header.size(); ++c) s.push_back({t.header[c], grid, column(t, c, path)});
        write_file(path.parent_path() / (path.stem().string() + ".svg"),
                   svg::line_plot(s, "Persistence landscape: " + path.stem().string(), "epsilon", "lambda"));
    }
    for (const auto& path : sorted_csvs(dir / "tda" / "betti")) {
        const auto t = read_table(path);
        std::vector<svg::Series> s{{"betti", column(t, 0, path), column(t, 1, path)}};
        write_file(path.parent_path() / (path.stem().string() + ".svg"),
                   svg::line_plot(s, "Betti curve: " + path.stem().string(), "epsilon", "count"));
    }
    {
        auto in = open(dir / "tda" / "wasserstein.csv");
        const auto m = read_matrix_csv(in);
        write_file(dir / "tda" / "wasserstein_heatmap.svg", svg::heatmap(m.labels, m.values, "Wasserstein distances"));
    }
    {
        const fs::path path = dir / "tda" / "pca.csv";
        const auto t = read_table(path);
        const auto x = column(t, 1, path), y = column(t, 2, path);
        std::vector<svg::LabelledPoint> pts;
        for (std::size_t i = 0; i < t.rows.size(); ++i) pts.push_back({t.rows[i][0], x[i], y[i]});
        write_file(dir / "tda" / "pca_scatter.svg", svg::scatter(pts, "PCA of stacked landscapes", "PC1", "PC2"));
    }
    {
        const fs::path path = dir / "clusters" / "elbow.csv";
        const auto t = read_table(path);
        write_file(dir / "clusters" / "elbow.svg",
                   svg::line_plot({{"WCSS", column(t, 0, path), column(t, 1, path)}}, "Elbow curve", "k", "WCSS"));
    }
    for (const char* name : {"statistical", "tda"}) {
        const fs::path path = dir / "clusters" / (std::string(name) + "_dendrogram.csv");
        auto in = open(path);
        std::vector<std::string> leaf_labels;
        const auto d = read_dendrogram_csv(in, &leaf_labels);
        write_file(dir / "clusters" / (std::string(name) + "_dendrogram.svg"),
                   svg::dendrogram(d, leaf_labels, std::string("Complete linkage (") + name + ")"));
    }
}

}  // namespace fxtda
