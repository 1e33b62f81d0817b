#include "fxtda/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "fxtda/common.hpp"
#include "fxtda/csv.hpp"

namespace fxtda {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

std::string line_tag(std::size_t line) { return "line " + std::to_string(line); }

struct Observation {
    Date date;
    double value;
    std::size_t line;
};

RatePanel single_column(const std::string& code, std::vector<Observation> obs,
                        std::vector<std::string>& warnings) {
    std::stable_sort(obs.begin(), obs.end(),
                     [](const Observation& a, const Observation& b) { return a.date < b.date; });
    std::vector<Observation> unique;
    unique.reserve(obs.size());
    for (const auto& o : obs) {
        if (!unique.empty() && unique.back().date == o.date) {
            warnings.push_back(line_tag(o.line) + ": duplicate date " + format_date(o.date) +
                               " for " + code + ", keeping the later row");
            unique.back() = o;
        } else {
            unique.push_back(o);
        }
    }
    RatePanel panel;
    panel.currencies = {code};
    panel.dates.reserve(unique.size());
    panel.values.resize(static_cast<Eigen::Index>(unique.size()), 1);
    for (std::size_t i = 0; i < unique.size(); ++i) {
        panel.dates.push_back(unique[i].date);
        panel.values(static_cast<Eigen::Index>(i), 0) = unique[i].value;
    }
    return panel;
}

double read_rate(const std::string& text, const std::string& code, std::size_t line,
                 std::vector<std::string>& warnings, std::size_t& missing) {
    const auto parsed = csv::parse_double(text);
    if (parsed && std::isfinite(*parsed) && *parsed > 0.0) return *parsed;
    warnings.push_back(line_tag(line) + ": " + code + " rate '" + text +
                       "' is not a positive number, recorded as missing");
    ++missing;
    return kMissing;
}

}  // namespace

Date make_date(int year, unsigned month, unsigned day) {
    return Date{std::chrono::year{year} / std::chrono::month{month} / std::chrono::day{day}};
}

std::optional<Date> parse_date(std::string_view text, const std::string& format) {
    std::tm tm{};
    std::istringstream in{std::string(text)};
    in >> std::get_time(&tm, format.c_str());
    if (in.fail()) return std::nullopt;
    in >> std::ws;
    if (!in.eof()) return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year{tm.tm_year + 1900},
                                          std::chrono::month{static_cast<unsigned>(tm.tm_mon + 1)},
                                          std::chrono::day{static_cast<unsigned>(tm.tm_mday)}};
    if (!ymd.ok()) return std::nullopt;
    return Date{ymd};
}

std::string format_date(Date date) {
    const std::chrono::year_month_day ymd{date};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

bool RatePanel::is_clean() const {
    if (values.rows() != static_cast<Eigen::Index>(dates.size()) ||
        values.cols() != static_cast<Eigen::Index>(currencies.size())) {
        return false;
    }
    for (std::size_t i = 1; i < dates.size(); ++i) {
        if (!(dates[i - 1] < dates[i])) return false;
    }
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        const double v = values.data()[i];
        if (!std::isfinite(v) || v <= 0.0) return false;
    }
    return true;
}

Eigen::VectorXd ReturnPanel::column(std::string_view code) const {
    for (std::size_t j = 0; j < currencies.size(); ++j) {
        if (currencies[j] == code) return values.col(static_cast<Eigen::Index>(j));
    }
    throw Error(ErrorKind::Parameter, "unknown currency " + std::string(code));
}

ParsedSeries parse_rate_csv(std::istream& source, const std::string& currency_code,
                            const ParseOptions& options) {
    const csv::Table table = csv::read(source, options.delimiter);
    const auto date_col = table.column(options.date_column);
    const auto rate_col = table.column(options.rate_column);
    if (!date_col || !rate_col) {
        throw Error(ErrorKind::Parse, "line 1: header must contain columns '" + options.date_column +
                                          "' and '" + options.rate_column + "'");
    }
    if (table.rows.empty()) throw Error(ErrorKind::EmptyInput, currency_code + ": no data rows");

    ParsedSeries result;
    std::vector<Observation> obs;
    obs.reserve(table.rows.size());
    const std::size_t needed = std::max(*date_col, *rate_col) + 1;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::size_t line = table.line_numbers[r];
        if (row.size() < needed) {
            throw Error(ErrorKind::Parse, line_tag(line) + ": expected at least " +
                                              std::to_string(needed) + " fields");
        }
        const auto date = parse_date(row[*date_col], options.date_format);
        if (!date) {
            throw Error(ErrorKind::Parse, line_tag(line) + ": unparseable date '" + row[*date_col] + "'");
        }
        obs.push_back({*date, read_rate(row[*rate_col], currency_code, line, result.warnings,
                                        result.missing),
                       line});
    }
    result.panel = single_column(currency_code, std::move(obs), result.warnings);
    return result;
}

std::vector<ParsedSeries> parse_wide_rate_csv(std::istream& source, std::span<const std::string> codes,
                                              const ParseOptions& options) {
    const csv::Table table = csv::read(source, options.delimiter);
    const auto date_col = table.column(options.date_column);
    if (!date_col) {
        throw Error(ErrorKind::Parse, "line 1: header must contain column '" + options.date_column + "'");
    }
    if (table.rows.empty()) throw Error(ErrorKind::EmptyInput, "no data rows");

    std::vector<std::size_t> cols;
    for (const auto& code : codes) {
        const auto c = table.column(code);
        if (!c) throw Error(ErrorKind::Parse, "line 1: no column for currency " + code);
        cols.push_back(*c);
    }

    std::vector<ParsedSeries> out(codes.size());
    std::vector<std::vector<Observation>> obs(codes.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        const std::size_t line = table.line_numbers[r];
        if (row.size() <= *date_col) {
            throw Error(ErrorKind::Parse, line_tag(line) + ": missing date field");
        }
        const auto date = parse_date(row[*date_col], options.date_format);
        if (!date) {
            throw Error(ErrorKind::Parse, line_tag(line) + ": unparseable date '" + row[*date_col] + "'");
        }
        for (std::size_t k = 0; k < codes.size(); ++k) {
            const std::string text = cols[k] < row.size() ? row[cols[k]] : std::string{};
            obs[k].push_back({*date, read_rate(text, codes[k], line, out[k].warnings, out[k].missing),
                              line});
        }
    }
    for (std::size_t k = 0; k < codes.size(); ++k) {
        out[k].panel = single_column(codes[k], std::move(obs[k]), out[k].warnings);
    }
    return out;
}

RatePanel clip_dates(const RatePanel& panel, std::optional<Date> start, std::optional<Date> end) {
    std::vector<Eigen::Index> keep;
    for (std::size_t i = 0; i < panel.dates.size(); ++i) {
        if (start && panel.dates[i] < *start) continue;
        if (end && *end < panel.dates[i]) continue;
        keep.push_back(static_cast<Eigen::Index>(i));
    }
    RatePanel out;
    out.currencies = panel.currencies;
    out.values.resize(static_cast<Eigen::Index>(keep.size()), panel.values.cols());
    for (std::size_t r = 0; r < keep.size(); ++r) {
        out.dates.push_back(panel.dates[static_cast<std::size_t>(keep[r])]);
        out.values.row(static_cast<Eigen::Index>(r)) = panel.values.row(keep[r]);
    }
    return out;
}

RatePanel merge_and_interpolate(std::span<const RatePanel> panels) {
    if (panels.empty()) throw Error(ErrorKind::EmptyInput, "no panels to merge");

    struct Column {
        std::string code;
        std::vector<Date> dates;  // valid observations only
        std::vector<double> values;
    };
    std::vector<Column> columns;
    for (const auto& p : panels) {
        for (std::size_t c = 0; c < p.cols(); ++c) {
            Column col{p.currencies[c], {}, {}};
            for (std::size_t r = 0; r < p.rows(); ++r) {
                const double v = p.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
                if (std::isfinite(v) && v > 0.0) {
                    col.dates.push_back(p.dates[r]);
                    col.values.push_back(v);
                }
            }
            if (col.dates.empty()) {
                throw Error(ErrorKind::EmptyInput, col.code + ": no valid observations");
            }
            columns.push_back(std::move(col));
        }
    }

    Date start = columns.front().dates.front();
    Date end = columns.front().dates.back();
    for (const auto& col : columns) {
        start = std::max(start, col.dates.front());
        end = std::min(end, col.dates.back());
    }
    if (end < start) {
        throw Error(ErrorKind::DisjointRange,
                    "series share no common date range (latest start " + format_date(start) +
                        ", earliest end " + format_date(end) + ")");
    }

    std::vector<Date> axis;
    for (const auto& col : columns) {
        for (const auto d : col.dates) {
            if (!(d < start) && !(end < d)) axis.push_back(d);
        }
    }
    std::sort(axis.begin(), axis.end());
    axis.erase(std::unique(axis.begin(), axis.end()), axis.end());

    RatePanel out;
    out.dates = axis;
    out.values.resize(static_cast<Eigen::Index>(axis.size()), static_cast<Eigen::Index>(columns.size()));
    for (std::size_t c = 0; c < columns.size(); ++c) {
        const auto& col = columns[c];
        out.currencies.push_back(col.code);
        for (std::size_t r = 0; r < axis.size(); ++r) {
            const auto it = std::lower_bound(col.dates.begin(), col.dates.end(), axis[r]);
            const auto hi = static_cast<std::size_t>(it - col.dates.begin());
            double v;
            if (it != col.dates.end() && *it == axis[r]) {
                v = col.values[hi];
            } else {
                // start/end lie inside every column's coverage, so both neighbours exist.
                const std::size_t lo = hi - 1;
                const double t0 = static_cast<double>(col.dates[lo].time_since_epoch().count());
                const double t1 = static_cast<double>(col.dates[hi].time_since_epoch().count());
                const double t = static_cast<double>(axis[r].time_since_epoch().count());
                const double w = (t - t0) / (t1 - t0);
                v = col.values[lo] + w * (col.values[hi] - col.values[lo]);
            }
            out.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
        }
    }
    return out;
}

RatePanel resample_monthly(const RatePanel& panel, MonthlyAggregation rule) {
    using namespace std::chrono;
    std::vector<std::pair<year_month, std::vector<Eigen::Index>>> months;
    for (std::size_t r = 0; r < panel.rows(); ++r) {
        const year_month_day ymd{panel.dates[r]};
        const year_month ym{ymd.year(), ymd.month()};
        if (months.empty() || months.back().first != ym) months.push_back({ym, {}});
        months.back().second.push_back(static_cast<Eigen::Index>(r));
    }
    if (months.size() < 2) {
        throw Error(ErrorKind::InsufficientData, "monthly resampling needs at least 2 calendar months");
    }

    RatePanel out;
    out.currencies = panel.currencies;
    out.values.resize(static_cast<Eigen::Index>(months.size()), panel.values.cols());
    for (std::size_t m = 0; m < months.size(); ++m) {
        const auto& [ym, rows] = months[m];
        out.dates.push_back(Date{ym / last});
        const auto row = static_cast<Eigen::Index>(m);
        if (rule == MonthlyAggregation::Last) {
            out.values.row(row) = panel.values.row(rows.back());
        } else {
            Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(panel.values.cols());
            for (const auto r : rows) sum += panel.values.row(r);
            out.values.row(row) = sum / static_cast<double>(rows.size());
        }
    }
    return out;
}

ReturnPanel log_returns(const RatePanel& panel) {
    if (panel.rows() < 2) throw Error(ErrorKind::InsufficientData, "log returns need at least 2 rows");
    for (Eigen::Index i = 0; i < panel.values.size(); ++i) {
        const double v = panel.values.data()[i];
        if (!(v > 0.0) || !std::isfinite(v)) {
            const auto col = static_cast<std::size_t>(i / panel.values.rows());
            throw Error(ErrorKind::Domain, panel.currencies[col] + ": non-positive or non-finite rate");
        }
    }
    ReturnPanel out;
    out.currencies = panel.currencies;
    out.dates.assign(panel.dates.begin() + 1, panel.dates.end());
    const Eigen::Index n = panel.values.rows() - 1;
    out.values = panel.values.bottomRows(n).array().log() - panel.values.topRows(n).array().log();
    out.standardized = false;
    return out;
}

ReturnPanel standardize(const ReturnPanel& panel) {
    if (panel.rows() < 2) throw Error(ErrorKind::InsufficientData, "standardisation needs at least 2 rows");
    ReturnPanel out = panel;
    const double n = static_cast<double>(panel.rows());
    for (Eigen::Index j = 0; j < panel.values.cols(); ++j) {
        const auto col = panel.values.col(j);
        const double mean = col.mean();
        const double var = (col.array() - mean).square().sum() / (n - 1.0);
        const double sd = std::sqrt(var);
        if (!(sd > 0.0) || !std::isfinite(sd)) {
            throw Error(ErrorKind::DegenerateColumn,
                        panel.currencies[static_cast<std::size_t>(j)] + " has zero variance");
        }
        out.values.col(j) = (col.array() - mean) / sd;
    }
    out.standardized = true;
    return out;
}

void write_panel_csv(std::ostream& out, std::span<const Date> dates,
                     std::span<const std::string> currencies, const Eigen::MatrixXd& values) {
    std::vector<std::string> fields{"date"};
    fields.insert(fields.end(), currencies.begin(), currencies.end());
    csv::write_row(out, fields);
    for (std::size_t r = 0; r < dates.size(); ++r) {
        fields.assign(1, format_date(dates[r]));
        for (Eigen::Index c = 0; c < values.cols(); ++c) {
            fields.push_back(format_double(values(static_cast<Eigen::Index>(r), c)));
        }
        csv::write_row(out, fields);
    }
}

void write_panel_csv(std::ostream& out, const RatePanel& panel) {
    write_panel_csv(out, panel.dates, panel.currencies, panel.values);
}

void write_panel_csv(std::ostream& out, const ReturnPanel& panel) {
    write_panel_csv(out, panel.dates, panel.currencies, panel.values);
}

RatePanel read_panel_csv(std::istream& in) {
    const csv::Table table = csv::read(in);
    if (table.header.empty() || table.header.front() != "date") {
        throw Error(ErrorKind::Parse, "line 1: expected header 'date,<code>,...'");
    }
    RatePanel panel;
    panel.currencies.assign(table.header.begin() + 1, table.header.end());
    panel.values.resize(static_cast<Eigen::Index>(table.rows.size()),
                        static_cast<Eigen::Index>(panel.currencies.size()));
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row.size() != table.header.size()) {
            throw Error(ErrorKind::Parse, line_tag(table.line_numbers[r]) + ": wrong field count");
        }
        const auto date = parse_date(row[0]);
        if (!date) throw Error(ErrorKind::Parse, line_tag(table.line_numbers[r]) + ": bad date");
        panel.dates.push_back(*date);
        for (std::size_t c = 1; c < row.size(); ++c) {
            const auto v = csv::parse_double(row[c]);
            if (!v) throw Error(ErrorKind::Parse, line_tag(table.line_numbers[r]) + ": bad number");
            panel.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c - 1)) = *v;
        }
    }
    return panel;
}

}  // namespace fxtda
