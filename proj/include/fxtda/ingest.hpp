#pragma once

#include <chrono>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace fxtda {

using Date = std::chrono::sys_days;

Date make_date(int year, unsigned month, unsigned day);
std::optional<Date> parse_date(std::string_view text, const std::string& format = "%Y-%m-%d");
std::string format_date(Date date);

/// Dated matrix of reference rates, one column per currency (units: currency per EUR).
/// Single-currency panels straight out of the parser may hold NaN for missing
/// entries; every panel produced by merge/resample is clean.
struct RatePanel {
    std::vector<Date> dates;
    std::vector<std::string> currencies;
    Eigen::MatrixXd values;  // dates x currencies

    std::size_t rows() const { return dates.size(); }
    std::size_t cols() const { return currencies.size(); }
    /// Strictly increasing dates, matching shapes, all values positive and finite.
    bool is_clean() const;
};

/// Monthly log-returns. `dates` are month-end dates of the later month of each pair.
struct ReturnPanel {
    std::vector<Date> dates;
    std::vector<std::string> currencies;
    Eigen::MatrixXd values;
    bool standardized = false;

    std::size_t rows() const { return dates.size(); }
    std::size_t cols() const { return currencies.size(); }
    Eigen::VectorXd column(std::string_view code) const;
};

struct ParseOptions {
    char delimiter = ',';
    std::string date_column = "date";
    std::string rate_column = "rate";
    std::string date_format = "%Y-%m-%d";
};

struct ParsedSeries {
    RatePanel panel;
    std::vector<std::string> warnings;
    std::size_t missing = 0;
};

/// Reads one currency's daily series. Rows with unparseable or non-positive
/// rates are kept as NaN and reported in `warnings`.
ParsedSeries parse_rate_csv(std::istream& source, const std::string& currency_code,
                            const ParseOptions& options = {});

/// Reads a wide file (date column followed by one column per currency, as in the
/// ECB historical download) and splits it into single-currency series.
std::vector<ParsedSeries> parse_wide_rate_csv(std::istream& source,
                                              std::span<const std::string> codes,
                                              const ParseOptions& options = {});

/// Keeps rows with start <= date <= end.
RatePanel clip_dates(const RatePanel& panel, std::optional<Date> start, std::optional<Date> end);

/// Joins panels onto the union of their dates inside the maximal span every
/// column covers, filling interior gaps by linear interpolation in calendar time.
RatePanel merge_and_interpolate(std::span<const RatePanel> panels);

enum class MonthlyAggregation { Last, Mean };

/// One row per calendar month, dated at the month's last day.
RatePanel resample_monthly(const RatePanel& panel,
                           MonthlyAggregation rule = MonthlyAggregation::Last);

ReturnPanel log_returns(const RatePanel& panel);

/// Column z-scores with the n-1 sample standard deviation.
ReturnPanel standardize(const ReturnPanel& panel);

void write_panel_csv(std::ostream& out, std::span<const Date> dates,
                     std::span<const std::string> currencies, const Eigen::MatrixXd& values);
void write_panel_csv(std::ostream& out, const RatePanel& panel);
void write_panel_csv(std::ostream& out, const ReturnPanel& panel);

/// Reads the columnar "date,<code>,..." layout written by write_panel_csv.
RatePanel read_panel_csv(std::istream& in);

}  // namespace fxtda
