#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fxtda::csv {

/// A parsed delimited file. `line_numbers[i]` is the 1-based source line of rows[i].
struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;

    /// Index of the header column named `name`, if any (exact match after trimming quotes).
    std::optional<std::size_t> column(std::string_view name) const;
};

std::vector<std::string> split_line(std::string_view line, char delimiter = ',');

/// Reads a header line followed by data rows. Blank lines are skipped and
/// trailing '\r' is stripped. Throws ErrorKind::EmptyInput when there is no header.
Table read(std::istream& in, char delimiter = ',');
Table read_file(const std::filesystem::path& path, char delimiter = ',');

void write_row(std::ostream& out, const std::vector<std::string>& fields, char delimiter = ',');

std::optional<double> parse_double(std::string_view text);
std::string trim(std::string_view text);

}  // namespace fxtda::csv
