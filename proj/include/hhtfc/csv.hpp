#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace hhtfc::csv {

/// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_line(const std::string& line);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column position by name; throws DataError when absent.
    std::size_t index_of(const std::string& name) const;
};

Table read(const std::filesystem::path& path);

/// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

/// Writes a numeric table with a header; columns must share one length.
void write_columns(std::ostream& os, const std::vector<std::string>& header,
                   const std::vector<std::vector<double>>& columns);

}  // namespace hhtfc::csv
