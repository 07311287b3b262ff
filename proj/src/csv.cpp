#include "hhtfc/csv.hpp"

#include <charconv>
#include <fstream>
#include <ostream>

#include "hhtfc/error.hpp"

namespace hhtfc::csv {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(ch);
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.push_back(std::move(cur));
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    fields.push_back(std::move(cur));
    return fields;
}

std::size_t Table::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw DataError("missing column '" + name + "'");
}

Table read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    Table t;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!have_header) {
            // tolerate a UTF-8 byte order mark
            if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
            if (line.empty()) continue;
            t.header = split_line(line);
            for (auto& h : t.header) {
                while (!h.empty() && h.front() == ' ') h.erase(h.begin());
                while (!h.empty() && h.back() == ' ') h.pop_back();
            }
            have_header = true;
            continue;
        }
        if (line.empty() || line == "\r") continue;
        t.rows.push_back(split_line(line));
    }
    if (!have_header) throw DataError("empty CSV file " + path.string());
    return t;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_columns(std::ostream& os, const std::vector<std::string>& header,
                   const std::vector<std::vector<double>>& columns) {
    if (header.size() != columns.size()) throw UsageError("header/column count mismatch");
    const std::size_t n = columns.empty() ? 0 : columns.front().size();
    for (const auto& c : columns)
        if (c.size() != n) throw UsageError("columns differ in length");
    for (std::size_t j = 0; j < header.size(); ++j) os << (j ? "," : "") << header[j];
    os << '\n';
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < columns.size(); ++j)
            os << (j ? "," : "") << format_double(columns[j][i]);
        os << '\n';
    }
}

}  // namespace hhtfc::csv
