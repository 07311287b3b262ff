#include "hhtfc/series_io.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>

#include "hhtfc/csv.hpp"
#include "hhtfc/error.hpp"

namespace hhtfc {

namespace {

std::string trim(std::string s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.pop_back();
    return s;
}

bool is_missing_token(const std::string& s) {
    return s.empty() || s == "NA" || s == "na" || s == "N/A" || s == "NaN" || s == "nan" ||
           s == "null" || s == "NULL";
}

bool parse_number(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

int parse_digits(const std::string& s, std::size_t pos, std::size_t len) {
    if (pos + len > s.size()) throw DataError("malformed timestamp '" + s + "'");
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
        if (s[i] < '0' || s[i] > '9') throw DataError("malformed timestamp '" + s + "'");
        v = v * 10 + (s[i] - '0');
    }
    return v;
}

}  // namespace

double parse_timestamp(const std::string& raw) {
    const std::string text = trim(raw);
    double numeric = 0.0;
    if (parse_number(text, numeric)) return numeric;

    // YYYY-MM-DD[(T| )HH:MM[:SS[.fff]]][Z]
    if (text.size() < 10 || text[4] != '-' || text[7] != '-')
        throw DataError("malformed timestamp '" + text + "'");
    using namespace std::chrono;
    const year_month_day ymd{year{parse_digits(text, 0, 4)},
                             month{static_cast<unsigned>(parse_digits(text, 5, 2))},
                             day{static_cast<unsigned>(parse_digits(text, 8, 2))}};
    if (!ymd.ok()) throw DataError("invalid date '" + text + "'");
    double secs = static_cast<double>(sys_days{ymd}.time_since_epoch().count()) * 86400.0;
    std::size_t pos = 10;
    if (pos < text.size() && (text[pos] == 'T' || text[pos] == ' ')) {
        ++pos;
        const int hh = parse_digits(text, pos, 2);
        if (pos + 2 >= text.size() || text[pos + 2] != ':')
            throw DataError("malformed time in '" + text + "'");
        const int mm = parse_digits(text, pos + 3, 2);
        pos += 5;
        double ss = 0.0;
        if (pos < text.size() && text[pos] == ':') {
            std::size_t end = pos + 1;
            while (end < text.size() && (std::isdigit(static_cast<unsigned char>(text[end])) ||
                                         text[end] == '.'))
                ++end;
            if (!parse_number(text.substr(pos + 1, end - pos - 1), ss))
                throw DataError("malformed seconds in '" + text + "'");
            pos = end;
        }
        if (hh > 23 || mm > 59 || ss >= 61.0) throw DataError("invalid time in '" + text + "'");
        secs += hh * 3600.0 + mm * 60.0 + ss;
    }
    if (pos < text.size() && text[pos] == 'Z') ++pos;
    if (pos != text.size()) throw DataError("unsupported timestamp suffix in '" + text + "'");
    return secs;
}

void fill_gaps(std::vector<double>& values, std::size_t max_gap) {
    const std::size_t n = values.size();
    std::size_t i = 0;
    while (i < n) {
        if (std::isfinite(values[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && !std::isfinite(values[j])) ++j;
        const std::size_t run = j - i;
        if (i == 0 || j == n)
            throw DataError("missing value at series boundary (sample " + std::to_string(i) +
                            ") cannot be interpolated");
        if (run > max_gap)
            throw DataError("gap of " + std::to_string(run) + " samples at index " +
                            std::to_string(i) + " exceeds limit of " + std::to_string(max_gap));
        const double a = values[i - 1];
        const double b = values[j];
        for (std::size_t k = i; k < j; ++k) {
            const double w = static_cast<double>(k - i + 1) / static_cast<double>(run + 1);
            values[k] = a + w * (b - a);
        }
        i = j;
    }
}

TimeSeries load_csv(const std::filesystem::path& path, const std::string& column,
                    const CsvOptions& opts) {
    const csv::Table table = csv::read(path);
    const std::size_t vcol = table.index_of(column);
    const std::size_t tcol = opts.timestamp_column.empty() ? 0 : table.index_of(opts.timestamp_column);
    if (tcol == vcol) throw DataError("timestamp and value column coincide");
    if (table.rows.empty()) throw DataError("no data rows in " + path.string());

    std::vector<double> times;
    TimeSeries ts;
    ts.name = column;
    times.reserve(table.rows.size());
    ts.values.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row.size() <= std::max(vcol, tcol))
            throw DataError("row " + std::to_string(r + 2) + " has too few fields");
        times.push_back(parse_timestamp(row[tcol]));
        const std::string cell = trim(row[vcol]);
        double v = std::numeric_limits<double>::quiet_NaN();
        if (!is_missing_token(cell) && !parse_number(cell, v))
            throw DataError("non-numeric value '" + cell + "' in row " + std::to_string(r + 2));
        if (!std::isfinite(v)) {
            if (opts.gap_policy == GapPolicy::fail)
                throw DataError("non-finite value in row " + std::to_string(r + 2));
            v = std::numeric_limits<double>::quiet_NaN();
        }
        ts.values.push_back(v);
    }

    ts.start_time = times.front();
    if (times.size() > 1) {
        ts.step = times[1] - times[0];
        if (!(ts.step > 0)) throw DataError("timestamps must be strictly increasing");
        for (std::size_t i = 1; i < times.size(); ++i) {
            const double d = times[i] - times[i - 1];
            if (std::abs(d - ts.step) > 1e-6 * ts.step)
                throw DataError("non-uniform sampling at row " + std::to_string(i + 2));
        }
    }
    fill_gaps(ts.values, 3);
    return ts;
}

NormParams NormParams::fit(const std::vector<double>& values, NormKind kind) {
    if (values.empty()) throw DataError("cannot normalize an empty series");
    NormParams p;
    p.kind = kind;
    if (kind == NormKind::minmax) {
        const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
        p.offset = *lo;
        p.scale = *hi - *lo;
    } else {
        const double n = static_cast<double>(values.size());
        const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        p.offset = mean;
        p.scale = std::sqrt(ss / n);
    }
    if (!(p.scale > 0.0) || !std::isfinite(p.scale))
        throw DataError("degenerate scale: series is constant");
    return p;
}

std::pair<TimeSeries, NormParams> normalize(const TimeSeries& series, NormKind kind) {
    const NormParams p = NormParams::fit(series.values, kind);
    TimeSeries out = series;
    for (double& v : out.values) v = p.apply(v);
    return {std::move(out), p};
}

TimeSeries denormalize(const TimeSeries& series, const NormParams& params) {
    TimeSeries out = series;
    for (double& v : out.values) v = params.invert(v);
    return out;
}

std::pair<TimeSeries, TimeSeries> split_holdout(const TimeSeries& series, std::size_t holdout) {
    const std::size_t n = series.size();
    if (holdout == 0 || holdout >= n)
        throw DataError("holdout " + std::to_string(holdout) + " out of range for length " +
                        std::to_string(n));
    TimeSeries train = series;
    TimeSeries test = series;
    train.values.assign(series.values.begin(), series.values.end() - static_cast<long>(holdout));
    test.values.assign(series.values.end() - static_cast<long>(holdout), series.values.end());
    test.start_time = series.time_at(n - holdout);
    return {std::move(train), std::move(test)};
}

const char* to_string(NormKind kind) { return kind == NormKind::minmax ? "minmax" : "zscore"; }

NormKind norm_kind_from_string(const std::string& text) {
    if (text == "minmax") return NormKind::minmax;
    if (text == "zscore") return NormKind::zscore;
    throw UsageError("unknown normalization '" + text + "'");
}

}  // namespace hhtfc
