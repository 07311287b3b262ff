#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace hhtfc {

/// Uniformly sampled scalar series. Sample i is taken at start_time + i * step.
struct TimeSeries {
    std::vector<double> values;
    double start_time = 0.0;  ///< seconds since epoch, or the raw integer index
    double step = 1.0;        ///< seconds (or index units)
    std::string name;

    std::size_t size() const { return values.size(); }
    double time_at(std::size_t i) const { return start_time + static_cast<double>(i) * step; }
};

enum class GapPolicy { interpolate_max3, fail };
enum class NormKind { minmax, zscore };

/// Affine map x' = (x - offset) / scale.
struct NormParams {
    NormKind kind = NormKind::minmax;
    double offset = 0.0;
    double scale = 1.0;

    double apply(double x) const { return (x - offset) / scale; }
    double invert(double x) const { return x * scale + offset; }

    static NormParams identity() { return {NormKind::minmax, 0.0, 1.0}; }
    static NormParams fit(const std::vector<double>& values, NormKind kind);
};

struct CsvOptions {
    std::string timestamp_column;  ///< empty: first column
    GapPolicy gap_policy = GapPolicy::interpolate_max3;
};

/// Reads one named column from a CSV file with a header row.
///
/// The timestamp column may hold ISO-8601 date-times or integer indices and
/// must be strictly increasing with a uniform step (1e-6 relative tolerance).
/// Empty cells and NA/NaN tokens count as missing; under interpolate_max3 runs
/// of at most three missing samples are filled linearly.
TimeSeries load_csv(const std::filesystem::path& path, const std::string& column,
                    const CsvOptions& opts = {});

/// Parses "YYYY-MM-DD", "YYYY-MM-DDTHH:MM[:SS[.fff]]" (space separator and a
/// trailing Z accepted) or a plain number. Returns seconds since the epoch.
double parse_timestamp(const std::string& text);

/// Fills NaN runs no longer than max_gap by linear interpolation.
void fill_gaps(std::vector<double>& values, std::size_t max_gap);

std::pair<TimeSeries, NormParams> normalize(const TimeSeries& series, NormKind kind);
TimeSeries denormalize(const TimeSeries& series, const NormParams& params);

/// Splits off the last `holdout` samples as the test series.
std::pair<TimeSeries, TimeSeries> split_holdout(const TimeSeries& series, std::size_t holdout);

const char* to_string(NormKind kind);
NormKind norm_kind_from_string(const std::string& text);

}  // namespace hhtfc
