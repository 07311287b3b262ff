#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hhtfc/emd.hpp"
#include "hhtfc/matrix.hpp"
#include "hhtfc/series_io.hpp"
#include "hhtfc/spectral.hpp"

namespace hhtfc::features {

enum class ComponentKind { imf, amplitude, frequency, residue, raw };

/// One input signal a feature column can be lagged from.
struct ComponentSeries {
    std::string source;
    ComponentKind kind = ComponentKind::raw;
    std::size_t index = 0;  ///< IMF number (1-based); 0 for residue and raw
    std::vector<double> values;
    /// Interior range of the Hilbert attributes; whole series for raw.
    std::size_t valid_begin = 0;
    std::size_t valid_end = 0;
};

struct ColumnSpec {
    std::string source;
    ComponentKind kind = ComponentKind::raw;
    std::size_t index = 0;
    std::size_t lag = 0;

    /// "source/IMF3/2", "source/A1/0", "source/RAW/1"
    std::string label() const;
    bool operator==(const ColumnSpec&) const = default;
};

struct FeatureColumn {
    ColumnSpec spec;
    std::vector<double> values;
};

/// Lagged design matrix. Row r describes time t = row_time_index[r]; a column
/// with lag L holds its component at t - L, and targets[h][r] is the target
/// series at t + h.
struct FeatureMatrix {
    std::vector<FeatureColumn> columns;
    std::map<std::size_t, std::vector<double>> targets;
    std::vector<std::size_t> row_time_index;

    std::size_t rows() const { return row_time_index.size(); }
    std::size_t cols() const { return columns.size(); }
    Matrix to_matrix() const;
    std::vector<ColumnSpec> specs() const;
    std::vector<std::string> labels() const;
    FeatureMatrix select_rows(std::span<const std::size_t> rows) const;
    FeatureMatrix select_columns(std::span<const std::size_t> cols) const;
};

/// IMF_k, A_k and F_k series for every IMF of one decomposed signal.
std::vector<ComponentSeries> hht_components(const std::string& source, const emd::EmdResult& emd,
                                            const std::vector<spectral::InstAttributes>& attrs);

ComponentSeries residue_component(const std::string& source, const emd::EmdResult& emd);

ComponentSeries raw_component(const TimeSeries& series);

/// Causal variant of hht_components: the value at time t comes from decomposing
/// only values[t - window + 1 .. t] and reading the last sample. Always yields
/// cfg.max_imfs IMF/A/F triples (missing IMFs read as zero), plus the residue
/// when requested. Times before window - 1 are zero and lie outside the valid
/// range.
std::vector<ComponentSeries> trailing_components(const std::string& source, std::span<const double> values,
                                                 std::size_t window, const emd::EmdConfig& cfg,
                                                 bool with_residue);

/// Columns: every component at every lag, then every raw series at every lag.
FeatureMatrix build_matrix(std::span<const ComponentSeries> components, std::span<const TimeSeries> raw,
                           std::span<const double> target, std::span<const std::size_t> lags,
                           std::span<const std::size_t> horizons);

/// Feature vector for origin time t, columns in `specs` order.
std::vector<double> feature_row(std::span<const ComponentSeries> sources, std::span<const ColumnSpec> specs,
                                std::size_t t);

struct PruneResult {
    FeatureMatrix matrix;
    std::vector<std::size_t> kept;  ///< original column positions
    bool fallback = false;          ///< every column fell below the threshold
};

/// Drops columns whose importance is below the threshold. When none survive,
/// only the most important column is kept and `fallback` is set.
PruneResult prune_by_importance(const FeatureMatrix& matrix, std::span<const double> importances,
                                double threshold = 0.3);

/// time_index, one column per feature (provenance header), target/h<h>.
void write_csv(std::ostream& os, const FeatureMatrix& matrix);

const char* to_string(ComponentKind kind);

}  // namespace hhtfc::features
