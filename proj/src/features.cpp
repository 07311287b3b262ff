#include "hhtfc/features.hpp"

#include <algorithm>
#include <ostream>

#include "hhtfc/csv.hpp"
#include "hhtfc/error.hpp"
#include "hhtfc/parallel.hpp"

namespace hhtfc::features {

const char* to_string(ComponentKind kind) {
    switch (kind) {
        case ComponentKind::imf: return "IMF";
        case ComponentKind::amplitude: return "A";
        case ComponentKind::frequency: return "F";
        case ComponentKind::residue: return "RES";
        case ComponentKind::raw: return "RAW";
    }
    return "?";
}

std::string ColumnSpec::label() const {
    std::string comp = to_string(kind);
    if (kind != ComponentKind::raw && kind != ComponentKind::residue) comp += std::to_string(index);
    return source + "/" + comp + "/" + std::to_string(lag);
}

Matrix FeatureMatrix::to_matrix() const {
    Matrix m(rows(), cols());
    for (std::size_t c = 0; c < cols(); ++c)
        for (std::size_t r = 0; r < rows(); ++r) m(r, c) = columns[c].values[r];
    return m;
}

std::vector<ColumnSpec> FeatureMatrix::specs() const {
    std::vector<ColumnSpec> out;
    out.reserve(columns.size());
    for (const auto& c : columns) out.push_back(c.spec);
    return out;
}

std::vector<std::string> FeatureMatrix::labels() const {
    std::vector<std::string> out;
    out.reserve(columns.size());
    for (const auto& c : columns) out.push_back(c.spec.label());
    return out;
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows) const {
    FeatureMatrix out;
    for (const auto& c : columns) {
        FeatureColumn nc{c.spec, {}};
        nc.values.reserve(rows.size());
        for (std::size_t r : rows) nc.values.push_back(c.values.at(r));
        out.columns.push_back(std::move(nc));
    }
    for (const auto& [h, t] : targets) {
        auto& dst = out.targets[h];
        for (std::size_t r : rows) dst.push_back(t.at(r));
    }
    for (std::size_t r : rows) out.row_time_index.push_back(row_time_index.at(r));
    return out;
}

FeatureMatrix FeatureMatrix::select_columns(std::span<const std::size_t> cols) const {
    FeatureMatrix out;
    out.targets = targets;
    out.row_time_index = row_time_index;
    for (std::size_t c : cols) out.columns.push_back(columns.at(c));
    return out;
}

std::vector<ComponentSeries> hht_components(const std::string& source, const emd::EmdResult& emd,
                                            const std::vector<spectral::InstAttributes>& attrs) {
    if (attrs.size() != emd.imfs.size()) throw DataError("IMF/attribute count mismatch");
    std::vector<ComponentSeries> out;
    for (std::size_t k = 0; k < emd.imfs.size(); ++k) {
        const auto& a = attrs[k];
        const std::size_t idx = k + 1;
        out.push_back({source, ComponentKind::imf, idx, emd.imfs[k], a.valid_begin, a.valid_end});
        out.push_back({source, ComponentKind::amplitude, idx, a.amplitude, a.valid_begin, a.valid_end});
        out.push_back({source, ComponentKind::frequency, idx, a.frequency, a.valid_begin, a.valid_end});
    }
    return out;
}

ComponentSeries residue_component(const std::string& source, const emd::EmdResult& emd) {
    return {source, ComponentKind::residue, 0, emd.residue, 0, emd.residue.size()};
}

std::vector<ComponentSeries> trailing_components(const std::string& source, std::span<const double> values,
                                                 std::size_t window, const emd::EmdConfig& cfg,
                                                 bool with_residue) {
    cfg.validate();
    if (window < 16) throw UsageError("trailing decomposition window must be >= 16");
    const std::size_t n = values.size();
    if (window > n)
        throw DataError("trailing window " + std::to_string(window) + " exceeds series length " +
                        std::to_string(n));
    const std::size_t k_max = cfg.max_imfs;
    const std::size_t first = window - 1;
    // [time][slot]: 3 per IMF, then the residue
    const std::size_t width = 3 * k_max + 1;
    std::vector<double> last(n * width, 0.0);
    parallel_for(n - first, [&](std::size_t i) {
        const std::size_t t = first + i;
        const auto win = values.subspan(t + 1 - window, window);
        const auto er = emd::decompose(win, cfg);
        double* out = &last[t * width];
        for (std::size_t k = 0; k < er.imfs.size() && k < k_max; ++k) {
            const auto at = spectral::inst_attributes(er.imfs[k]);
            out[3 * k] = er.imfs[k].back();
            out[3 * k + 1] = at.amplitude.back();
            out[3 * k + 2] = at.frequency.back();
        }
        out[3 * k_max] = er.residue.back();
    });

    auto column = [&](std::size_t slot) {
        std::vector<double> v(n);
        for (std::size_t t = 0; t < n; ++t) v[t] = last[t * width + slot];
        return v;
    };
    std::vector<ComponentSeries> out;
    for (std::size_t k = 0; k < k_max; ++k) {
        const std::size_t idx = k + 1;
        out.push_back({source, ComponentKind::imf, idx, column(3 * k), first, n});
        out.push_back({source, ComponentKind::amplitude, idx, column(3 * k + 1), first, n});
        out.push_back({source, ComponentKind::frequency, idx, column(3 * k + 2), first, n});
    }
    if (with_residue) out.push_back({source, ComponentKind::residue, 0, column(3 * k_max), first, n});
    return out;
}

ComponentSeries raw_component(const TimeSeries& series) {
    return {series.name, ComponentKind::raw, 0, series.values, 0, series.values.size()};
}

FeatureMatrix build_matrix(std::span<const ComponentSeries> components, std::span<const TimeSeries> raw,
                           std::span<const double> target, std::span<const std::size_t> lags,
                           std::span<const std::size_t> horizons) {
    if (lags.empty()) throw UsageError("feature lags must not be empty");
    if (horizons.empty()) throw UsageError("forecast horizons must not be empty");
    if (std::find(horizons.begin(), horizons.end(), std::size_t{0}) != horizons.end())
        throw UsageError("forecast horizons must be >= 1");
    const std::size_t n = target.size();
    for (const auto& c : components)
        if (c.values.size() != n) throw DataError("component '" + c.source + "' length differs from target");
    for (const auto& r : raw)
        if (r.size() != n) throw DataError("series '" + r.name + "' length differs from target");
    const std::size_t max_lag = *std::max_element(lags.begin(), lags.end());
    const std::size_t max_h = *std::max_element(horizons.begin(), horizons.end());
    if (max_lag + max_h >= n)
        throw DataError("series of length " + std::to_string(n) + " too short for max lag " +
                        std::to_string(max_lag) + " and max horizon " + std::to_string(max_h));
    const std::size_t rows = n - max_lag - max_h;

    FeatureMatrix m;
    m.row_time_index.resize(rows);
    for (std::size_t r = 0; r < rows; ++r) m.row_time_index[r] = max_lag + r;

    auto add = [&](const ColumnSpec& spec, const std::vector<double>& src) {
        FeatureColumn col{spec, std::vector<double>(rows)};
        for (std::size_t r = 0; r < rows; ++r) col.values[r] = src[m.row_time_index[r] - spec.lag];
        m.columns.push_back(std::move(col));
    };
    for (const auto& c : components)
        for (std::size_t L : lags) add({c.source, c.kind, c.index, L}, c.values);
    for (const auto& s : raw)
        for (std::size_t L : lags) add({s.name, ComponentKind::raw, 0, L}, s.values);

    for (std::size_t h : horizons) {
        auto& t = m.targets[h];
        t.resize(rows);
        for (std::size_t r = 0; r < rows; ++r) t[r] = target[m.row_time_index[r] + h];
    }
    return m;
}

std::vector<double> feature_row(std::span<const ComponentSeries> sources, std::span<const ColumnSpec> specs,
                                std::size_t t) {
    std::vector<double> row;
    row.reserve(specs.size());
    for (const auto& spec : specs) {
        const auto it = std::find_if(sources.begin(), sources.end(), [&](const ComponentSeries& s) {
            return s.source == spec.source && s.kind == spec.kind && s.index == spec.index;
        });
        if (it == sources.end()) throw DataError("no source for feature " + spec.label());
        if (spec.lag > t || t >= it->values.size())
            throw DataError("origin " + std::to_string(t) + " outside coverage of " + spec.label());
        row.push_back(it->values[t - spec.lag]);
    }
    return row;
}

PruneResult prune_by_importance(const FeatureMatrix& matrix, std::span<const double> importances,
                                double threshold) {
    if (importances.size() != matrix.cols())
        throw DataError("importance count " + std::to_string(importances.size()) + " does not match " +
                        std::to_string(matrix.cols()) + " columns");
    if (matrix.cols() == 0) throw DataError("cannot prune an empty feature matrix");
    PruneResult out;
    for (std::size_t c = 0; c < importances.size(); ++c)
        if (importances[c] >= threshold) out.kept.push_back(c);
    if (out.kept.empty()) {
        out.fallback = true;
        out.kept.push_back(static_cast<std::size_t>(
            std::max_element(importances.begin(), importances.end()) - importances.begin()));
    }
    out.matrix = matrix.select_columns(out.kept);
    return out;
}

void write_csv(std::ostream& os, const FeatureMatrix& m) {
    os << "time_index";
    for (const auto& c : m.columns) os << ',' << c.spec.label();
    for (const auto& [h, t] : m.targets) os << ",target/h" << h;
    os << '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
        os << m.row_time_index[r];
        for (const auto& c : m.columns) os << ',' << csv::format_double(c.values[r]);
        for (const auto& [h, t] : m.targets) os << ',' << csv::format_double(t[r]);
        os << '\n';
    }
}

}  // namespace hhtfc::features
