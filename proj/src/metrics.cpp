#include "hhtfc/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "hhtfc/error.hpp"

namespace hhtfc::metrics {

std::vector<double> persistence(std::span<const double> series, std::size_t horizon) {
    if (horizon == 0) throw UsageError("horizon must be >= 1");
    if (horizon >= series.size()) return {};
    return {series.begin(), series.end() - static_cast<long>(horizon)};
}

std::vector<double> smoothing_levels(std::span<const double> series, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw UsageError("smoothing alpha must lie in (0, 1]");
    std::vector<double> level(series.size());
    if (series.empty()) return level;
    level[0] = series[0];
    for (std::size_t t = 1; t < series.size(); ++t)
        level[t] = alpha * series[t] + (1.0 - alpha) * level[t - 1];
    return level;
}

std::vector<double> exp_smoothing(std::span<const double> series, double alpha, std::size_t horizon) {
    if (horizon == 0) throw UsageError("horizon must be >= 1");
    auto level = smoothing_levels(series, alpha);
    if (horizon >= series.size()) return {};
    level.resize(series.size() - horizon);
    return level;
}

double select_alpha(std::span<const double> series, std::size_t horizon, std::span<const double> grid) {
    if (grid.empty()) throw UsageError("empty smoothing grid");
    if (series.size() <= horizon) throw DataError("series too short for smoothing selection");
    double best_alpha = grid.front();
    double best = std::numeric_limits<double>::infinity();
    for (double a : grid) {
        const auto f = exp_smoothing(series, a, horizon);
        double err = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i) err += std::abs(series[i + horizon] - f[i]);
        err /= static_cast<double>(f.size());
        if (err < best) {
            best = err;
            best_alpha = a;
        }
    }
    return best_alpha;
}

namespace {

IntervalMetrics range_metrics(std::span<const double> a, std::span<const double> p, double floor,
                              std::size_t* skipped) {
    IntervalMetrics m;
    double abs_sum = 0.0, sq_sum = 0.0, pct = 0.0;
    std::size_t n_pct = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double e = a[i] - p[i];
        abs_sum += std::abs(e);
        sq_sum += e * e;
        if (std::abs(a[i]) > floor) {
            pct += std::abs(e) / std::abs(a[i]);
            ++n_pct;
        }
    }
    const double n = static_cast<double>(a.size());
    m.mae = abs_sum / n;
    m.rmse = std::sqrt(sq_sum / n);
    if (n_pct > 0) m.mape = 100.0 * pct / static_cast<double>(n_pct);
    if (skipped) *skipped = a.size() - n_pct;
    return m;
}

}  // namespace

MetricsReport compute(std::span<const double> actual, std::span<const double> predicted,
                      const std::vector<IntervalSpec>& intervals, double mape_floor) {
    if (actual.size() != predicted.size()) throw DataError("actual and predicted differ in length");
    if (actual.empty()) throw DataError("metrics need at least one point");
    MetricsReport r;
    const IntervalMetrics all = range_metrics(actual, predicted, mape_floor, &r.n_skipped_mape);
    r.mae = all.mae;
    r.rmse = all.rmse;
    r.mape = all.mape;
    for (const auto& iv : intervals) {
        if (iv.begin >= iv.end || iv.end > actual.size())
            throw DataError("interval '" + iv.label + "' out of range");
        IntervalMetrics m = range_metrics(actual.subspan(iv.begin, iv.end - iv.begin),
                                          predicted.subspan(iv.begin, iv.end - iv.begin), mape_floor,
                                          nullptr);
        m.label = iv.label;
        r.sub_intervals.push_back(std::move(m));
    }
    return r;
}

std::vector<IntervalSpec> block_intervals(std::size_t length, std::size_t block, const std::string& unit) {
    std::vector<IntervalSpec> out;
    if (block == 0) return out;
    for (std::size_t b = 0; b < length; b += block) {
        const std::size_t e = std::min(length, b + block);
        out.push_back({std::to_string(b) + "-" + std::to_string(e) + unit, b, e});
    }
    return out;
}

namespace {

nlohmann::json opt_json(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::optional<double> opt_from(const nlohmann::json& v) {
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
}

}  // namespace

nlohmann::json to_json(const MetricsReport& r) {
    nlohmann::json subs = nlohmann::json::array();
    for (const auto& s : r.sub_intervals)
        subs.push_back({{"label", s.label}, {"mae", s.mae}, {"rmse", s.rmse}, {"mape", opt_json(s.mape)}});
    return {{"mae", r.mae},
            {"rmse", r.rmse},
            {"mape", opt_json(r.mape)},
            {"n_skipped_mape", r.n_skipped_mape},
            {"sub_intervals", subs}};
}

MetricsReport report_from_json(const nlohmann::json& doc) {
    MetricsReport r;
    r.mae = doc.at("mae").get<double>();
    r.rmse = doc.at("rmse").get<double>();
    r.mape = opt_from(doc.at("mape"));
    r.n_skipped_mape = doc.at("n_skipped_mape").get<std::size_t>();
    for (const auto& s : doc.at("sub_intervals"))
        r.sub_intervals.push_back({s.at("label").get<std::string>(), s.at("mae").get<double>(),
                                   s.at("rmse").get<double>(), opt_from(s.at("mape"))});
    return r;
}

namespace {

std::string cell(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string cell(const std::optional<double>& v) { return v ? cell(*v) : std::string("n/a"); }

void pad(std::ostream& os, const std::string& s, std::size_t width) {
    os << s;
    for (std::size_t i = s.size(); i < width; ++i) os << ' ';
}

}  // namespace

void write_interval_table(std::ostream& os, const std::vector<NamedReport>& reports) {
    constexpr std::size_t w0 = 12, w1 = 8;
    std::size_t wm = 12;
    for (const auto& r : reports) wm = std::max(wm, r.model.size() + 2);
    pad(os, "Interval", w0);
    pad(os, "Error", w1);
    for (const auto& r : reports) pad(os, r.model, wm);
    os << '\n';
    auto emit = [&](const std::string& label, auto&& get_mae, auto&& get_rmse) {
        pad(os, label, w0);
        pad(os, "MAE", w1);
        for (const auto& r : reports) pad(os, cell(get_mae(r.report)), wm);
        os << '\n';
        pad(os, "", w0);
        pad(os, "RMSE", w1);
        for (const auto& r : reports) pad(os, cell(get_rmse(r.report)), wm);
        os << '\n';
    };
    if (reports.empty()) return;
    const auto& first = reports.front().report.sub_intervals;
    for (std::size_t s = 0; s < first.size(); ++s) {
        emit(
            first[s].label, [s](const MetricsReport& m) { return m.sub_intervals.at(s).mae; },
            [s](const MetricsReport& m) { return m.sub_intervals.at(s).rmse; });
    }
    emit(
        "overall", [](const MetricsReport& m) { return m.mae; },
        [](const MetricsReport& m) { return m.rmse; });
}

void write_model_table(std::ostream& os, const std::vector<NamedReport>& reports) {
    std::size_t wm = 18;
    for (const auto& r : reports) wm = std::max(wm, r.model.size() + 2);
    constexpr std::size_t wc = 12;
    pad(os, "#", 4);
    pad(os, "Model", wm);
    pad(os, "MAPE, %", wc);
    pad(os, "MAE", wc);
    pad(os, "RMSE", wc);
    os << '\n';
    for (std::size_t i = 0; i < reports.size(); ++i) {
        pad(os, std::to_string(i + 1), 4);
        pad(os, reports[i].model, wm);
        pad(os, cell(reports[i].report.mape), wc);
        pad(os, cell(reports[i].report.mae), wc);
        pad(os, cell(reports[i].report.rmse), wc);
        os << '\n';
    }
}

}  // namespace hhtfc::metrics
