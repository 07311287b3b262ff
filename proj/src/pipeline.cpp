#include "hhtfc/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

#include "hhtfc/csv.hpp"
#include "hhtfc/error.hpp"
#include "hhtfc/parallel.hpp"
#include "hhtfc/rbfnet.hpp"
#include "hhtfc/seed.hpp"
#include "hhtfc/svr.hpp"

namespace hhtfc::pipeline {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

// ---- config parsing helpers ----

void check_keys(const ojson& obj, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!obj.is_object()) throw UsageError(where + " must be a JSON object");
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw UsageError("unknown key '" + key + "' in " + where);
    }
}

std::size_t count_of(const ojson& v, const std::string& where) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
        throw UsageError(where + " must be a non-negative integer");
    return v.get<std::size_t>();
}

double real_of(const ojson& v, const std::string& where) {
    if (!v.is_number()) throw UsageError(where + " must be a number");
    return v.get<double>();
}

bool bool_of(const ojson& v, const std::string& where) {
    if (!v.is_boolean()) throw UsageError(where + " must be true or false");
    return v.get<bool>();
}

std::string string_of(const ojson& v, const std::string& where) {
    if (!v.is_string()) throw UsageError(where + " must be a string");
    return v.get<std::string>();
}

std::vector<std::size_t> counts_of(const ojson& v, const std::string& where) {
    std::vector<std::size_t> out;
    if (v.is_object()) {
        // {"from": a, "to": b} shorthand for a contiguous range
        check_keys(v, {"from", "to"}, where);
        if (!v.contains("from") || !v.contains("to")) throw UsageError(where + " range needs 'from' and 'to'");
        const std::size_t a = count_of(v["from"], where + ".from");
        const std::size_t b = count_of(v["to"], where + ".to");
        if (b < a) throw UsageError(where + " range is empty");
        for (std::size_t i = a; i <= b; ++i) out.push_back(i);
        return out;
    }
    if (!v.is_array()) throw UsageError(where + " must be an array of integers");
    for (const auto& e : v) out.push_back(count_of(e, where));
    return out;
}

SeriesRole role_from_string(const std::string& s) {
    if (s == "target") return SeriesRole::target;
    if (s == "exogenous") return SeriesRole::exogenous;
    throw UsageError("input role must be 'target' or 'exogenous', got '" + s + "'");
}

const char* to_string(SeriesRole r) { return r == SeriesRole::target ? "target" : "exogenous"; }

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "svr") return ModelKind::svr;
    if (s == "rbf") return ModelKind::rbf;
    if (s == "persistence") return ModelKind::persistence;
    if (s == "exp_smoothing") return ModelKind::exp_smoothing;
    throw UsageError("unknown model type '" + s + "' (expected svr, rbf, persistence or exp_smoothing)");
}

DecompositionMode mode_from_string(const std::string& s) {
    if (s == "full") return DecompositionMode::full;
    if (s == "trailing") return DecompositionMode::trailing;
    throw UsageError("decomposition mode must be 'full' or 'trailing', got '" + s + "'");
}

HyperParams default_params(ModelKind kind) {
    switch (kind) {
        case ModelKind::svr:
            return {{"C", 1.0}, {"epsilon", 0.1}, {"kernel", "rbf"}, {"gamma", 1.0}, {"degree", 3}, {"coef0", 0.0}};
        case ModelKind::rbf: return {{"k", 16}, {"ridge", 1e-8}, {"width_scale", 1.0}};
        case ModelKind::exp_smoothing: return {{"alpha", 0.5}};
        case ModelKind::persistence: return {};
    }
    return {};
}

double param_real(const HyperParams& p, const std::string& key) {
    auto it = p.find(key);
    if (it == p.end() || !it->second.is_number()) throw UsageError("hyperparameter '" + key + "' must be a number");
    return it->second.get<double>();
}

std::size_t param_count(const HyperParams& p, const std::string& key) {
    auto it = p.find(key);
    if (it == p.end() || !it->second.is_number_integer() || it->second.get<std::int64_t>() < 1)
        throw UsageError("hyperparameter '" + key + "' must be a positive integer");
    return it->second.get<std::size_t>();
}

svr::SvrParams svr_params(const HyperParams& p) {
    svr::SvrParams sp;
    sp.C = param_real(p, "C");
    sp.epsilon = param_real(p, "epsilon");
    const auto kit = p.find("kernel");
    if (kit == p.end() || !kit->second.is_string()) throw UsageError("hyperparameter 'kernel' must be a string");
    sp.kernel.kind = svr::kernel_kind_from_string(kit->second.get<std::string>());
    sp.kernel.gamma = param_real(p, "gamma");
    sp.kernel.degree = static_cast<int>(param_count(p, "degree"));
    sp.kernel.coef0 = param_real(p, "coef0");
    if (!(sp.C > 0.0)) throw UsageError("SVR C must be > 0");
    if (!(sp.epsilon >= 0.0)) throw UsageError("SVR epsilon must be >= 0");
    sp.kernel.validate();
    return sp;
}

void check_params(ModelKind kind, const HyperParams& p) {
    switch (kind) {
        case ModelKind::svr: svr_params(p); break;
        case ModelKind::rbf:
            param_count(p, "k");
            if (!(param_real(p, "ridge") >= 0.0)) throw UsageError("RBF ridge must be >= 0");
            if (!(param_real(p, "width_scale") > 0.0)) throw UsageError("RBF width_scale must be > 0");
            break;
        case ModelKind::exp_smoothing: {
            const double a = param_real(p, "alpha");
            if (!(a > 0.0 && a <= 1.0)) throw UsageError("exp_smoothing alpha must lie in (0, 1]");
            break;
        }
        case ModelKind::persistence: break;
    }
}

std::string safe_name(const std::string& s) {
    std::string out;
    for (char c : s) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                        c == '_' || c == '.';
        out += ok ? c : '_';
    }
    return out.empty() ? "_" : out;
}

nlohmann::json norm_json(const NormParams& n) {
    return {{"kind", to_string(n.kind)}, {"offset", n.offset}, {"scale", n.scale}};
}

NormParams norm_from(const nlohmann::json& j) {
    return {norm_kind_from_string(j.at("kind").get<std::string>()), j.at("offset").get<double>(),
            j.at("scale").get<double>()};
}

nlohmann::json params_json(const HyperParams& p) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [k, v] : p) out[k] = v;
    return out;
}

HyperParams params_from(const nlohmann::json& j) {
    HyperParams out;
    for (const auto& [k, v] : j.items()) out[k] = v;
    return out;
}

features::ComponentKind component_kind_from_string(const std::string& s) {
    using features::ComponentKind;
    for (auto k : {ComponentKind::imf, ComponentKind::amplitude, ComponentKind::frequency, ComponentKind::residue,
                   ComponentKind::raw})
        if (s == features::to_string(k)) return k;
    throw DataError("unknown component kind '" + s + "' in bundle");
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw DataError("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double mean_abs_error(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return s / static_cast<double>(a.size());
}

}  // namespace

// ---- configuration ----

const char* to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::svr: return "svr";
        case ModelKind::rbf: return "rbf";
        case ModelKind::persistence: return "persistence";
        case ModelKind::exp_smoothing: return "exp_smoothing";
    }
    return "?";
}

const char* to_string(DecompositionMode mode) { return mode == DecompositionMode::full ? "full" : "trailing"; }

std::vector<HyperParams> ModelSpec::grid() const {
    std::vector<HyperParams> out{default_params(kind)};
    for (const auto& axis : axes) {
        std::vector<HyperParams> next;
        for (const auto& base : out)
            for (const auto& v : axis.values) {
                HyperParams p = base;
                p[axis.key] = v;
                next.push_back(std::move(p));
            }
        out = std::move(next);
    }
    return out;
}

const InputSpec& PipelineConfig::target() const {
    for (const auto& in : inputs)
        if (in.role == SeriesRole::target) return in;
    throw UsageError("config has no target input");
}

std::vector<std::size_t> PipelineConfig::ranking_horizons() const {
    if (!importance.rank_horizons.empty()) return importance.rank_horizons;
    return {*std::min_element(horizons.begin(), horizons.end())};
}

void PipelineConfig::validate() const {
    if (schema_version != kConfigSchemaVersion)
        throw UsageError("unsupported config schema_version " + std::to_string(schema_version));
    if (inputs.empty()) throw UsageError("config needs at least one input series");
    std::size_t targets = 0;
    std::set<std::string> names;
    for (const auto& in : inputs) {
        if (in.path.empty()) throw UsageError("input path must not be empty");
        if (in.column.empty()) throw UsageError("input column must not be empty");
        if (!names.insert(in.name).second) throw UsageError("duplicate input name '" + in.name + "'");
        targets += in.role == SeriesRole::target;
    }
    if (targets == 0) throw UsageError("config needs one input with role 'target'");
    if (targets > 1) throw UsageError("config supports exactly one target input");
    emd.validate();
    if (decomposition.mode == DecompositionMode::trailing && decomposition.window < 16)
        throw UsageError("trailing decomposition window must be >= 16");
    if (lags.empty()) throw UsageError("lags must not be empty");
    if (horizons.empty()) throw UsageError("horizons must not be empty");
    for (std::size_t h : horizons)
        if (h == 0) throw UsageError("horizons must be >= 1");
    if (std::set<std::size_t>(horizons.begin(), horizons.end()).size() != horizons.size())
        throw UsageError("horizons must be distinct");
    for (std::size_t h : importance.rank_horizons)
        if (std::find(horizons.begin(), horizons.end(), h) == horizons.end())
            throw UsageError("rank horizon " + std::to_string(h) + " is not a configured horizon");
    if (!(importance.threshold >= 0.0 && importance.threshold <= 1.0))
        throw UsageError("importance threshold must lie in [0, 1]");
    if (importance.rf.n_trees == 0) throw UsageError("importance.rf.n_trees must be >= 1");
    if (importance.bt.n_rounds == 0) throw UsageError("importance.bt.n_rounds must be >= 1");
    if (!(importance.bt.shrinkage > 0.0 && importance.bt.shrinkage <= 1.0))
        throw UsageError("importance.bt.shrinkage must lie in (0, 1]");
    if (models.empty()) throw UsageError("config needs at least one model");
    std::set<std::string> model_names;
    for (const auto& m : models) {
        if (m.name.empty()) throw UsageError("model name must not be empty");
        if (!model_names.insert(m.name).second) throw UsageError("duplicate model name '" + m.name + "'");
        const auto defaults = default_params(m.kind);
        for (const auto& axis : m.axes) {
            if (!defaults.count(axis.key))
                throw UsageError("model '" + m.name + "': unknown hyperparameter '" + axis.key + "'");
            if (axis.values.empty())
                throw UsageError("model '" + m.name + "': empty grid for '" + axis.key + "'");
        }
        for (const auto& p : m.grid()) check_params(m.kind, p);
    }
    if (cv_folds < 2) throw UsageError("cv_folds must be >= 2");
    const std::size_t max_h = *std::max_element(horizons.begin(), horizons.end());
    if (holdout < max_h) throw UsageError("holdout must be >= the largest horizon");
}

PipelineConfig config_from_json(const ojson& doc, const fs::path& base_dir) {
    check_keys(doc, {"schema_version", "inputs", "emd", "decomposition", "lags", "horizons", "time_of_day", "importance",
                     "target_norm", "models", "cv_folds", "holdout", "interval_block", "interval_unit", "seed"},
               "config");
    PipelineConfig c;
    c.base_dir = base_dir;
    if (!doc.contains("schema_version")) throw UsageError("config is missing schema_version");
    c.schema_version = static_cast<int>(count_of(doc["schema_version"], "schema_version"));

    if (!doc.contains("inputs") || !doc["inputs"].is_array()) throw UsageError("config needs an 'inputs' array");
    for (const auto& in : doc["inputs"]) {
        check_keys(in, {"path", "column", "role", "name", "timestamp_column", "gap_policy"}, "inputs[]");
        InputSpec s;
        if (!in.contains("path") || !in.contains("column")) throw UsageError("each input needs 'path' and 'column'");
        s.path = string_of(in["path"], "inputs[].path");
        s.column = string_of(in["column"], "inputs[].column");
        s.role = role_from_string(in.contains("role") ? string_of(in["role"], "inputs[].role") : "target");
        s.name = in.contains("name") ? string_of(in["name"], "inputs[].name") : s.column;
        if (in.contains("timestamp_column")) s.timestamp_column = string_of(in["timestamp_column"], "timestamp_column");
        if (in.contains("gap_policy")) {
            const auto g = string_of(in["gap_policy"], "gap_policy");
            if (g == "interpolate") s.gap_policy = GapPolicy::interpolate_max3;
            else if (g == "fail") s.gap_policy = GapPolicy::fail;
            else throw UsageError("gap_policy must be 'interpolate' or 'fail'");
        }
        c.inputs.push_back(std::move(s));
    }

    if (doc.contains("emd")) {
        const auto& e = doc["emd"];
        check_keys(e, {"sd_threshold", "max_sift_iters", "max_imfs", "boundary_pad_extrema", "require_imf_balance"},
                   "emd");
        if (e.contains("sd_threshold")) c.emd.sd_threshold = real_of(e["sd_threshold"], "emd.sd_threshold");
        if (e.contains("max_sift_iters")) c.emd.max_sift_iters = count_of(e["max_sift_iters"], "emd.max_sift_iters");
        if (e.contains("max_imfs")) c.emd.max_imfs = count_of(e["max_imfs"], "emd.max_imfs");
        if (e.contains("boundary_pad_extrema"))
            c.emd.boundary_pad_extrema = count_of(e["boundary_pad_extrema"], "emd.boundary_pad_extrema");
        if (e.contains("require_imf_balance"))
            c.emd.require_imf_balance = bool_of(e["require_imf_balance"], "emd.require_imf_balance");
    }
    if (doc.contains("decomposition")) {
        const auto& d = doc["decomposition"];
        check_keys(d, {"mode", "window", "include_residue", "exogenous_imfs", "drop_edge_rows"}, "decomposition");
        if (d.contains("mode")) c.decomposition.mode = mode_from_string(string_of(d["mode"], "decomposition.mode"));
        if (d.contains("window")) c.decomposition.window = count_of(d["window"], "decomposition.window");
        if (d.contains("include_residue"))
            c.decomposition.include_residue = bool_of(d["include_residue"], "decomposition.include_residue");
        if (d.contains("exogenous_imfs"))
            c.decomposition.exogenous_imfs = bool_of(d["exogenous_imfs"], "decomposition.exogenous_imfs");
        if (d.contains("drop_edge_rows"))
            c.decomposition.drop_edge_rows = bool_of(d["drop_edge_rows"], "decomposition.drop_edge_rows");
    }
    if (doc.contains("lags")) c.lags = counts_of(doc["lags"], "lags");
    if (doc.contains("horizons")) c.horizons = counts_of(doc["horizons"], "horizons");
    if (doc.contains("time_of_day")) c.time_of_day = bool_of(doc["time_of_day"], "time_of_day");

    if (doc.contains("importance")) {
        const auto& im = doc["importance"];
        check_keys(im, {"threshold", "rank_horizons", "rf", "bt"}, "importance");
        if (im.contains("threshold")) c.importance.threshold = real_of(im["threshold"], "importance.threshold");
        if (im.contains("rank_horizons"))
            c.importance.rank_horizons = counts_of(im["rank_horizons"], "importance.rank_horizons");
        if (im.contains("rf")) {
            const auto& r = im["rf"];
            check_keys(r, {"n_trees", "mtry", "min_leaf", "max_depth", "bootstrap"}, "importance.rf");
            auto& p = c.importance.rf;
            if (r.contains("n_trees")) p.n_trees = count_of(r["n_trees"], "importance.rf.n_trees");
            if (r.contains("mtry")) p.mtry = count_of(r["mtry"], "importance.rf.mtry");
            if (r.contains("min_leaf")) p.min_leaf = count_of(r["min_leaf"], "importance.rf.min_leaf");
            if (r.contains("max_depth")) p.max_depth = count_of(r["max_depth"], "importance.rf.max_depth");
            if (r.contains("bootstrap")) p.bootstrap = bool_of(r["bootstrap"], "importance.rf.bootstrap");
        }
        if (im.contains("bt")) {
            const auto& b = im["bt"];
            check_keys(b, {"n_rounds", "shrinkage", "max_depth", "min_leaf", "feature_subset_size"}, "importance.bt");
            auto& p = c.importance.bt;
            if (b.contains("n_rounds")) p.n_rounds = count_of(b["n_rounds"], "importance.bt.n_rounds");
            if (b.contains("shrinkage")) p.shrinkage = real_of(b["shrinkage"], "importance.bt.shrinkage");
            if (b.contains("max_depth")) p.max_depth = count_of(b["max_depth"], "importance.bt.max_depth");
            if (b.contains("min_leaf")) p.min_leaf = count_of(b["min_leaf"], "importance.bt.min_leaf");
            if (b.contains("feature_subset_size"))
                p.feature_subset_size = count_of(b["feature_subset_size"], "importance.bt.feature_subset_size");
        }
    }
    if (doc.contains("target_norm")) c.target_norm = norm_kind_from_string(string_of(doc["target_norm"], "target_norm"));

    if (!doc.contains("models") || !doc["models"].is_array()) throw UsageError("config needs a 'models' array");
    for (const auto& m : doc["models"]) {
        check_keys(m, {"name", "type", "grid"}, "models[]");
        ModelSpec s;
        if (!m.contains("type")) throw UsageError("each model needs a 'type'");
        s.kind = model_kind_from_string(string_of(m["type"], "models[].type"));
        s.name = m.contains("name") ? string_of(m["name"], "models[].name") : to_string(s.kind);
        if (m.contains("grid")) {
            if (!m["grid"].is_object()) throw UsageError("models[].grid must be an object");
            for (const auto& [key, vals] : m["grid"].items()) {
                GridAxis axis{key, {}};
                auto add = [&](const ojson& v) {
                    if (!v.is_number() && !v.is_string())
                        throw UsageError("grid values for '" + key + "' must be numbers or strings");
                    axis.values.push_back(nlohmann::json::parse(v.dump()));
                };
                if (vals.is_array())
                    for (const auto& v : vals) add(v);
                else
                    add(vals);
                s.axes.push_back(std::move(axis));
            }
        }
        c.models.push_back(std::move(s));
    }
    if (doc.contains("cv_folds")) c.cv_folds = count_of(doc["cv_folds"], "cv_folds");
    if (doc.contains("holdout")) c.holdout = count_of(doc["holdout"], "holdout");
    if (doc.contains("interval_block")) c.interval_block = count_of(doc["interval_block"], "interval_block");
    if (doc.contains("interval_unit")) c.interval_unit = string_of(doc["interval_unit"], "interval_unit");
    if (doc.contains("seed")) c.seed = count_of(doc["seed"], "seed");
    c.validate();
    return c;
}

ojson to_json(const PipelineConfig& c) {
    ojson doc;
    doc["schema_version"] = c.schema_version;
    doc["inputs"] = ojson::array();
    for (const auto& in : c.inputs) {
        doc["inputs"].push_back({{"path", in.path.generic_string()},
                                 {"column", in.column},
                                 {"role", to_string(in.role)},
                                 {"name", in.name},
                                 {"timestamp_column", in.timestamp_column},
                                 {"gap_policy", in.gap_policy == GapPolicy::fail ? "fail" : "interpolate"}});
    }
    doc["emd"] = {{"sd_threshold", c.emd.sd_threshold},
                  {"max_sift_iters", c.emd.max_sift_iters},
                  {"max_imfs", c.emd.max_imfs},
                  {"boundary_pad_extrema", c.emd.boundary_pad_extrema},
                  {"require_imf_balance", c.emd.require_imf_balance}};
    doc["decomposition"] = {{"mode", to_string(c.decomposition.mode)},
                            {"window", c.decomposition.window},
                            {"include_residue", c.decomposition.include_residue},
                            {"exogenous_imfs", c.decomposition.exogenous_imfs},
                            {"drop_edge_rows", c.decomposition.drop_edge_rows}};
    doc["lags"] = c.lags;
    doc["horizons"] = c.horizons;
    doc["time_of_day"] = c.time_of_day;
    const auto& rf = c.importance.rf;
    const auto& bt = c.importance.bt;
    doc["importance"] = {{"threshold", c.importance.threshold},
                         {"rank_horizons", c.importance.rank_horizons},
                         {"rf",
                          {{"n_trees", rf.n_trees},
                           {"mtry", rf.mtry},
                           {"min_leaf", rf.min_leaf},
                           {"max_depth", rf.max_depth},
                           {"bootstrap", rf.bootstrap}}},
                         {"bt",
                          {{"n_rounds", bt.n_rounds},
                           {"shrinkage", bt.shrinkage},
                           {"max_depth", bt.max_depth},
                           {"min_leaf", bt.min_leaf},
                           {"feature_subset_size", bt.feature_subset_size}}}};
    doc["target_norm"] = to_string(c.target_norm);
    doc["models"] = ojson::array();
    for (const auto& m : c.models) {
        ojson grid = ojson::object();
        for (const auto& axis : m.axes) {
            ojson vals = ojson::array();
            for (const auto& v : axis.values) vals.push_back(ojson::parse(v.dump()));
            grid[axis.key] = vals;
        }
        doc["models"].push_back({{"name", m.name}, {"type", to_string(m.kind)}, {"grid", grid}});
    }
    doc["cv_folds"] = c.cv_folds;
    doc["holdout"] = c.holdout;
    doc["interval_block"] = c.interval_block;
    doc["interval_unit"] = c.interval_unit;
    doc["seed"] = c.seed;
    return doc;
}

PipelineConfig load_config(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open config file " + path.string());
    ojson doc;
    try {
        doc = ojson::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
    return config_from_json(doc, path.parent_path());
}

std::string fingerprint(const PipelineConfig& config) {
    const std::string text = to_json(config).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---- data ----

Dataset load_dataset(const PipelineConfig& config) {
    config.validate();
    Dataset d;
    for (const auto& in : config.inputs) {
        const fs::path p = in.path.is_absolute() ? in.path : config.base_dir / in.path;
        CsvOptions opts;
        opts.timestamp_column = in.timestamp_column;
        opts.gap_policy = in.gap_policy;
        TimeSeries ts = load_csv(p, in.column, opts);
        ts.name = in.name;
        if (!d.full.empty()) {
            const auto& first = d.full.front();
            if (ts.size() != first.size())
                throw DataError("series '" + in.name + "' has " + std::to_string(ts.size()) +
                                " samples but '" + first.name + "' has " + std::to_string(first.size()));
            if (std::abs(ts.step - first.step) > 1e-9 * std::max(1.0, std::abs(first.step)) ||
                std::abs(ts.start_time - first.start_time) > 1e-9 * std::max(1.0, std::abs(first.start_time)))
                throw DataError("series '" + in.name + "' is not sampled on the same time grid as '" +
                                first.name + "'");
        }
        if (in.role == SeriesRole::target) d.target = d.full.size();
        d.full.push_back(std::move(ts));
    }
    for (const auto& ts : d.full) {
        if (ts.size() <= config.holdout)
            throw DataError("series '" + ts.name + "' has " + std::to_string(ts.size()) +
                            " samples, not more than the holdout of " + std::to_string(config.holdout));
        auto [train, test] = split_holdout(ts, config.holdout);
        d.train.push_back(std::move(train));
        d.test.push_back(std::move(test));
    }
    return d;
}

// ---- artifact store ----

void ArtifactStore::stage(const std::string& relative, std::string content) {
    staged_[relative] = std::move(content);
}

std::vector<fs::path> ArtifactStore::commit() {
    std::vector<fs::path> written;
    for (const auto& [rel, content] : staged_) {
        const fs::path dst = root_ / rel;
        std::error_code ec;
        fs::create_directories(dst.parent_path(), ec);
        if (ec) throw DataError("cannot create directory " + dst.parent_path().string() + ": " + ec.message());
        const fs::path tmp = dst.string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw DataError("cannot write " + tmp.string());
            out << content;
            if (!out) throw DataError("write failed for " + tmp.string());
        }
        fs::rename(tmp, dst, ec);
        if (ec) throw DataError("cannot move " + tmp.string() + " into place: " + ec.message());
        written.push_back(dst);
    }
    staged_.clear();
    return written;
}

std::string ArtifactStore::read(const std::string& relative) const {
    if (auto it = staged_.find(relative); it != staged_.end()) return it->second;
    const fs::path p = root_ / relative;
    if (!fs::exists(p)) throw DataError("missing workspace artifact " + p.string());
    return read_file(p);
}

bool ArtifactStore::exists(const std::string& relative) const {
    return staged_.count(relative) > 0 || fs::exists(root_ / relative);
}

// ---- decomposition and features ----

std::vector<features::ComponentSeries> Decomposition::components() const {
    std::vector<features::ComponentSeries> out;
    for (const auto& s : series) out.insert(out.end(), s.components.begin(), s.components.end());
    return out;
}

Decomposition run_decompose(const PipelineConfig& config, const Dataset& data, ArtifactStore* store) {
    Decomposition out;
    out.series.resize(data.train.size());
    const bool trailing = config.decomposition.mode == DecompositionMode::trailing;
    for (std::size_t i = 0; i < data.train.size(); ++i) {
        const auto& ts = data.train[i];
        auto& sd = out.series[i];
        sd.name = ts.name;
        sd.role = i == data.target ? SeriesRole::target : SeriesRole::exogenous;
        const bool use = sd.role == SeriesRole::target || config.decomposition.exogenous_imfs;
        if (trailing) {
            sd.components = features::trailing_components(ts.name, ts.values, config.decomposition.window,
                                                          config.emd, config.decomposition.include_residue);
        } else {
            sd.emd = emd::decompose(ts.values, config.emd);
            for (const auto& imf : sd.emd.imfs) sd.attrs.push_back(spectral::inst_attributes(imf));
            sd.components = features::hht_components(ts.name, sd.emd, sd.attrs);
            if (config.decomposition.include_residue)
                sd.components.push_back(features::residue_component(ts.name, sd.emd));
        }
        if (store) {
            std::vector<std::string> header{"time_index"};
            std::vector<std::vector<double>> cols(1);
            for (std::size_t t = 0; t < ts.size(); ++t) cols[0].push_back(static_cast<double>(t));
            for (const auto& c : sd.components) {
                std::string label = features::to_string(c.kind);
                if (c.kind != features::ComponentKind::residue) label += std::to_string(c.index);
                header.push_back(label);
                cols.push_back(c.values);
            }
            if (!trailing && !config.decomposition.include_residue) {
                header.push_back("RES");
                cols.push_back(sd.emd.residue);
            }
            std::ostringstream os;
            csv::write_columns(os, header, cols);
            store->stage("decomposition/" + safe_name(ts.name) + ".csv", os.str());
        }
        if (!use) sd.components.clear();
    }
    out.warmup = trailing ? config.decomposition.window - 1 : 0;
    return out;
}

std::vector<TimeSeries> raw_inputs(const PipelineConfig& config, const Dataset& data) {
    std::vector<TimeSeries> raw = data.train;
    if (!config.time_of_day) return raw;
    const auto& base = data.target_train();
    if (std::abs(base.step - 3600.0) > 1e-6)
        throw DataError("time_of_day needs hourly sampling (step 3600 s), got step " + std::to_string(base.step));
    TimeSeries s{{}, base.start_time, base.step, "tod_sin"}, c{{}, base.start_time, base.step, "tod_cos"};
    const double two_pi = 2.0 * 3.14159265358979323846;
    for (std::size_t i = 0; i < base.size(); ++i) {
        const double hour = std::fmod(base.time_at(i) / 3600.0, 24.0);
        s.values.push_back(std::sin(two_pi * hour / 24.0));
        c.values.push_back(std::cos(two_pi * hour / 24.0));
    }
    raw.push_back(std::move(s));
    raw.push_back(std::move(c));
    return raw;
}

features::FeatureMatrix design_matrix(const PipelineConfig& config, const Dataset& data,
                                      const Decomposition& decomposition) {
    const auto comps = decomposition.components();
    const auto raw = raw_inputs(config, data);
    auto m = features::build_matrix(comps, raw, data.target_train().values, config.lags, config.horizons);
    const std::size_t max_lag = *std::max_element(config.lags.begin(), config.lags.end());
    const std::size_t min_lag = *std::min_element(config.lags.begin(), config.lags.end());
    std::size_t lo = decomposition.warmup + max_lag;
    std::size_t hi = std::numeric_limits<std::size_t>::max();  // exclusive bound on row time
    if (config.decomposition.drop_edge_rows)
        for (const auto& c : comps) {
            lo = std::max(lo, c.valid_begin + max_lag);
            hi = std::min(hi, c.valid_end + min_lag);
        }
    std::vector<std::size_t> keep;
    for (std::size_t r = 0; r < m.rows(); ++r)
        if (m.row_time_index[r] >= lo && m.row_time_index[r] < hi) keep.push_back(r);
    if (keep.size() == m.rows()) return m;
    return m.select_rows(keep);
}

forest::ImportanceReport run_rank(const PipelineConfig& config, const features::FeatureMatrix& matrix,
                                  ArtifactStore* store) {
    if (matrix.rows() == 0 || matrix.cols() == 0) throw DataError("feature matrix has no rows to rank on");
    const Matrix X = matrix.to_matrix();
    const std::size_t p = matrix.cols();
    forest::Importance rf{std::vector<double>(p, 0.0), std::vector<double>(p, 0.0)};
    forest::Importance bt = rf;
    auto merge = [](forest::Importance& into, const forest::Importance& from) {
        for (std::size_t j = 0; j < into.raw.size(); ++j) {
            into.raw[j] = std::max(into.raw[j], from.raw[j]);
            into.normalized[j] = std::max(into.normalized[j], from.normalized[j]);
        }
    };
    for (std::size_t h : config.ranking_horizons()) {
        const auto& y = matrix.targets.at(h);
        forest::ForestParams rp = config.importance.rf;
        rp.seed = derive_seed(derive_seed(config.seed, 101), h);
        forest::BoostParams bp = config.importance.bt;
        bp.seed = derive_seed(derive_seed(config.seed, 102), h);
        merge(rf, forest::importance(forest::fit_random_forest(X, y, rp)));
        merge(bt, forest::importance(forest::fit_gbt(X, y, bp)));
    }
    auto report = forest::make_report(matrix.labels(), std::move(rf), std::move(bt));
    if (store) {
        std::ostringstream os;
        forest::write_csv(os, report);
        store->stage("importance.csv", os.str());
    }
    return report;
}

// ---- models ----

std::vector<std::size_t> fold_boundaries(std::size_t rows, std::size_t folds) {
    if (folds < 2) throw UsageError("cross-validation needs at least 2 folds");
    if (rows < folds)
        throw DataError("cross-validation needs at least " + std::to_string(folds) + " rows, got " +
                        std::to_string(rows));
    std::vector<std::size_t> b(folds + 1);
    for (std::size_t k = 0; k <= folds; ++k) b[k] = k * rows / folds;
    return b;
}

void FeatureScaling::apply(Matrix& X) const {
    if (X.cols() != columns.size()) throw DataError("feature scaling does not match the matrix width");
    for (std::size_t r = 0; r < X.rows(); ++r)
        for (std::size_t c = 0; c < X.cols(); ++c) X(r, c) = columns[c].apply(X(r, c));
}

std::vector<double> FeatureScaling::apply(std::vector<double> row) const {
    if (row.size() != columns.size()) throw DataError("feature scaling does not match the row width");
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = columns[c].apply(row[c]);
    return row;
}

FeatureScaling fit_scaling(const Matrix& X) {
    FeatureScaling s;
    for (std::size_t c = 0; c < X.cols(); ++c) {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (std::size_t r = 0; r < X.rows(); ++r) {
            lo = std::min(lo, X(r, c));
            hi = std::max(hi, X(r, c));
        }
        if (X.rows() == 0) lo = hi = 0.0;
        // a constant column maps to zero rather than failing
        s.columns.push_back({NormKind::minmax, lo, hi > lo ? hi - lo : 1.0});
    }
    return s;
}

HorizonModel fit_model(ModelKind kind, const HyperParams& params, const Matrix& X, std::span<const double> y,
                       std::size_t horizon, std::uint64_t seed, const NormParams& norm) {
    check_params(kind, params);
    HorizonModel m{horizon, kind, params, nlohmann::json::object()};
    switch (kind) {
        case ModelKind::svr: {
            std::vector<double> yn(y.begin(), y.end());
            for (auto& v : yn) v = norm.apply(v);
            m.state = svr::to_json(svr::fit_svr(X, yn, svr_params(params), norm));
            break;
        }
        case ModelKind::rbf: {
            std::vector<double> yn(y.begin(), y.end());
            for (auto& v : yn) v = norm.apply(v);
            rbfnet::RbfParams rp;
            rp.k = param_count(params, "k");
            rp.ridge = param_real(params, "ridge");
            rp.width_scale = param_real(params, "width_scale");
            rp.seed = seed;
            m.state = rbfnet::to_json(rbfnet::fit_rbf(X, yn, rp, norm));
            break;
        }
        case ModelKind::persistence: break;
        case ModelKind::exp_smoothing: m.state = {{"alpha", param_real(params, "alpha")}}; break;
    }
    return m;
}

std::vector<double> predict_model(const HorizonModel& model, const Matrix& X, std::span<const std::size_t> origins,
                                  std::span<const double> history) {
    switch (model.kind) {
        case ModelKind::svr: return svr::predict_svr(svr::svr_from_json(model.state), X);
        case ModelKind::rbf: return rbfnet::predict_rbf(rbfnet::rbf_from_json(model.state), X);
        case ModelKind::persistence:
        case ModelKind::exp_smoothing: {
            std::vector<double> level(history.begin(), history.end());
            if (model.kind == ModelKind::exp_smoothing)
                level = metrics::smoothing_levels(history, model.state.at("alpha").get<double>());
            std::vector<double> out;
            out.reserve(origins.size());
            for (std::size_t t : origins) {
                if (t >= level.size()) throw DataError("forecast origin beyond the available history");
                out.push_back(level[t]);
            }
            return out;
        }
    }
    return {};
}

CvResult run_cv(const PipelineConfig& config, const features::FeatureMatrix& matrix, const ModelSpec& spec,
                std::size_t horizon, std::span<const double> history, const NormParams& norm) {
    const auto grid = spec.grid();
    if (grid.empty()) throw UsageError("model '" + spec.name + "' has an empty grid");
    const std::size_t n = matrix.rows();
    const auto bounds = fold_boundaries(n, config.cv_folds);
    const std::size_t folds = config.cv_folds;
    const Matrix X = matrix.to_matrix();
    const auto& y = matrix.targets.at(horizon);

    std::vector<double> fold_mae(grid.size() * folds);
    parallel_for(grid.size() * folds, [&](std::size_t job) {
        const std::size_t g = job / folds, k = job % folds;
        std::vector<std::size_t> tr, va;
        for (std::size_t r = 0; r < n; ++r) (r >= bounds[k] && r < bounds[k + 1] ? va : tr).push_back(r);
        Matrix Xtr = X.select_rows(tr), Xva = X.select_rows(va);
        const auto scaling = fit_scaling(Xtr);
        scaling.apply(Xtr);
        scaling.apply(Xva);
        std::vector<double> ytr, yva;
        std::vector<std::size_t> origins;
        for (std::size_t r : tr) ytr.push_back(y[r]);
        for (std::size_t r : va) {
            yva.push_back(y[r]);
            origins.push_back(matrix.row_time_index[r]);
        }
        const std::uint64_t seed = derive_seed(derive_seed(config.seed, 201 + g), horizon * 1000 + k);
        const auto model = fit_model(spec.kind, grid[g], Xtr, ytr, horizon, seed, norm);
        fold_mae[job] = mean_abs_error(yva, predict_model(model, Xva, origins, history));
    });

    CvResult out;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double s = 0.0;
        for (std::size_t k = 0; k < folds; ++k) s += fold_mae[g * folds + k];
        out.table.push_back({grid[g], s / static_cast<double>(folds)});
        if (out.table[g].mean_mae < out.table[out.best].mean_mae) out.best = g;
    }
    return out;
}

// ---- bundle ----

std::string model_path(const std::string& model, std::size_t horizon) {
    return "models/" + safe_name(model) + "_h" + std::to_string(horizon) + ".json";
}

nlohmann::json to_json(const HorizonModel& m) {
    return {{"format", "hhtfc.horizon_model"}, {"version", 1},          {"horizon", m.horizon},
            {"type", to_string(m.kind)},       {"params", params_json(m.params)}, {"state", m.state}};
}

HorizonModel horizon_model_from_json(const nlohmann::json& doc) {
    try {
        if (doc.at("format").get<std::string>() != "hhtfc.horizon_model" || doc.at("version").get<int>() != 1)
            throw DataError("unsupported horizon model document");
        HorizonModel m;
        m.horizon = doc.at("horizon").get<std::size_t>();
        m.kind = model_kind_from_string(doc.at("type").get<std::string>());
        m.params = params_from(doc.at("params"));
        m.state = doc.at("state");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed horizon model: ") + e.what());
    }
}

nlohmann::json to_json(const ModelBundle& b) {
    nlohmann::json feats = nlohmann::json::array();
    for (const auto& f : b.features)
        feats.push_back({{"label", f.spec.label()},
                         {"source", f.spec.source},
                         {"kind", features::to_string(f.spec.kind)},
                         {"index", f.spec.index},
                         {"lag", f.spec.lag},
                         {"scaling", norm_json(f.scaling)}});
    nlohmann::json models = nlohmann::json::array();
    for (const auto& m : b.models) {
        nlohmann::json hs = nlohmann::json::array();
        for (const auto& h : m.horizons)
            hs.push_back({{"horizon", h.horizon}, {"params", params_json(h.params)}, {"file", model_path(m.name, h.horizon)}});
        nlohmann::json cv = nlohmann::json::array();
        for (const auto& [h, r] : m.cv) {
            nlohmann::json table = nlohmann::json::array();
            for (const auto& row : r.table) table.push_back({{"params", params_json(row.params)}, {"mean_mae", row.mean_mae}});
            cv.push_back({{"horizon", h}, {"best", r.best}, {"table", table}});
        }
        models.push_back({{"name", m.name}, {"type", to_string(m.kind)}, {"horizons", hs}, {"cv", cv}});
    }
    const auto& imp = b.importance;
    return {{"version", b.version},
            {"fingerprint", b.fingerprint},
            {"features", feats},
            {"prune_fallback", b.prune_fallback},
            {"importance",
             {{"features", imp.features},
              {"rf_raw", imp.rf.raw},
              {"rf", imp.rf.normalized},
              {"bt_raw", imp.bt.raw},
              {"bt", imp.bt.normalized},
              {"combined", imp.combined}}},
            {"target_norm", norm_json(b.target_norm)},
            {"models", models}};
}

void save_bundle(ArtifactStore& store, const ModelBundle& bundle) {
    for (const auto& m : bundle.models)
        for (const auto& h : m.horizons) store.stage(model_path(m.name, h.horizon), to_json(h).dump(1) + "\n");
    store.stage("models/bundle.json", to_json(bundle).dump(1) + "\n");
}

ModelBundle load_bundle(const ArtifactStore& store, const PipelineConfig& config) {
    if (!store.exists("models/bundle.json"))
        throw DataError("no trained bundle in workspace " + store.root().string() + "; run 'train' first");
    ModelBundle b;
    try {
        const auto doc = nlohmann::json::parse(store.read("models/bundle.json"));
        b.version = doc.at("version").get<std::string>();
        if (b.version != kBundleVersion) throw DataError("unsupported bundle version '" + b.version + "'");
        b.fingerprint = doc.at("fingerprint").get<std::string>();
        const std::string expected = fingerprint(config);
        if (b.fingerprint != expected)
            throw DataError("bundle fingerprint " + b.fingerprint + " does not match the config (" + expected +
                            "); rerun 'train'");
        for (const auto& f : doc.at("features")) {
            RetainedFeature rf;
            rf.spec.source = f.at("source").get<std::string>();
            rf.spec.kind = component_kind_from_string(f.at("kind").get<std::string>());
            rf.spec.index = f.at("index").get<std::size_t>();
            rf.spec.lag = f.at("lag").get<std::size_t>();
            rf.scaling = norm_from(f.at("scaling"));
            b.features.push_back(rf);
        }
        b.prune_fallback = doc.at("prune_fallback").get<bool>();
        const auto& imp = doc.at("importance");
        b.importance.features = imp.at("features").get<std::vector<std::string>>();
        b.importance.rf = {imp.at("rf_raw").get<std::vector<double>>(), imp.at("rf").get<std::vector<double>>()};
        b.importance.bt = {imp.at("bt_raw").get<std::vector<double>>(), imp.at("bt").get<std::vector<double>>()};
        b.importance.combined = imp.at("combined").get<std::vector<double>>();
        b.target_norm = norm_from(doc.at("target_norm"));
        for (const auto& m : doc.at("models")) {
            TrainedModel tm;
            tm.name = m.at("name").get<std::string>();
            tm.kind = model_kind_from_string(m.at("type").get<std::string>());
            for (const auto& h : m.at("horizons"))
                tm.horizons.push_back(
                    horizon_model_from_json(nlohmann::json::parse(store.read(h.at("file").get<std::string>()))));
            for (const auto& c : m.at("cv")) {
                CvResult r;
                r.best = c.at("best").get<std::size_t>();
                for (const auto& row : c.at("table"))
                    r.table.push_back({params_from(row.at("params")), row.at("mean_mae").get<double>()});
                tm.cv[c.at("horizon").get<std::size_t>()] = std::move(r);
            }
            b.models.push_back(std::move(tm));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed bundle: ") + e.what());
    }
    return b;
}

ModelBundle run_train(const PipelineConfig& config, const Dataset& data, ArtifactStore* store) {
    const auto decomposition = run_decompose(config, data, store);
    const auto full = design_matrix(config, data, decomposition);

    ModelBundle bundle;
    bundle.fingerprint = fingerprint(config);
    const bool learned = std::any_of(config.models.begin(), config.models.end(), [](const ModelSpec& m) {
        return m.kind == ModelKind::svr || m.kind == ModelKind::rbf;
    });
    // Baseline-only configs need neither ranking nor features.
    features::FeatureMatrix matrix;
    if (learned) {
        bundle.importance = run_rank(config, full, store);
        auto pruned = features::prune_by_importance(full, bundle.importance.combined, config.importance.threshold);
        bundle.prune_fallback = pruned.fallback;
        matrix = std::move(pruned.matrix);
    } else {
        matrix = full.select_columns(std::vector<std::size_t>{});
    }
    Matrix X = matrix.to_matrix();
    const auto scaling = fit_scaling(X);
    scaling.apply(X);
    for (std::size_t c = 0; c < matrix.cols(); ++c) bundle.features.push_back({matrix.columns[c].spec, scaling.columns[c]});

    const auto& history = data.target_train().values;
    if (learned) bundle.target_norm = NormParams::fit(history, config.target_norm);

    for (std::size_t mi = 0; mi < config.models.size(); ++mi) {
        const auto& spec = config.models[mi];
        TrainedModel tm{spec.name, spec.kind, std::vector<HorizonModel>(config.horizons.size()), {}};
        const auto grid = spec.grid();
        std::vector<CvResult> cvs(config.horizons.size());
        parallel_for(config.horizons.size(), [&](std::size_t hi) {
            const std::size_t h = config.horizons[hi];
            std::size_t choice = 0;
            if (grid.size() > 1) {
                cvs[hi] = run_cv(config, matrix, spec, h, history, bundle.target_norm);
                choice = cvs[hi].best;
            }
            const std::uint64_t seed = derive_seed(derive_seed(config.seed, 301 + mi), h);
            tm.horizons[hi] = fit_model(spec.kind, grid[choice], X, matrix.targets.at(h), h, seed, bundle.target_norm);
        });
        if (grid.size() > 1)
            for (std::size_t hi = 0; hi < config.horizons.size(); ++hi) tm.cv[config.horizons[hi]] = std::move(cvs[hi]);
        bundle.models.push_back(std::move(tm));
    }
    if (store) save_bundle(*store, bundle);
    return bundle;
}

// ---- forecasting and evaluation ----

std::vector<ForecastSeries> run_forecast(const PipelineConfig& config, const ModelBundle& bundle, const Dataset& data,
                                         std::size_t origin_begin, std::size_t origin_end, ArtifactStore* store) {
    if (origin_end <= origin_begin) throw UsageError("forecast origin range is empty");
    const auto decomposition = run_decompose(config, data, nullptr);
    auto sources = decomposition.components();
    for (const auto& ts : raw_inputs(config, data)) sources.push_back(features::raw_component(ts));

    const std::size_t n = data.target_train().size();
    const std::size_t max_lag = *std::max_element(config.lags.begin(), config.lags.end());
    const std::size_t first = decomposition.warmup + max_lag;
    if (origin_begin < first || origin_end > n)
        throw DataError("forecast origins [" + std::to_string(origin_begin) + ", " + std::to_string(origin_end) +
                        ") fall outside feature coverage [" + std::to_string(first) + ", " + std::to_string(n) + ")");

    std::vector<features::ColumnSpec> specs;
    FeatureScaling scaling;
    for (const auto& f : bundle.features) {
        specs.push_back(f.spec);
        scaling.columns.push_back(f.scaling);
    }
    std::vector<std::size_t> origins(origin_end - origin_begin);
    std::iota(origins.begin(), origins.end(), origin_begin);
    Matrix X(origins.size(), specs.size());
    for (std::size_t r = 0; r < origins.size(); ++r) {
        const auto row = scaling.apply(features::feature_row(sources, specs, origins[r]));
        for (std::size_t c = 0; c < row.size(); ++c) X(r, c) = row[c];
    }

    const auto& history = data.target_train().values;
    std::vector<ForecastSeries> out;
    for (const auto& m : bundle.models)
        for (const auto& h : m.horizons) out.push_back({m.name, h.horizon, origins, {}});
    std::size_t j = 0;
    for (const auto& m : bundle.models)
        for (const auto& h : m.horizons) out[j++].values = predict_model(h, X, origins, history);

    if (store) {
        const auto& full = data.full[data.target].values;
        for (const auto& m : bundle.models) {
            std::ostringstream os;
            os << "origin_index,horizon,target_index,forecast,actual\n";
            for (const auto& fs_ : out) {
                if (fs_.model != m.name) continue;
                for (std::size_t r = 0; r < fs_.origins.size(); ++r) {
                    const std::size_t t = fs_.origins[r] + fs_.horizon;
                    os << fs_.origins[r] << ',' << fs_.horizon << ',' << t << ',' << csv::format_double(fs_.values[r])
                       << ',' << (t < full.size() ? csv::format_double(full[t]) : "") << '\n';
                }
            }
            store->stage("forecasts/" + safe_name(m.name) + ".csv", os.str());
        }
    }
    return out;
}

Evaluation run_evaluate(const PipelineConfig& config, const ModelBundle& bundle, const Dataset& data,
                        ArtifactStore* store) {
    std::vector<std::size_t> hs = config.horizons;
    std::sort(hs.begin(), hs.end());
    const auto& test = data.target_test().values;
    if (test.size() < hs.back())
        throw DataError("test range of " + std::to_string(test.size()) + " samples is shorter than horizon " +
                        std::to_string(hs.back()));
    const std::size_t origin = data.target_train().size() - 1;
    const auto fc = run_forecast(config, bundle, data, origin, origin + 1, nullptr);

    Evaluation ev;
    for (std::size_t h : hs) ev.actual.push_back(test[h - 1]);
    const auto intervals = metrics::block_intervals(hs.size(), config.interval_block, config.interval_unit);
    for (const auto& m : bundle.models) {
        std::vector<double> pred;
        for (std::size_t h : hs)
            for (const auto& f : fc)
                if (f.model == m.name && f.horizon == h) pred.push_back(f.values.front());
        if (pred.size() != hs.size()) throw DataError("bundle model '" + m.name + "' lacks configured horizons");
        ev.reports.push_back({m.name, metrics::compute(ev.actual, pred, intervals)});
        ev.forecasts.push_back(std::move(pred));
    }
    if (store) {
        std::ostringstream os;
        os << "horizon,target_index,actual";
        for (const auto& m : bundle.models) os << ',' << m.name;
        os << '\n';
        for (std::size_t i = 0; i < hs.size(); ++i) {
            os << hs[i] << ',' << origin + hs[i] << ',' << csv::format_double(ev.actual[i]);
            for (const auto& f : ev.forecasts) os << ',' << csv::format_double(f[i]);
            os << '\n';
        }
        store->stage("forecasts/holdout.csv", os.str());
        store->stage("metrics.json", to_json(ev, bundle.fingerprint).dump(1) + "\n");
    }
    return ev;
}

nlohmann::json to_json(const Evaluation& ev, const std::string& fp) {
    nlohmann::json models = nlohmann::json::array();
    for (const auto& r : ev.reports) models.push_back({{"name", r.model}, {"metrics", metrics::to_json(r.report)}});
    return {{"fingerprint", fp}, {"points", ev.actual.size()}, {"models", models}};
}

std::vector<metrics::NamedReport> reports_from_json(const nlohmann::json& doc) {
    std::vector<metrics::NamedReport> out;
    try {
        for (const auto& m : doc.at("models"))
            out.push_back({m.at("name").get<std::string>(), metrics::report_from_json(m.at("metrics"))});
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed metrics document: ") + e.what());
    }
    return out;
}

}  // namespace hhtfc::pipeline
