#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hhtfc/emd.hpp"
#include "hhtfc/features.hpp"
#include "hhtfc/forest.hpp"
#include "hhtfc/metrics.hpp"
#include "hhtfc/series_io.hpp"
#include "hhtfc/spectral.hpp"
#include "json.hpp"

namespace hhtfc::pipeline {

inline constexpr int kConfigSchemaVersion = 1;
inline constexpr const char* kBundleVersion = "hhtfc.bundle/1";

enum class SeriesRole { target, exogenous };

struct InputSpec {
    std::filesystem::path path;  ///< relative paths resolve against the config file's directory
    std::string column;
    SeriesRole role = SeriesRole::target;
    std::string name;  ///< defaults to the column name
    std::string timestamp_column;
    GapPolicy gap_policy = GapPolicy::interpolate_max3;
};

enum class DecompositionMode {
    full,      ///< one decomposition of the whole training range
    trailing,  ///< causal: each time step read from a decomposition ending there
};

struct DecompositionSpec {
    DecompositionMode mode = DecompositionMode::full;
    std::size_t window = 240;  ///< trailing mode only
    bool include_residue = false;
    bool exogenous_imfs = true;
    /// Drop training rows that read a component outside its Hilbert valid range.
    bool drop_edge_rows = false;
};

struct ImportanceSpec {
    double threshold = 0.3;
    /// Horizons the rankers are fitted on; empty means min(horizons). With
    /// several, each importance vector is the elementwise max across them.
    std::vector<std::size_t> rank_horizons;
    forest::ForestParams rf;
    forest::BoostParams bt;
};

enum class ModelKind { svr, rbf, persistence, exp_smoothing };

/// One grid point; keys depend on the model kind (C, epsilon, kernel, gamma,
/// degree, coef0 | k, ridge, width_scale | alpha).
using HyperParams = std::map<std::string, nlohmann::json>;

struct GridAxis {
    std::string key;
    std::vector<nlohmann::json> values;
};

struct ModelSpec {
    std::string name;
    ModelKind kind = ModelKind::svr;
    std::vector<GridAxis> axes;  ///< declaration order; unset keys take defaults

    /// Cartesian expansion, last axis varying fastest, defaults filled in.
    std::vector<HyperParams> grid() const;
};

struct PipelineConfig {
    int schema_version = kConfigSchemaVersion;
    std::vector<InputSpec> inputs;
    emd::EmdConfig emd;
    DecompositionSpec decomposition;
    std::vector<std::size_t> lags{0, 1, 2, 3, 4, 5, 6};
    /// Adds sin/cos of the hour of day as raw inputs (hourly sampling only).
    bool time_of_day = false;
    std::vector<std::size_t> horizons{1};
    ImportanceSpec importance;
    NormKind target_norm = NormKind::zscore;
    std::vector<ModelSpec> models;
    std::size_t cv_folds = 10;
    std::size_t holdout = 48;
    std::size_t interval_block = 24;  ///< sub-interval length of the evaluation table
    std::string interval_unit = "h";
    std::uint64_t seed = 0;
    std::filesystem::path base_dir;  ///< not serialized; anchors relative input paths

    void validate() const;
    const InputSpec& target() const;
    std::vector<std::size_t> ranking_horizons() const;
};

PipelineConfig config_from_json(const nlohmann::ordered_json& doc, const std::filesystem::path& base_dir = {});
/// Canonical document; also the input of the fingerprint.
nlohmann::ordered_json to_json(const PipelineConfig& config);
PipelineConfig load_config(const std::filesystem::path& path);
/// FNV-1a 64 of the canonical config document, hex encoded.
std::string fingerprint(const PipelineConfig& config);

const char* to_string(ModelKind kind);
const char* to_string(DecompositionMode mode);

/// Input series split into the training range and the holdout.
struct Dataset {
    std::vector<TimeSeries> full;
    std::vector<TimeSeries> train;
    std::vector<TimeSeries> test;
    std::size_t target = 0;  ///< position of the target series

    const TimeSeries& target_train() const { return train[target]; }
    const TimeSeries& target_test() const { return test[target]; }
};

Dataset load_dataset(const PipelineConfig& config);

struct SeriesDecomposition {
    std::string name;
    SeriesRole role = SeriesRole::target;
    emd::EmdResult emd;                            ///< full mode
    std::vector<spectral::InstAttributes> attrs;  ///< full mode
    std::vector<features::ComponentSeries> components;
};

struct Decomposition {
    std::vector<SeriesDecomposition> series;
    std::size_t warmup = 0;  ///< first time index every component is defined at

    std::vector<features::ComponentSeries> components() const;
};

/// Files staged in memory and moved into the workspace only on commit, so a
/// failing command leaves earlier artifacts untouched.
class ArtifactStore {
public:
    explicit ArtifactStore(std::filesystem::path root) : root_(std::move(root)) {}
    const std::filesystem::path& root() const { return root_; }
    void stage(const std::string& relative, std::string content);
    /// Writes each staged file to a temporary sibling, then renames it in place.
    std::vector<std::filesystem::path> commit();
    std::string read(const std::string& relative) const;
    bool exists(const std::string& relative) const;

private:
    std::filesystem::path root_;
    std::map<std::string, std::string> staged_;
};

Decomposition run_decompose(const PipelineConfig& config, const Dataset& data, ArtifactStore* store = nullptr);

/// Raw inputs of the design matrix: every training series, then the
/// time-of-day pair when enabled.
std::vector<TimeSeries> raw_inputs(const PipelineConfig& config, const Dataset& data);

/// Unpruned design matrix over the training range, warm-up rows removed.
features::FeatureMatrix design_matrix(const PipelineConfig& config, const Dataset& data,
                                      const Decomposition& decomposition);

forest::ImportanceReport run_rank(const PipelineConfig& config, const features::FeatureMatrix& matrix,
                                  ArtifactStore* store = nullptr);

/// Contiguous time-ordered fold boundaries: fold k holds rows [b[k], b[k+1]).
std::vector<std::size_t> fold_boundaries(std::size_t rows, std::size_t folds);

struct CvRow {
    HyperParams params;
    double mean_mae = 0.0;
};

struct CvResult {
    std::size_t best = 0;
    std::vector<CvRow> table;
};

/// Per-column min-max scaling fitted on the training rows.
struct FeatureScaling {
    std::vector<NormParams> columns;
    void apply(Matrix& X) const;
    std::vector<double> apply(std::vector<double> row) const;
};

FeatureScaling fit_scaling(const Matrix& X);

/// A trained per-horizon predictor over scaled feature rows.
struct HorizonModel {
    std::size_t horizon = 0;
    ModelKind kind = ModelKind::svr;
    HyperParams params;
    nlohmann::json state;  ///< serialized SVR/RBF model or baseline parameters
};

/// Fits one model on scaled rows X and targets y in signal units. Learned
/// models see y through `norm`; baselines ignore X and y.
HorizonModel fit_model(ModelKind kind, const HyperParams& params, const Matrix& X, std::span<const double> y,
                       std::size_t horizon, std::uint64_t seed, const NormParams& norm);

/// Predictions in signal units for scaled feature rows X. Baselines read the
/// target history at each row's origin time instead.
std::vector<double> predict_model(const HorizonModel& model, const Matrix& X, std::span<const std::size_t> origins,
                                  std::span<const double> history);

CvResult run_cv(const PipelineConfig& config, const features::FeatureMatrix& matrix, const ModelSpec& spec,
                std::size_t horizon, std::span<const double> history, const NormParams& norm);

struct RetainedFeature {
    features::ColumnSpec spec;
    NormParams scaling;
};

struct TrainedModel {
    std::string name;
    ModelKind kind = ModelKind::svr;
    std::vector<HorizonModel> horizons;
    std::map<std::size_t, CvResult> cv;  ///< empty when the grid has a single point
};

struct ModelBundle {
    std::string version = kBundleVersion;
    std::string fingerprint;
    std::vector<RetainedFeature> features;
    bool prune_fallback = false;
    forest::ImportanceReport importance;
    NormParams target_norm = NormParams::identity();
    std::vector<TrainedModel> models;
};

/// Workspace path of one per-horizon model file.
std::string model_path(const std::string& model, std::size_t horizon);

/// Manifest document; per-horizon models are referenced by path.
nlohmann::json to_json(const ModelBundle& bundle);
nlohmann::json to_json(const HorizonModel& model);
HorizonModel horizon_model_from_json(const nlohmann::json& doc);

ModelBundle run_train(const PipelineConfig& config, const Dataset& data, ArtifactStore* store = nullptr);
void save_bundle(ArtifactStore& store, const ModelBundle& bundle);
/// Reads models/bundle.json and its referenced models; the fingerprint must match `config`.
ModelBundle load_bundle(const ArtifactStore& store, const PipelineConfig& config);

struct ForecastSeries {
    std::string model;
    std::size_t horizon = 0;
    std::vector<std::size_t> origins;
    std::vector<double> values;
};

/// Direct forecasts for every model and horizon from each origin time index in
/// [origin_begin, origin_end) of the training range.
std::vector<ForecastSeries> run_forecast(const PipelineConfig& config, const ModelBundle& bundle,
                                         const Dataset& data, std::size_t origin_begin, std::size_t origin_end,
                                         ArtifactStore* store = nullptr);

struct Evaluation {
    std::vector<metrics::NamedReport> reports;  ///< config model order
    /// Per model: forecasts for test steps 1..holdout from the last training sample.
    std::vector<std::vector<double>> forecasts;
    std::vector<double> actual;
};

Evaluation run_evaluate(const PipelineConfig& config, const ModelBundle& bundle, const Dataset& data,
                        ArtifactStore* store = nullptr);

nlohmann::json to_json(const Evaluation& evaluation, const std::string& fingerprint);
std::vector<metrics::NamedReport> reports_from_json(const nlohmann::json& doc);

}  // namespace hhtfc::pipeline
