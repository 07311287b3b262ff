#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hhtfc/matrix.hpp"

namespace hhtfc::forest {

/// Flat-array node. Split nodes send rows with x[feature] < cutpoint left.
struct TreeNode {
    int feature = -1;  ///< -1 marks a leaf
    double cutpoint = 0.0;
    int left = -1;
    int right = -1;
    std::size_t n_samples = 0;
    double impurity = 0.0;  ///< variance of the node's targets
    double decrease = 0.0;  ///< i(t) - p_L i(t_L) - p_R i(t_R)
    double value = 0.0;     ///< mean target; the prediction at leaves

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes;  ///< nodes[0] is the root
    std::size_t n_features = 0;

    double predict(std::span<const double> row) const;
    std::size_t depth() const;
};

struct TreeParams {
    std::size_t max_depth = 0;            ///< 0: unlimited
    std::size_t min_leaf = 1;
    std::size_t feature_subset_size = 0;  ///< 0: all features at every node
    std::uint64_t seed = 0;
};

/// Greedy top-down regression tree with variance impurity. Candidate
/// cutpoints are midpoints of consecutive distinct values; ties keep the
/// lowest feature index, then the lowest cutpoint.
Tree fit_tree(const Matrix& X, std::span<const double> y, const TreeParams& params);

/// Same, restricted to the given row indices (duplicates act as weights).
Tree fit_tree(const Matrix& X, std::span<const double> y, std::span<const std::size_t> rows,
              const TreeParams& params);

enum class EnsembleKind { random_forest, gradient_boost };

struct ForestModel {
    EnsembleKind kind = EnsembleKind::random_forest;
    std::vector<Tree> trees;
    double shrinkage = 1.0;        ///< gradient boosting only
    double base_prediction = 0.0;  ///< gradient boosting only
    std::uint64_t seed = 0;
    std::size_t n_features = 0;
    /// Training MSE after each boosting round (gradient boosting only).
    std::vector<double> train_loss;
};

struct ForestParams {
    std::size_t n_trees = 100;
    std::size_t mtry = 0;  ///< 0: ceil(p / 3)
    std::size_t min_leaf = 5;
    std::size_t max_depth = 0;
    bool bootstrap = true;
    std::uint64_t seed = 0;
};

struct BoostParams {
    std::size_t n_rounds = 200;
    double shrinkage = 0.1;
    std::size_t max_depth = 3;
    std::size_t min_leaf = 1;
    std::size_t feature_subset_size = 0;
    std::uint64_t seed = 0;
};

ForestModel fit_random_forest(const Matrix& X, std::span<const double> y, const ForestParams& params);
ForestModel fit_gbt(const Matrix& X, std::span<const double> y, const BoostParams& params);

std::vector<double> predict(const ForestModel& model, const Matrix& rows);
double predict_one(const ForestModel& model, std::span<const double> row);

/// Mean-decrease-impurity vector of one tree: sum over its splits on each
/// feature of p(t) * decrease, with p(t) = N_t / N_root.
std::vector<double> tree_importance(const Tree& tree);

struct Importance {
    std::vector<double> raw;         ///< averaged over trees, >= 0
    std::vector<double> normalized;  ///< raw / max(raw); all zero when no split exists
};

Importance importance(const ForestModel& model);

/// Per-feature importance of both ensembles and their elementwise maximum.
struct ImportanceReport {
    std::vector<std::string> features;
    Importance rf;
    Importance bt;
    std::vector<double> combined;
};

ImportanceReport make_report(std::vector<std::string> features, Importance rf, Importance bt);

/// Columns feature, rf_importance, bt_importance, combined.
void write_csv(std::ostream& os, const ImportanceReport& report);

}  // namespace hhtfc::forest
