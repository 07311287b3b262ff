#include "hhtfc/forest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <random>

#include "hhtfc/csv.hpp"
#include "hhtfc/error.hpp"
#include "hhtfc/parallel.hpp"
#include "hhtfc/seed.hpp"

namespace hhtfc::forest {

namespace {

struct NodeStats {
    double mean = 0.0;
    double impurity = 0.0;
};

NodeStats stats_of(std::span<const double> y, std::span<const std::size_t> idx) {
    NodeStats s;
    for (std::size_t i : idx) s.mean += y[i];
    s.mean /= static_cast<double>(idx.size());
    for (std::size_t i : idx) s.impurity += (y[i] - s.mean) * (y[i] - s.mean);
    s.impurity /= static_cast<double>(idx.size());
    return s;
}

/// Row indices of X sorted by each feature, shared by every tree of an ensemble.
using SortedOrder = std::vector<std::vector<std::uint32_t>>;

SortedOrder sort_columns(const Matrix& X) {
    SortedOrder order(X.cols());
    parallel_for(X.cols(), [&](std::size_t f) {
        auto& o = order[f];
        o.resize(X.rows());
        std::iota(o.begin(), o.end(), 0u);
        std::stable_sort(o.begin(), o.end(), [&](std::uint32_t a, std::uint32_t b) { return X(a, f) < X(b, f); });
    });
    return order;
}

class TreeBuilder {
public:
    TreeBuilder(const Matrix& X, std::span<const double> y, const TreeParams& p, const SortedOrder* order)
        : X_(X), y_(y), params_(p), rng_(p.seed), order_(order) {
        features_.resize(X.cols());
        std::iota(features_.begin(), features_.end(), 0);
        if (order_) multiplicity_.assign(X.rows(), 0);
    }

    Tree build(std::vector<std::size_t> rows) {
        tree_.n_features = X_.cols();
        grow(std::move(rows), 0);
        return std::move(tree_);
    }

private:
    struct Split {
        int feature = -1;
        double cutpoint = 0.0;
    };

    int grow(std::vector<std::size_t> idx, std::size_t depth) {
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        const NodeStats st = stats_of(y_, idx);
        {
            TreeNode& node = tree_.nodes.back();
            node.n_samples = idx.size();
            node.impurity = st.impurity;
            node.value = st.mean;
        }
        const bool pure = std::all_of(idx.begin(), idx.end(),
                                      [&](std::size_t i) { return y_[i] == y_[idx.front()]; });
        if (pure || (params_.max_depth > 0 && depth >= params_.max_depth) ||
            idx.size() < 2 * std::max<std::size_t>(1, params_.min_leaf))
            return id;

        const Split best = find_split(idx, st.mean);
        if (best.feature < 0) return id;

        std::vector<std::size_t> left, right;
        for (std::size_t i : idx) {
            if (X_(i, static_cast<std::size_t>(best.feature)) < best.cutpoint) left.push_back(i);
            else right.push_back(i);
        }
        idx.clear();
        idx.shrink_to_fit();
        const NodeStats ls = stats_of(y_, left);
        const NodeStats rs = stats_of(y_, right);
        const double n = static_cast<double>(left.size() + right.size());
        double decrease = st.impurity - (static_cast<double>(left.size()) / n) * ls.impurity -
                          (static_cast<double>(right.size()) / n) * rs.impurity;
        if (decrease < 0.0) decrease = 0.0;  // rounding only; a mean split never raises variance

        tree_.nodes[id].feature = best.feature;
        tree_.nodes[id].cutpoint = best.cutpoint;
        tree_.nodes[id].decrease = decrease;
        const int l = grow(std::move(left), depth + 1);
        const int r = grow(std::move(right), depth + 1);
        tree_.nodes[id].left = l;
        tree_.nodes[id].right = r;
        return id;
    }

    std::vector<std::size_t> candidate_features() {
        const std::size_t p = features_.size();
        const std::size_t k = params_.feature_subset_size;
        if (k == 0 || k >= p) return features_;
        std::vector<std::size_t> pool = features_;
        for (std::size_t i = 0; i < k; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, p - 1);
            std::swap(pool[i], pool[pick(rng_)]);
        }
        pool.resize(k);
        std::sort(pool.begin(), pool.end());
        return pool;
    }

    Split find_split(const std::vector<std::size_t>& idx, double mean) {
        const std::size_t n = idx.size();
        const std::size_t min_leaf = std::max<std::size_t>(1, params_.min_leaf);
        double total_sse = 0.0;
        for (std::size_t i : idx) total_sse += (y_[i] - mean) * (y_[i] - mean);
        // maximize S_L^2/N_L + S_R^2/N_R over centered targets
        const double tol = 1e-12 * std::max(total_sse, 1e-300);
        double best_score = -1.0;
        Split best;
        std::vector<std::pair<double, double>> col(n);
        // Large nodes walk the presorted order instead of sorting from scratch.
        const bool scan = order_ && n * static_cast<std::size_t>(std::log2(n + 1)) > X_.rows();
        if (scan)
            for (std::size_t i : idx) ++multiplicity_[i];
        for (std::size_t f : candidate_features()) {
            if (scan) {
                std::size_t j = 0;
                for (std::uint32_t r : (*order_)[f])
                    for (std::uint32_t m = multiplicity_[r]; m > 0; --m) col[j++] = {X_(r, f), y_[r] - mean};
            } else {
                for (std::size_t j = 0; j < n; ++j) col[j] = {X_(idx[j], f), y_[idx[j]] - mean};
                std::sort(col.begin(), col.end(),
                          [](const auto& a, const auto& b) { return a.first < b.first; });
            }
            if (col.front().first == col.back().first) continue;
            double total = 0.0;
            for (const auto& c : col) total += c.second;
            double left_sum = 0.0;
            for (std::size_t j = 0; j + 1 < n; ++j) {
                left_sum += col[j].second;
                if (col[j].first == col[j + 1].first) continue;
                const std::size_t nl = j + 1;
                const std::size_t nr = n - nl;
                if (nl < min_leaf || nr < min_leaf) continue;
                const double right_sum = total - left_sum;
                const double score = left_sum * left_sum / static_cast<double>(nl) +
                                     right_sum * right_sum / static_cast<double>(nr);
                if (score > best_score + tol) {
                    best_score = score;
                    const double a = col[j].first;
                    const double b = col[j + 1].first;
                    double c = a + 0.5 * (b - a);
                    if (!(c > a)) c = b;
                    best = {static_cast<int>(f), c};
                }
            }
        }
        if (scan)
            for (std::size_t i : idx) multiplicity_[i] = 0;
        return best;
    }

    const Matrix& X_;
    std::span<const double> y_;
    TreeParams params_;
    std::mt19937_64 rng_;
    std::vector<std::size_t> features_;
    const SortedOrder* order_;
    std::vector<std::uint32_t> multiplicity_;
    Tree tree_;
};

void check_training_data(const Matrix& X, std::span<const double> y) {
    if (X.rows() == 0 || X.cols() == 0) throw DataError("empty training data");
    if (X.rows() != y.size()) throw DataError("feature rows and targets differ in length");
    for (double v : y)
        if (!std::isfinite(v)) throw DataError("non-finite training target");
}

Tree build_tree(const Matrix& X, std::span<const double> y, std::span<const std::size_t> rows,
                const TreeParams& params, const SortedOrder* order) {
    TreeBuilder builder(X, y, params, order);
    return builder.build(std::vector<std::size_t>(rows.begin(), rows.end()));
}

}  // namespace

double Tree::predict(std::span<const double> row) const {
    if (row.size() != n_features) throw DataError("row dimension does not match the tree");
    std::size_t id = 0;
    while (!nodes[id].is_leaf()) {
        const TreeNode& nd = nodes[id];
        id = static_cast<std::size_t>(row[static_cast<std::size_t>(nd.feature)] < nd.cutpoint ? nd.left
                                                                                           : nd.right);
    }
    return nodes[id].value;
}

std::size_t Tree::depth() const {
    std::vector<std::size_t> d(nodes.size(), 0);
    std::size_t best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        best = std::max(best, d[i]);
        if (!nodes[i].is_leaf()) {
            d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
            d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
        }
    }
    return best;
}

Tree fit_tree(const Matrix& X, std::span<const double> y, std::span<const std::size_t> rows,
              const TreeParams& params) {
    check_training_data(X, y);
    if (rows.empty()) throw DataError("empty training data");
    return build_tree(X, y, rows, params, nullptr);
}

Tree fit_tree(const Matrix& X, std::span<const double> y, const TreeParams& params) {
    std::vector<std::size_t> rows(X.rows());
    std::iota(rows.begin(), rows.end(), 0);
    return fit_tree(X, y, rows, params);
}

ForestModel fit_random_forest(const Matrix& X, std::span<const double> y, const ForestParams& params) {
    if (params.n_trees == 0) throw UsageError("random forest needs n_trees >= 1");
    check_training_data(X, y);
    if (X.rows() < 2) throw DataError("random forest needs at least 2 rows");
    const std::size_t p = X.cols();
    const std::size_t mtry = params.mtry == 0 ? (p + 2) / 3 : std::min(params.mtry, p);

    ForestModel model;
    model.kind = EnsembleKind::random_forest;
    model.seed = params.seed;
    model.n_features = p;
    model.trees.resize(params.n_trees);
    const SortedOrder order = sort_columns(X);
    parallel_for(params.n_trees, [&](std::size_t t) {
        const std::uint64_t tree_seed = derive_seed(params.seed, t);
        std::vector<std::size_t> rows(X.rows());
        if (params.bootstrap) {
            std::mt19937_64 rng(tree_seed);
            std::uniform_int_distribution<std::size_t> pick(0, X.rows() - 1);
            for (auto& r : rows) r = pick(rng);
        } else {
            std::iota(rows.begin(), rows.end(), 0);
        }
        TreeParams tp;
        tp.max_depth = params.max_depth;
        tp.min_leaf = params.min_leaf;
        tp.feature_subset_size = mtry;
        tp.seed = derive_seed(tree_seed, 1);
        model.trees[t] = build_tree(X, y, rows, tp, &order);
    });
    return model;
}

ForestModel fit_gbt(const Matrix& X, std::span<const double> y, const BoostParams& params) {
    if (params.n_rounds == 0) throw UsageError("gradient boosting needs n_rounds >= 1");
    if (!(params.shrinkage > 0.0 && params.shrinkage <= 1.0))
        throw UsageError("gradient boosting shrinkage must lie in (0, 1]");
    check_training_data(X, y);
    if (X.rows() < 2) throw DataError("gradient boosting needs at least 2 rows");

    ForestModel model;
    model.kind = EnsembleKind::gradient_boost;
    model.shrinkage = params.shrinkage;
    model.seed = params.seed;
    model.n_features = X.cols();
    const std::size_t n = X.rows();
    model.base_prediction = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    std::vector<double> fitted(n, model.base_prediction);
    std::vector<double> residual(n);
    model.trees.reserve(params.n_rounds);
    const SortedOrder order = sort_columns(X);
    std::vector<std::size_t> all_rows(n);
    std::iota(all_rows.begin(), all_rows.end(), 0);
    for (std::size_t round = 0; round < params.n_rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - fitted[i];
        TreeParams tp;
        tp.max_depth = params.max_depth;
        tp.min_leaf = params.min_leaf;
        tp.feature_subset_size = params.feature_subset_size;
        tp.seed = derive_seed(params.seed, round);
        Tree tree = build_tree(X, residual, all_rows, tp, &order);
        double sse = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            fitted[i] += params.shrinkage * tree.predict(X.row(i));
            sse += (y[i] - fitted[i]) * (y[i] - fitted[i]);
        }
        model.train_loss.push_back(sse / static_cast<double>(n));
        model.trees.push_back(std::move(tree));
    }
    return model;
}

double predict_one(const ForestModel& model, std::span<const double> row) {
    if (row.size() != model.n_features) throw DataError("row dimension does not match the model");
    if (model.kind == EnsembleKind::random_forest) {
        double s = 0.0;
        for (const auto& t : model.trees) s += t.predict(row);
        return s / static_cast<double>(model.trees.size());
    }
    double s = model.base_prediction;
    for (const auto& t : model.trees) s += model.shrinkage * t.predict(row);
    return s;
}

std::vector<double> predict(const ForestModel& model, const Matrix& rows) {
    if (rows.cols() != model.n_features) throw DataError("row dimension does not match the model");
    std::vector<double> out(rows.rows());
    for (std::size_t i = 0; i < rows.rows(); ++i) out[i] = predict_one(model, rows.row(i));
    return out;
}

std::vector<double> tree_importance(const Tree& tree) {
    std::vector<double> imp(tree.n_features, 0.0);
    if (tree.nodes.empty()) return imp;
    const double root_n = static_cast<double>(tree.nodes.front().n_samples);
    for (const auto& nd : tree.nodes) {
        if (nd.is_leaf()) continue;
        imp[static_cast<std::size_t>(nd.feature)] +=
            static_cast<double>(nd.n_samples) / root_n * nd.decrease;
    }
    return imp;
}

Importance importance(const ForestModel& model) {
    Importance out;
    out.raw.assign(model.n_features, 0.0);
    for (const auto& t : model.trees) {
        const auto ti = tree_importance(t);
        for (std::size_t m = 0; m < ti.size(); ++m) out.raw[m] += ti[m];
    }
    if (!model.trees.empty())
        for (auto& v : out.raw) v /= static_cast<double>(model.trees.size());
    const double mx = out.raw.empty() ? 0.0 : *std::max_element(out.raw.begin(), out.raw.end());
    out.normalized.assign(out.raw.size(), 0.0);
    if (mx > 0.0)
        for (std::size_t m = 0; m < out.raw.size(); ++m) out.normalized[m] = out.raw[m] / mx;
    return out;
}

ImportanceReport make_report(std::vector<std::string> features, Importance rf, Importance bt) {
    if (rf.normalized.size() != features.size() || bt.normalized.size() != features.size())
        throw DataError("importance vectors do not match the feature list");
    ImportanceReport r{std::move(features), std::move(rf), std::move(bt), {}};
    r.combined.resize(r.features.size());
    for (std::size_t m = 0; m < r.features.size(); ++m)
        r.combined[m] = std::max(r.rf.normalized[m], r.bt.normalized[m]);
    return r;
}

void write_csv(std::ostream& os, const ImportanceReport& report) {
    os << "feature,rf_importance,bt_importance,combined\n";
    for (std::size_t m = 0; m < report.features.size(); ++m) {
        os << report.features[m] << ',' << csv::format_double(report.rf.normalized[m]) << ','
           << csv::format_double(report.bt.normalized[m]) << ','
           << csv::format_double(report.combined[m]) << '\n';
    }
}

}  // namespace hhtfc::forest
