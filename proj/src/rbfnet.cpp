#include "hhtfc/rbfnet.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "hhtfc/error.hpp"

namespace hhtfc::rbfnet {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
    return d;
}

std::size_t distinct_rows(const Matrix& X) {
    std::set<std::vector<double>> seen;
    for (std::size_t i = 0; i < X.rows(); ++i) {
        auto r = X.row(i);
        seen.emplace(r.begin(), r.end());
    }
    return seen.size();
}

}  // namespace

Matrix kmeans(const Matrix& X, std::size_t k, std::uint64_t seed, std::size_t max_iters) {
    const std::size_t n = X.rows(), p = X.cols();
    if (k == 0) throw UsageError("k-means needs k >= 1");
    if (k > distinct_rows(X))
        throw DataError("k-means: k = " + std::to_string(k) + " exceeds the number of distinct rows");

    std::mt19937_64 rng(seed);
    Matrix centers(k, p);
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    std::size_t pick = first(rng);
    for (std::size_t c = 0; c < k; ++c) {
        std::copy_n(X.row(pick).begin(), p, centers.row(c).begin());
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], sq_dist(X.row(i), centers.row(c)));
            total += d2[i];
        }
        if (c + 1 == k) break;
        std::uniform_real_distribution<double> u(0.0, total);
        double target = u(rng);
        pick = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (d2[i] <= 0.0) continue;
            target -= d2[i];
            if (target <= 0.0) {
                pick = i;
                break;
            }
        }
        if (pick == n) {  // rounding left target positive: take the last uncovered row
            for (std::size_t i = n; i-- > 0;)
                if (d2[i] > 0.0) {
                    pick = i;
                    break;
                }
        }
    }

    std::vector<std::size_t> assign(n, k);
    for (std::size_t it = 0; it < max_iters; ++it) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double bd = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double d = sq_dist(X.row(i), centers.row(c));
                if (d < bd) {
                    bd = d;
                    best = c;
                }
            }
            if (assign[i] != best) {
                assign[i] = best;
                changed = true;
            }
        }
        if (!changed && it > 0) break;

        Matrix sums(k, p);
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++counts[assign[i]];
            for (std::size_t j = 0; j < p; ++j) sums(assign[i], j) += X(i, j);
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // re-seed with the row farthest from its own center
                std::size_t far = 0;
                double fd = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double d = sq_dist(X.row(i), centers.row(assign[i]));
                    if (d > fd) {
                        fd = d;
                        far = i;
                    }
                }
                std::copy_n(X.row(far).begin(), p, centers.row(c).begin());
                assign[far] = c;
                continue;
            }
            for (std::size_t j = 0; j < p; ++j)
                centers(c, j) = sums(c, j) / static_cast<double>(counts[c]);
        }
    }
    return centers;
}

std::vector<double> activations(const RbfNetwork& net, std::span<const double> row) {
    if (row.size() != net.centers.cols()) throw DataError("row dimension does not match the RBF network");
    const std::size_t k = net.centers.rows();
    std::vector<double> a(k + 1);
    for (std::size_t j = 0; j < k; ++j) {
        const double s = net.widths[j];
        a[j] = std::exp(-sq_dist(row, net.centers.row(j)) / (2.0 * s * s));
    }
    a[k] = 1.0;
    return a;
}

Matrix design_matrix(const RbfNetwork& net, const Matrix& X) {
    Matrix D(X.rows(), net.centers.rows() + 1);
    for (std::size_t i = 0; i < X.rows(); ++i) {
        const auto a = activations(net, X.row(i));
        std::copy(a.begin(), a.end(), D.row(i).begin());
    }
    return D;
}

RbfNetwork fit_rbf(const Matrix& X, std::span<const double> y, const RbfParams& params,
                   const NormParams& norm) {
    const std::size_t n = X.rows(), k = params.k;
    if (k == 0) throw UsageError("RBF network needs k >= 1");
    if (n < k) throw DataError("RBF network needs at least k rows");
    if (y.size() != n) throw DataError("RBF feature rows and targets differ in length");
    if (!(params.ridge >= 0.0)) throw UsageError("ridge must be >= 0");
    for (double v : y)
        if (!std::isfinite(v)) throw DataError("non-finite RBF target");

    RbfNetwork net;
    net.norm = norm;
    net.centers = kmeans(X, k, params.seed);

    net.widths.assign(k, 0.0);
    if (k == 1) {
        double total = 0.0;
        std::size_t pairs = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                total += std::sqrt(sq_dist(X.row(i), X.row(j)));
                ++pairs;
            }
        net.widths[0] = pairs > 0 && total > 0.0 ? total / static_cast<double>(pairs) : 1.0;
    } else {
        for (std::size_t j = 0; j < k; ++j) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c)
                if (c != j) best = std::min(best, sq_dist(net.centers.row(j), net.centers.row(c)));
            net.widths[j] = best > 0.0 ? std::sqrt(best) : 1.0;
        }
    }
    for (double& w : net.widths) w *= params.width_scale;
    if (!std::all_of(net.widths.begin(), net.widths.end(), [](double w) { return w > 0.0; }))
        throw UsageError("RBF widths must be positive");

    const Matrix D = design_matrix(net, X);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k + 1), static_cast<Eigen::Index>(k + 1));
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k + 1));
    const auto m = static_cast<Eigen::Index>(k + 1);
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> Dm(
        D.data().data(), static_cast<Eigen::Index>(n), m);
    Eigen::Map<const Eigen::VectorXd> ym(y.data(), static_cast<Eigen::Index>(n));
    A.noalias() = Dm.transpose() * Dm;
    b.noalias() = Dm.transpose() * ym;
    for (Eigen::Index j = 0; j < m - 1; ++j) A(j, j) += params.ridge;

    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    Eigen::VectorXd w;
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) w = ldlt.solve(b);
    if (w.size() == 0 || !w.allFinite() || (A * w - b).norm() > 1e-8 * std::max(1.0, b.norm())) {
        w = A.completeOrthogonalDecomposition().solve(b);
    }
    if (!w.allFinite()) throw ComputeError("RBF output weights: singular system");
    net.weights.assign(w.data(), w.data() + w.size());
    return net;
}

double output(const RbfNetwork& net, std::span<const double> row) {
    const auto a = activations(net, row);
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * net.weights[j];
    return s;
}

std::vector<double> predict_rbf(const RbfNetwork& net, const Matrix& rows) {
    std::vector<double> out(rows.rows());
    for (std::size_t i = 0; i < rows.rows(); ++i) out[i] = net.norm.invert(output(net, rows.row(i)));
    return out;
}

nlohmann::json to_json(const RbfNetwork& net) {
    nlohmann::json centers = nlohmann::json::array();
    for (std::size_t i = 0; i < net.centers.rows(); ++i) {
        auto r = net.centers.row(i);
        centers.push_back(std::vector<double>(r.begin(), r.end()));
    }
    return {
        {"format", "hhtfc.rbf"},
        {"version", 1},
        {"centers", centers},
        {"widths", net.widths},
        {"weights", net.weights},
        {"norm", {{"kind", to_string(net.norm.kind)}, {"offset", net.norm.offset}, {"scale", net.norm.scale}}},
    };
}

RbfNetwork rbf_from_json(const nlohmann::json& doc) {
    if (doc.value("format", "") != "hhtfc.rbf" || doc.value("version", 0) != 1)
        throw DataError("not a version-1 RBF network document");
    RbfNetwork net;
    net.centers = Matrix::from_rows(doc.at("centers").get<std::vector<std::vector<double>>>());
    net.widths = doc.at("widths").get<std::vector<double>>();
    net.weights = doc.at("weights").get<std::vector<double>>();
    if (net.centers.rows() == 0 || net.widths.size() != net.centers.rows() ||
        net.weights.size() != net.centers.rows() + 1)
        throw DataError("RBF network document has inconsistent sizes");
    const auto& nm = doc.at("norm");
    net.norm = {norm_kind_from_string(nm.at("kind").get<std::string>()), nm.at("offset").get<double>(),
                nm.at("scale").get<double>()};
    return net;
}

}  // namespace hhtfc::rbfnet
