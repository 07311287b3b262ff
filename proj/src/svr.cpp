#include "hhtfc/svr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <list>
#include <numeric>
#include <unordered_map>

#include "hhtfc/error.hpp"

namespace hhtfc::svr {

void KernelSpec::validate() const {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw UsageError("kernel gamma must be > 0");
    if (kind == KernelKind::polynomial && degree < 1)
        throw UsageError("polynomial kernel degree must be >= 1");
}

double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> z) {
    if (x.size() != z.size()) throw DataError("kernel arguments differ in dimension");
    if (spec.kind == KernelKind::rbf) {
        double d2 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = x[i] - z[i];
            d2 += d * d;
        }
        if (!std::isfinite(d2)) throw DataError("non-finite kernel input");
        return std::exp(-spec.gamma * d2);
    }
    double dot = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) dot += x[i] * z[i];
    if (!std::isfinite(dot)) throw DataError("non-finite kernel input");
    const double base = spec.gamma * dot + spec.coef0;
    double out = 1.0;
    for (int d = 0; d < spec.degree; ++d) out *= base;
    return out;
}

namespace {

/// Rows of the n x n kernel matrix: fully materialized for n <= 4096,
/// otherwise an LRU cache of 256 rows.
class KernelCache {
public:
    KernelCache(const Matrix& X, const KernelSpec& spec) : X_(X), spec_(spec), n_(X.rows()) {
        if (n_ <= 4096) {
            full_.resize(n_ * n_);
            for (std::size_t i = 0; i < n_; ++i) {
                for (std::size_t j = i; j < n_; ++j) {
                    const double k = kernel_eval(spec_, X_.row(i), X_.row(j));
                    full_[i * n_ + j] = k;
                    full_[j * n_ + i] = k;
                }
            }
        }
    }

    std::span<const double> row(std::size_t i) {
        if (!full_.empty()) return {full_.data() + i * n_, n_};
        auto it = index_.find(i);
        if (it != index_.end()) {
            lru_.splice(lru_.begin(), lru_, it->second);
            return it->second->second;
        }
        if (lru_.size() >= kMaxRows) {
            index_.erase(lru_.back().first);
            lru_.pop_back();
        }
        std::vector<double> r(n_);
        for (std::size_t j = 0; j < n_; ++j) r[j] = kernel_eval(spec_, X_.row(i), X_.row(j));
        lru_.emplace_front(i, std::move(r));
        index_[i] = lru_.begin();
        return lru_.front().second;
    }

    double diag(std::size_t i) {
        if (!full_.empty()) return full_[i * n_ + i];
        return kernel_eval(spec_, X_.row(i), X_.row(i));
    }

private:
    static constexpr std::size_t kMaxRows = 256;
    const Matrix& X_;
    KernelSpec spec_;
    std::size_t n_;
    std::vector<double> full_;
    std::list<std::pair<std::size_t, std::vector<double>>> lru_;
    std::unordered_map<std::size_t, decltype(lru_)::iterator> index_;
};

}  // namespace

SvrModel fit_svr(const Matrix& X, std::span<const double> y, const SvrParams& params,
                 const NormParams& norm) {
    const std::size_t n = X.rows();
    if (n < 2) throw DataError("SVR needs at least 2 rows");
    if (y.size() != n) throw DataError("SVR feature rows and targets differ in length");
    if (!(params.C > 0.0)) throw UsageError("SVR C must be > 0");
    if (!(params.epsilon >= 0.0)) throw UsageError("SVR epsilon must be >= 0");
    params.kernel.validate();
    for (double v : X.data())
        if (!std::isfinite(v)) throw DataError("non-finite SVR feature value");
    for (double v : y)
        if (!std::isfinite(v)) throw DataError("non-finite SVR target");

    const double C = params.C;
    const std::size_t l = 2 * n;
    // variable t < n is alpha_t (sign +1), t >= n is alpha*_{t-n} (sign -1)
    auto sgn = [n](std::size_t t) { return t < n ? 1.0 : -1.0; };
    std::vector<double> alpha(l, 0.0), G(l), p(l);
    for (std::size_t i = 0; i < n; ++i) {
        p[i] = params.epsilon - y[i];
        p[i + n] = params.epsilon + y[i];
    }
    G = p;

    KernelCache cache(X, params.kernel);
    auto objective = [&] {
        double f = 0.0;
        for (std::size_t t = 0; t < l; ++t) f += alpha[t] * (G[t] + p[t]);
        return -0.5 * f;
    };

    SvrModel model;
    const std::size_t max_iter =
        params.max_iter ? params.max_iter : std::max<std::size_t>(10'000'000, 100 * l);
    std::size_t iter = 0;
    double violation = std::numeric_limits<double>::infinity();
    for (;;) {
        double gmax = -std::numeric_limits<double>::infinity();
        double gmin = std::numeric_limits<double>::infinity();
        std::size_t i = l, j = l;
        for (std::size_t t = 0; t < n; ++t) {  // sign +1: up if alpha < C, low if alpha > 0
            const double v = -G[t];
            if (alpha[t] < C && v > gmax) {
                gmax = v;
                i = t;
            }
            if (alpha[t] > 0.0 && v < gmin) {
                gmin = v;
                j = t;
            }
        }
        for (std::size_t t = n; t < l; ++t) {  // sign -1: up if alpha > 0, low if alpha < C
            const double v = G[t];
            if (alpha[t] > 0.0 && v > gmax) {
                gmax = v;
                i = t;
            }
            if (alpha[t] < C && v < gmin) {
                gmin = v;
                j = t;
            }
        }
        violation = (i == l || j == l) ? 0.0 : gmax - gmin;
        if (violation < params.tol) break;
        if (iter >= max_iter) {
            throw ComputeError("SVR did not converge in " + std::to_string(max_iter) +
                               " iterations (max KKT violation " + std::to_string(violation) + ")");
        }
        ++iter;

        const std::size_t bi = i % n, bj = j % n;
        const auto Ki = cache.row(bi);
        const double Kii = cache.diag(bi), Kjj = cache.diag(bj), Kij = Ki[bj];
        const double si = sgn(i), sj = sgn(j);
        const double Qij = si * sj * Kij;
        const double old_ai = alpha[i], old_aj = alpha[j];
        double& ai = alpha[i];
        double& aj = alpha[j];
        if (si != sj) {
            double quad = Kii + Kjj + 2.0 * Qij;
            if (quad <= 0) quad = 1e-12;
            const double delta = (-G[i] - G[j]) / quad;
            const double diff = ai - aj;
            ai += delta;
            aj += delta;
            if (diff > 0) {
                if (aj < 0) { aj = 0; ai = diff; }
            } else {
                if (ai < 0) { ai = 0; aj = -diff; }
            }
            if (diff > 0) {
                if (ai > C) { ai = C; aj = C - diff; }
            } else {
                if (aj > C) { aj = C; ai = C + diff; }
            }
        } else {
            double quad = Kii + Kjj - 2.0 * Qij;
            if (quad <= 0) quad = 1e-12;
            const double delta = (G[i] - G[j]) / quad;
            const double sum = ai + aj;
            ai -= delta;
            aj += delta;
            if (sum > C) {
                if (ai > C) { ai = C; aj = sum - C; }
            } else {
                if (aj < 0) { aj = 0; ai = sum; }
            }
            if (sum > C) {
                if (aj > C) { aj = C; ai = sum - C; }
            } else {
                if (ai < 0) { ai = 0; aj = sum; }
            }
        }
        const double dai = ai - old_ai, daj = aj - old_aj;
        const auto Kj = cache.row(bj);
        // Ki may be invalidated by the LRU fetch of Kj; re-fetch it
        const auto Ki2 = cache.row(bi);
        const double ci = si * dai, cj = sj * daj;
        for (std::size_t b = 0; b < n; ++b) {
            const double d = ci * Ki2[b] + cj * Kj[b];
            G[b] += d;
            G[b + n] -= d;
        }
        if (params.record_objective) model.objective_history.push_back(objective());
    }

    // bias from free variables, else the midpoint of the feasible interval
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    std::size_t n_free = 0;
    for (std::size_t t = 0; t < l; ++t) {
        const double yG = sgn(t) * G[t];
        if (alpha[t] >= C) {
            if (sgn(t) < 0) ub = std::min(ub, yG);
            else lb = std::max(lb, yG);
        } else if (alpha[t] <= 0.0) {
            if (sgn(t) > 0) ub = std::min(ub, yG);
            else lb = std::max(lb, yG);
        } else {
            ++n_free;
            sum_free += yG;
        }
    }
    const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);

    std::vector<std::size_t> sv;
    for (std::size_t i = 0; i < n; ++i)
        if (alpha[i] - alpha[i + n] != 0.0) sv.push_back(i);
    model.support_vectors = X.select_rows(sv);
    for (std::size_t i : sv) model.coefficients.push_back(alpha[i] - alpha[i + n]);
    model.bias = -rho;
    model.kernel = params.kernel;
    model.C = C;
    model.epsilon = params.epsilon;
    model.norm = norm;
    model.iterations = iter;
    model.final_violation = violation;
    model.dual_objective = objective();
    return model;
}

double decision_value(const SvrModel& model, std::span<const double> row) {
    if (model.support_vectors.rows() > 0 && row.size() != model.support_vectors.cols())
        throw DataError("row dimension does not match the SVR model");
    double f = model.bias;
    for (std::size_t i = 0; i < model.coefficients.size(); ++i)
        f += model.coefficients[i] * kernel_eval(model.kernel, model.support_vectors.row(i), row);
    return f;
}

std::vector<double> predict_svr(const SvrModel& model, const Matrix& rows) {
    std::vector<double> out(rows.rows());
    for (std::size_t r = 0; r < rows.rows(); ++r)
        out[r] = model.norm.invert(decision_value(model, rows.row(r)));
    return out;
}

double dual_objective(const Matrix& X, std::span<const double> y, const KernelSpec& spec,
                      double epsilon, std::span<const double> beta) {
    const std::size_t n = X.rows();
    double quad = 0.0, lin = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (beta[i] == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j)
            quad += beta[i] * beta[j] * kernel_eval(spec, X.row(i), X.row(j));
        lin += y[i] * beta[i] - epsilon * std::abs(beta[i]);
    }
    return -0.5 * quad + lin;
}

const char* to_string(KernelKind kind) { return kind == KernelKind::rbf ? "rbf" : "polynomial"; }

KernelKind kernel_kind_from_string(const std::string& text) {
    if (text == "rbf") return KernelKind::rbf;
    if (text == "polynomial" || text == "poly") return KernelKind::polynomial;
    throw UsageError("unknown kernel '" + text + "'");
}

nlohmann::json to_json(const SvrModel& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < m.support_vectors.rows(); ++i) {
        auto r = m.support_vectors.row(i);
        rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    return {
        {"format", "hhtfc.svr"},
        {"version", 1},
        {"kernel",
         {{"kind", to_string(m.kernel.kind)},
          {"gamma", m.kernel.gamma},
          {"degree", m.kernel.degree},
          {"coef0", m.kernel.coef0}}},
        {"C", m.C},
        {"epsilon", m.epsilon},
        {"bias", m.bias},
        {"dimension", m.support_vectors.cols()},
        {"support_vectors", rows},
        {"coefficients", m.coefficients},
        {"norm", {{"kind", hhtfc::to_string(m.norm.kind)}, {"offset", m.norm.offset}, {"scale", m.norm.scale}}},
    };
}

SvrModel svr_from_json(const nlohmann::json& doc) {
    if (doc.value("format", "") != "hhtfc.svr" || doc.value("version", 0) != 1)
        throw DataError("not a version-1 SVR model document");
    SvrModel m;
    const auto& k = doc.at("kernel");
    m.kernel.kind = kernel_kind_from_string(k.at("kind").get<std::string>());
    m.kernel.gamma = k.at("gamma").get<double>();
    m.kernel.degree = k.at("degree").get<int>();
    m.kernel.coef0 = k.at("coef0").get<double>();
    m.C = doc.at("C").get<double>();
    m.epsilon = doc.at("epsilon").get<double>();
    m.bias = doc.at("bias").get<double>();
    const auto rows = doc.at("support_vectors").get<std::vector<std::vector<double>>>();
    m.support_vectors = Matrix::from_rows(rows);
    if (rows.empty()) m.support_vectors = Matrix(0, doc.at("dimension").get<std::size_t>());
    m.coefficients = doc.at("coefficients").get<std::vector<double>>();
    if (m.coefficients.size() != m.support_vectors.rows())
        throw DataError("SVR model: coefficient count does not match support vectors");
    const auto& nm = doc.at("norm");
    m.norm = {norm_kind_from_string(nm.at("kind").get<std::string>()), nm.at("offset").get<double>(),
              nm.at("scale").get<double>()};
    return m;
}

}  // namespace hhtfc::svr
