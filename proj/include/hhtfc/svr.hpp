#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hhtfc/matrix.hpp"
#include "hhtfc/series_io.hpp"
#include "json.hpp"

namespace hhtfc::svr {

enum class KernelKind { rbf, polynomial };

struct KernelSpec {
    KernelKind kind = KernelKind::rbf;
    double gamma = 1.0;
    int degree = 3;
    double coef0 = 0.0;

    void validate() const;
};

/// rbf: exp(-gamma |x - z|^2); polynomial: (gamma <x, z> + coef0)^degree.
double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> z);

struct SvrParams {
    double C = 1.0;
    double epsilon = 0.1;
    KernelSpec kernel;
    double tol = 1e-3;
    std::size_t max_iter = 0;  ///< 0: max(10^7, 100 * 2n)
    /// Records the dual objective after every pairwise update (tests only).
    bool record_objective = false;
};

struct SvrModel {
    Matrix support_vectors;
    std::vector<double> coefficients;  ///< beta_i = alpha_i - alpha_i^*
    double bias = 0.0;
    KernelSpec kernel;
    double C = 1.0;
    double epsilon = 0.0;
    NormParams norm = NormParams::identity();  ///< target scaling undone at prediction

    // training diagnostics
    std::size_t iterations = 0;
    double final_violation = 0.0;
    double dual_objective = 0.0;  ///< maximized dual value W(beta)
    std::vector<double> objective_history;
};

/// Epsilon-insensitive SVR solved in the dual by pairwise coordinate updates
/// on the most KKT-violating pair. Targets are used as given; `norm` is only
/// stored so predictions come back in signal units.
SvrModel fit_svr(const Matrix& X, std::span<const double> y, const SvrParams& params,
                 const NormParams& norm = NormParams::identity());

/// Sum_i beta_i K(x_i, x) + b in the model's training units.
double decision_value(const SvrModel& model, std::span<const double> row);

/// Decision values mapped back through the stored normalization.
std::vector<double> predict_svr(const SvrModel& model, const Matrix& rows);

/// W(beta) = -1/2 beta' K beta - eps sum|beta| + y' beta for arbitrary beta.
double dual_objective(const Matrix& X, std::span<const double> y, const KernelSpec& spec,
                      double epsilon, std::span<const double> beta);

nlohmann::json to_json(const SvrModel& model);
SvrModel svr_from_json(const nlohmann::json& doc);

const char* to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& text);

}  // namespace hhtfc::svr
