#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hhtfc/matrix.hpp"
#include "hhtfc/series_io.hpp"
#include "json.hpp"

namespace hhtfc::rbfnet {

/// Lloyd's k-means from distance-weighted seeding. Empty clusters are
/// re-seeded with the point farthest from its current center.
Matrix kmeans(const Matrix& X, std::size_t k, std::uint64_t seed, std::size_t max_iters = 300);

struct RbfNetwork {
    Matrix centers;               ///< k x p
    std::vector<double> widths;   ///< sigma_j > 0
    std::vector<double> weights;  ///< k activation weights followed by the bias
    NormParams norm = NormParams::identity();
};

struct RbfParams {
    std::size_t k = 16;
    double ridge = 1e-8;
    std::uint64_t seed = 0;
    /// Multiplies every width after the nearest-center rule (tests shrink it).
    double width_scale = 1.0;
};

/// Gaussian activations of one row followed by a constant 1.
std::vector<double> activations(const RbfNetwork& net, std::span<const double> row);

/// n x (k + 1) design matrix of activations plus the constant column.
Matrix design_matrix(const RbfNetwork& net, const Matrix& X);

/// Two-phase training: k-means centers with nearest-center widths, then the
/// ridge-regularized normal equations for the output weights. The bias
/// weight is not penalized.
RbfNetwork fit_rbf(const Matrix& X, std::span<const double> y, const RbfParams& params,
                   const NormParams& norm = NormParams::identity());

/// Network output in training units.
double output(const RbfNetwork& net, std::span<const double> row);

/// Outputs mapped back through the stored normalization.
std::vector<double> predict_rbf(const RbfNetwork& net, const Matrix& rows);

nlohmann::json to_json(const RbfNetwork& net);
RbfNetwork rbf_from_json(const nlohmann::json& doc);

}  // namespace hhtfc::rbfnet
