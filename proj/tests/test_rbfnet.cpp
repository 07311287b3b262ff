#include <cmath>
#include <random>

#include "doctest.h"
#include "hhtfc/error.hpp"
#include "hhtfc/rbfnet.hpp"
#include "oracles.hpp"

using namespace hhtfc;
using namespace hhtfc::rbfnet;

namespace {

struct Instance {
    Matrix X;
    std::vector<double> y;
};

Instance random_instance(std::uint64_t seed, std::size_t n, std::size_t p) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Instance inst{Matrix(n, p), std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            inst.X(i, j) = g(rng);
            s += std::sin(inst.X(i, j) * (j + 1));
        }
        inst.y[i] = s + 0.1 * g(rng);
    }
    return inst;
}

// (D'D + ridge I') w - D'y with the bias entry unpenalized
std::vector<long double> normal_residual(const RbfNetwork& net, const Matrix& X, const std::vector<double>& y,
                                         double ridge) {
    const Matrix D = design_matrix(net, X);
    const std::size_t m = D.cols();
    std::vector<long double> r(m, 0.0L);
    for (std::size_t a = 0; a < m; ++a) {
        long double s = 0.0L;
        for (std::size_t i = 0; i < D.rows(); ++i) {
            long double f = 0.0L;
            for (std::size_t b = 0; b < m; ++b) f += static_cast<long double>(D(i, b)) * net.weights[b];
            s += static_cast<long double>(D(i, a)) * (f - y[i]);
        }
        if (a + 1 < m) s += static_cast<long double>(ridge) * net.weights[a];
        r[a] = s;
    }
    return r;
}

double norm2(const std::vector<double>& v) {
    double s = 0.0;
    for (double e : v) s += e * e;
    return std::sqrt(s);
}

}  // namespace

TEST_SUITE("rbfnet") {

TEST_CASE("k-means with k = n returns the rows") {
    const Matrix X = Matrix::from_rows({{0, 0}, {3, 1}, {-2, 5}, {7, 7}});
    const Matrix C = kmeans(X, 4, 1);
    std::vector<std::vector<double>> got, want;
    for (std::size_t i = 0; i < 4; ++i) {
        got.emplace_back(C.row(i).begin(), C.row(i).end());
        want.emplace_back(X.row(i).begin(), X.row(i).end());
    }
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    CHECK(got == want);
    CHECK_THROWS_AS(kmeans(Matrix::from_rows({{1}, {1}, {2}}), 3, 0), DataError);
}

TEST_CASE("k-means with k = 1 is the mean") {
    const Matrix X = Matrix::from_rows({{0, 1}, {2, 3}, {4, 8}});
    const Matrix C = kmeans(X, 1, 9);
    CHECK(C(0, 0) == doctest::Approx(2.0));
    CHECK(C(0, 1) == doctest::Approx(4.0));
}

TEST_CASE("k-means recovers two separated blobs") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(-0.6, 0.6);
        Matrix X(60, 2);
        double mean[2][2] = {{0, 0}, {0, 0}};
        for (std::size_t i = 0; i < 60; ++i) {
            const int blob = i % 2;
            const double dx = u(rng), dy = u(rng);
            X(i, 0) = 10.0 * blob + dx;
            X(i, 1) = 10.0 * blob + dy;
            mean[blob][0] += X(i, 0) / 30.0;
            mean[blob][1] += X(i, 1) / 30.0;
        }
        const Matrix C = kmeans(X, 2, seed);
        for (int blob = 0; blob < 2; ++blob) {
            double best = 1e9;
            for (std::size_t c = 0; c < 2; ++c)
                best = std::min(best, std::hypot(C(c, 0) - mean[blob][0], C(c, 1) - mean[blob][1]));
            CHECK(best < 0.5);
        }
    }
}

TEST_CASE("output weights satisfy the normal equations") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto inst = random_instance(seed, 40 + seed, 1 + seed % 3);
        RbfParams p;
        p.k = 4 + seed % 9;
        p.seed = seed;
        const auto net = fit_rbf(inst.X, inst.y, p);
        const auto r = normal_residual(net, inst.X, inst.y, p.ridge);
        double rn = 0.0;
        for (auto e : r) rn += static_cast<double>(e * e);
        CHECK(std::sqrt(rn) < 1e-8 * norm2(inst.y));
        for (double w : net.widths) CHECK(w > 0.0);
    }
}

TEST_CASE("weights equal the direct solve of the activation design") {
    const auto inst = random_instance(50, 35, 2);
    RbfParams p;
    p.k = 6;
    p.seed = 3;
    const auto net = fit_rbf(inst.X, inst.y, p);
    const Matrix D = design_matrix(net, inst.X);
    const std::size_t m = D.cols();
    std::vector<std::vector<long double>> A(m, std::vector<long double>(m, 0.0L));
    std::vector<long double> b(m, 0.0L);
    for (std::size_t i = 0; i < D.rows(); ++i)
        for (std::size_t a = 0; a < m; ++a) {
            b[a] += static_cast<long double>(D(i, a)) * inst.y[i];
            for (std::size_t c = 0; c < m; ++c) A[a][c] += static_cast<long double>(D(i, a)) * D(i, c);
        }
    for (std::size_t a = 0; a + 1 < m; ++a) A[a][a] += p.ridge;
    const auto w = oracle::solve_dense(A, b);
    for (std::size_t a = 0; a < m; ++a) CHECK(std::abs(w[a] - net.weights[a]) < 1e-8 * std::max(1.0, std::abs(w[a])));
}

TEST_CASE("shrunk widths with one center per point nearly interpolate") {
    const auto inst = random_instance(77, 25, 2);
    RbfParams p;
    p.k = 25;
    p.width_scale = 0.1;
    const auto net = fit_rbf(inst.X, inst.y, p);
    double se = 0.0;
    for (std::size_t i = 0; i < 25; ++i) {
        const double e = output(net, inst.X.row(i)) - inst.y[i];
        se += e * e;
    }
    CHECK(std::sqrt(se / 25) < 1e-3);
}

TEST_CASE("constant targets go to the bias") {
    const auto inst = random_instance(5, 30, 2);
    const std::vector<double> y(30, 4.25);
    RbfParams p;
    p.k = 5;
    const auto net = fit_rbf(inst.X, y, p);
    for (std::size_t j = 0; j < 5; ++j) CHECK(std::abs(net.weights[j]) < 1e-6);
    CHECK(net.weights.back() == doctest::Approx(4.25));
    for (std::size_t i = 0; i < 30; ++i) CHECK(std::abs(output(net, inst.X.row(i)) - 4.25) < 1e-10);
}

TEST_CASE("ridge barely moves well-conditioned fits") {
    const auto inst = random_instance(9, 80, 2);
    RbfParams p;
    p.k = 8;
    p.ridge = 0.0;
    const auto plain = fit_rbf(inst.X, inst.y, p);
    p.ridge = 1e-8;
    const auto ridged = fit_rbf(inst.X, inst.y, p);
    for (std::size_t i = 0; i < 80; ++i) {
        const double a = output(plain, inst.X.row(i)), b = output(ridged, inst.X.row(i));
        CHECK(std::abs(a - b) <= 1e-4 * std::max(1.0, std::abs(a)));
    }
}

TEST_CASE("prediction examples") {
    RbfNetwork net;
    net.centers = Matrix::from_rows({{1.0, 1.0}, {4.0, 0.0}});
    net.widths = {0.5, 2.0};
    net.weights = {1.0, 0.0, 0.0};
    CHECK(output(net, std::vector<double>{1.0, 1.0}) == 1.0);
    net.weights = {3.0, -2.0, 0.75};
    CHECK(output(net, std::vector<double>{1e6, -1e6}) == 0.75);
    const auto inst = random_instance(2, 20, 2);
    RbfParams p;
    p.k = 5;
    const auto fit = fit_rbf(inst.X, inst.y, p, {NormKind::zscore, 2.0, 3.0});
    const Matrix D = design_matrix(fit, inst.X);
    const auto pred = predict_rbf(fit, inst.X);
    for (std::size_t i = 0; i < 20; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < D.cols(); ++j) s += D(i, j) * fit.weights[j];
        CHECK(std::abs(pred[i] - (3.0 * s + 2.0)) < 1e-10);
    }
    CHECK_THROWS_AS(output(fit, std::vector<double>{1.0}), DataError);
}

TEST_CASE("fits are deterministic and roundtrip through JSON") {
    const auto inst = random_instance(31, 50, 3);
    RbfParams p;
    p.k = 7;
    p.seed = 12;
    const auto a = fit_rbf(inst.X, inst.y, p), b = fit_rbf(inst.X, inst.y, p);
    CHECK(a.weights == b.weights);
    const auto back = rbf_from_json(nlohmann::json::parse(to_json(a).dump()));
    CHECK(predict_rbf(back, inst.X) == predict_rbf(a, inst.X));
    p.k = 0;
    CHECK_THROWS_AS(fit_rbf(inst.X, inst.y, p), UsageError);
}

}
