#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "hhtfc/emd.hpp"
#include "hhtfc/error.hpp"
#include "oracles.hpp"

using namespace hhtfc;

namespace {

std::vector<double> tone(std::size_t n, double freq, double amp = 1.0, double phase = 0.0) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::cos(2.0 * std::numbers::pi * freq * i + phase);
    return x;
}

double energy(std::span<const double> x) {
    double e = 0.0;
    for (double v : x) e += v * v;
    return e;
}

}  // namespace

TEST_SUITE("emd") {

TEST_CASE("extrema examples") {
    auto e = emd::find_extrema(std::vector<double>{0, 1, 0, -1, 0});
    CHECK(e.maxima == std::vector<std::size_t>{1});
    CHECK(e.minima == std::vector<std::size_t>{3});
    e = emd::find_extrema(std::vector<double>{0, 1, 2, 3});
    CHECK(e.maxima.empty());
    CHECK(e.minima.empty());
    e = emd::find_extrema(std::vector<double>{0, 2, 2, 0});
    CHECK(e.maxima == std::vector<std::size_t>{1});
    CHECK(e.minima.empty());
}

TEST_CASE("extrema agree with the plateau scan on every small integer sequence") {
    // all sequences of length 3..7 over {0, 1, 2}
    for (std::size_t len = 3; len <= 7; ++len) {
        std::size_t total = 1;
        for (std::size_t i = 0; i < len; ++i) total *= 3;
        for (std::size_t code = 0; code < total; ++code) {
            std::vector<double> s(len);
            std::size_t c = code;
            for (auto& v : s) v = static_cast<double>(c % 3), c /= 3;
            const auto got = emd::find_extrema(s);
            const auto want = oracle::plateau_scan(s);
            CHECK(got.maxima == want.maxima);
            CHECK(got.minima == want.minima);
        }
    }
}

TEST_CASE("envelope through two equal knots is flat") {
    const std::vector<double> s{1.0, 0.2, -0.5, 0.3, 1.0};
    const std::vector<std::size_t> knots{0, 4};
    for (double v : emd::envelope(s, knots, 2)) CHECK(std::abs(v - 1.0) < 1e-12);
    CHECK_THROWS_AS(emd::envelope(s, std::vector<std::size_t>{2}, 2), DataError);
}

TEST_CASE("envelope interpolates the maxima of a sine") {
    const auto x = tone(300, 0.03, 1.0, 0.4);
    const auto ex = emd::find_extrema(x);
    const auto up = emd::envelope(x, ex.maxima, 2);
    for (auto i : ex.maxima) CHECK(std::abs(up[i] - x[i]) < 1e-9);
}

TEST_CASE("sifting a pure tone leaves it unchanged") {
    const auto x = tone(400, 0.05);
    const auto h = emd::sift_once(x, 2);
    double diff = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) diff += (h[i] - x[i]) * (h[i] - x[i]);
    CHECK(std::sqrt(diff / energy(x)) < 1e-6);
}

TEST_CASE("sifting removes a constant offset") {
    const double c = 3.0;
    auto x = tone(400, 0.05, 1.0, 0.3);
    for (auto& v : x) v += c;
    const auto h = emd::sift_once(x, 2);
    double mean_env = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) mean_env += std::abs(h[i]);
    mean_env /= x.size();
    double mean_h = 0.0;
    for (double v : h) mean_h += v;
    CHECK(std::abs(mean_h / h.size()) < c);
    CHECK(mean_env < 1.0 + 0.1);
}

TEST_CASE("sifting zero gives zero") {
    for (double v : emd::sift_once(std::vector<double>(20, 0.0), 2)) CHECK(v == 0.0);
}

TEST_CASE("constant and monotone inputs give no IMFs") {
    const std::vector<double> flat(64, 2.5);
    auto r = emd::decompose(flat);
    CHECK(r.imfs.empty());
    CHECK(r.residue == flat);
    std::vector<double> ramp(64);
    for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = 0.1 * i * i;
    r = emd::decompose(ramp);
    CHECK(r.imfs.empty());
    CHECK_THROWS_AS(emd::decompose(std::vector<double>(7, 1.0)), DataError);
}

TEST_CASE("a single tone is one substantive IMF") {
    const auto x = tone(256, 0.1);
    const auto r = emd::decompose(x);
    REQUIRE(!r.imfs.empty());
    const double total = energy(x);
    CHECK(energy(r.imfs[0]) >= 0.99 * total);
    std::vector<double> rest(x.size(), 0.0);
    for (std::size_t k = 1; k < r.imfs.size(); ++k)
        for (std::size_t i = 0; i < x.size(); ++i) rest[i] += r.imfs[k][i];
    for (std::size_t i = 0; i < x.size(); ++i) rest[i] += r.residue[i];
    CHECK(energy(rest) <= 0.01 * total);
}

TEST_CASE("two tones separate into the first two IMFs") {
    const std::size_t n = 512;
    const auto fast = tone(n, 0.25), slow = tone(n, 0.03);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = fast[i] + slow[i];
    const auto r = emd::decompose(x);
    REQUIRE(r.imfs.size() >= 2);
    const std::size_t lo = n / 20, hi = n - n / 20;
    auto interior = [&](const std::vector<double>& v) { return std::span<const double>(v).subspan(lo, hi - lo); };
    CHECK(oracle::pearson(interior(r.imfs[0]), interior(fast)) >= 0.95);
    CHECK(oracle::pearson(interior(r.imfs[1]), interior(slow)) >= 0.95);
}

TEST_CASE("reconstruction, IMF balance and residue extrema on random signals") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 12; ++trial) {
        const std::size_t n = 64 + static_cast<std::size_t>(u(rng) * 900);
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i)
            x[i] = std::sin(0.4 * i * (0.5 + u(rng) * 0.01)) + 0.5 * std::cos(0.05 * i) + 0.01 * i + 0.1 * u(rng);
        const auto r = emd::decompose(x);
        std::vector<double> sum = r.residue;
        for (const auto& imf : r.imfs)
            for (std::size_t i = 0; i < n; ++i) sum[i] += imf[i];
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) err += (sum[i] - x[i]) * (sum[i] - x[i]);
        CHECK(std::sqrt(err / energy(x)) < 1e-10);
        for (const auto& imf : r.imfs) CHECK(emd::satisfies_imf_balance(imf));
        if (r.imfs.size() < emd::EmdConfig{}.max_imfs) {
            const auto e = emd::find_extrema(r.residue);
            CHECK(e.maxima.size() + e.minima.size() < 3);
        }
    }
}

TEST_CASE("decomposition is bit-identical across runs") {
    std::mt19937_64 rng(22);
    std::normal_distribution<double> g;
    std::vector<double> x(300);
    for (auto& v : x) v = g(rng);
    const auto a = emd::decompose(x), b = emd::decompose(x);
    CHECK(a.imfs == b.imfs);
    CHECK(a.residue == b.residue);
}

TEST_CASE("config validation and CSV layout") {
    emd::EmdConfig cfg;
    cfg.sd_threshold = 1.0;
    CHECK_THROWS_AS(cfg.validate(), UsageError);
    cfg = {};
    cfg.max_sift_iters = 0;
    CHECK_THROWS_AS(cfg.validate(), UsageError);

    const auto r = emd::decompose(tone(64, 0.2));
    std::ostringstream os;
    emd::write_csv(os, r);
    std::string header;
    std::getline(std::istringstream(os.str()) >> std::ws, header);
    CHECK(header.rfind("IMF1", 0) == 0);
    CHECK(header.find("residue") != std::string::npos);
}

}
