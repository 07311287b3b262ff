#include "hhtfc/spectral.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <string>

#include "hhtfc/csv.hpp"
#include "hhtfc/error.hpp"

namespace hhtfc::spectral {

namespace {

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void transform(std::vector<cplx>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    const double sign = inverse ? 1.0 : -1.0;
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        // twiddles from direct evaluation rather than recurrence, for accuracy
        std::vector<cplx> w(half);
        for (std::size_t k = 0; k < half; ++k) {
            const double ang = sign * 2.0 * std::numbers::pi * static_cast<double>(k) /
                               static_cast<double>(len);
            w[k] = {std::cos(ang), std::sin(ang)};
        }
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const cplx u = a[i + k];
                const cplx v = a[i + k + half] * w[k];
                a[i + k] = u + v;
                a[i + k + half] = u - v;
            }
        }
    }
}

}  // namespace

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

std::vector<cplx> fft(std::span<const cplx> x) {
    if (!is_pow2(x.size())) throw DataError("fft length must be a power of two");
    std::vector<cplx> a(x.begin(), x.end());
    transform(a, false);
    return a;
}

std::vector<cplx> ifft(std::span<const cplx> x) {
    if (!is_pow2(x.size())) throw DataError("ifft length must be a power of two");
    std::vector<cplx> a(x.begin(), x.end());
    transform(a, true);
    const double inv = 1.0 / static_cast<double>(a.size());
    for (auto& v : a) v *= inv;
    return a;
}

std::vector<cplx> analytic_signal(std::span<const double> x) {
    if (x.size() < 4) throw DataError("analytic signal needs at least 4 samples");
    const std::size_t n = x.size();
    const std::size_t N = next_pow2(n);
    std::vector<cplx> buf(N, cplx{0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i) buf[i] = x[i];
    transform(buf, false);
    for (std::size_t k = 1; k < N / 2; ++k) buf[k] *= 2.0;
    for (std::size_t k = N / 2 + 1; k < N; ++k) buf[k] = 0.0;
    transform(buf, true);
    const double inv = 1.0 / static_cast<double>(N);
    buf.resize(n);
    for (auto& v : buf) v *= inv;
    return buf;
}

std::vector<double> unwrap(std::span<const double> phase) {
    std::vector<double> out(phase.begin(), phase.end());
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double offset = 0.0;
    for (std::size_t i = 1; i < phase.size(); ++i) {
        const double d = phase[i] - phase[i - 1];
        if (d > std::numbers::pi) offset -= two_pi * std::ceil((d - std::numbers::pi) / two_pi);
        else if (d < -std::numbers::pi) offset += two_pi * std::ceil((-d - std::numbers::pi) / two_pi);
        out[i] = phase[i] + offset;
    }
    return out;
}

InstAttributes inst_attributes(std::span<const double> imf, double valid_frac) {
    if (imf.size() < 16) throw DataError("instantaneous attributes need at least 16 samples");
    if (!(valid_frac >= 0.0 && valid_frac < 0.5)) throw UsageError("valid_frac must lie in [0, 0.5)");
    const std::size_t n = imf.size();
    const auto z = analytic_signal(imf);
    InstAttributes out;
    out.amplitude.resize(n);
    std::vector<double> phase(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.amplitude[i] = std::abs(z[i]);
        phase[i] = std::arg(z[i]);
    }
    const auto unwrapped = unwrap(phase);
    constexpr double two_pi = 2.0 * std::numbers::pi;
    out.frequency.resize(n);
    out.frequency[0] = (unwrapped[1] - unwrapped[0]) / two_pi;
    out.frequency[n - 1] = (unwrapped[n - 1] - unwrapped[n - 2]) / two_pi;
    for (std::size_t i = 1; i + 1 < n; ++i)
        out.frequency[i] = (unwrapped[i + 1] - unwrapped[i - 1]) / (2.0 * two_pi);
    const auto edge = static_cast<std::size_t>(std::ceil(valid_frac * static_cast<double>(n)));
    out.valid_begin = edge;
    out.valid_end = n - edge;
    return out;
}

void write_csv(std::ostream& os, const std::vector<std::vector<double>>& imfs,
               const std::vector<InstAttributes>& attrs) {
    if (imfs.size() != attrs.size()) throw UsageError("IMF/attribute count mismatch");
    std::vector<std::string> header;
    std::vector<std::vector<double>> cols;
    for (std::size_t k = 0; k < imfs.size(); ++k) {
        const std::string idx = std::to_string(k + 1);
        header.push_back("IMF" + idx);
        cols.push_back(imfs[k]);
        header.push_back("A" + idx);
        cols.push_back(attrs[k].amplitude);
        header.push_back("F" + idx);
        cols.push_back(attrs[k].frequency);
    }
    csv::write_columns(os, header, cols);
}

}  // namespace hhtfc::spectral
