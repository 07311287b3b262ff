#include "hhtfc/emd.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <string>

#include "hhtfc/csv.hpp"
#include "hhtfc/error.hpp"

namespace hhtfc::emd {

void EmdConfig::validate() const {
    if (!(sd_threshold > 0.0 && sd_threshold < 1.0))
        throw UsageError("emd sd_threshold must lie in (0, 1)");
    if (max_sift_iters < 1) throw UsageError("emd max_sift_iters must be >= 1");
    if (max_imfs < 1) throw UsageError("emd max_imfs must be >= 1");
}

Extrema find_extrema(std::span<const double> s) {
    Extrema out;
    const std::size_t n = s.size();
    if (n < 3) return out;
    std::size_t i = 1;
    while (i + 1 < n) {
        // extend over a plateau [i, j]
        std::size_t j = i;
        while (j + 1 < n && s[j + 1] == s[i]) ++j;
        if (j + 1 >= n) break;  // plateau touches the right edge
        const double left = s[i - 1];
        const double right = s[j + 1];
        const std::size_t center = i + (j - i) / 2;
        if (s[i] > left && s[i] > right) out.maxima.push_back(center);
        else if (s[i] < left && s[i] < right) out.minima.push_back(center);
        i = j + 1;
    }
    return out;
}

std::size_t count_zero_crossings(std::span<const double> s) {
    std::size_t count = 0;
    int prev = 0;
    for (double v : s) {
        const int sign = (v > 0.0) - (v < 0.0);
        if (sign == 0) continue;
        if (prev != 0 && sign != prev) ++count;
        prev = sign;
    }
    return count;
}

namespace {

/// Natural cubic spline through strictly increasing knots, evaluated at
/// 0..n-1. Beyond the outer knots the spline continues linearly.
std::vector<double> natural_spline(const std::vector<double>& x, const std::vector<double>& y,
                                   std::size_t n) {
    const std::size_t m = x.size();
    std::vector<double> out(n);
    if (m == 2) {
        const double slope = (y[1] - y[0]) / (x[1] - x[0]);
        for (std::size_t t = 0; t < n; ++t) out[t] = y[0] + slope * (static_cast<double>(t) - x[0]);
        return out;
    }
    // second derivatives M, with M_0 = M_{m-1} = 0; Thomas algorithm on interior
    std::vector<double> h(m - 1);
    for (std::size_t i = 0; i + 1 < m; ++i) h[i] = x[i + 1] - x[i];
    const std::size_t k = m - 2;
    std::vector<double> diag(k), upper(k), rhs(k), M(m, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        diag[i] = 2.0 * (h[i] + h[i + 1]);
        upper[i] = h[i + 1];
        rhs[i] = 6.0 * ((y[i + 2] - y[i + 1]) / h[i + 1] - (y[i + 1] - y[i]) / h[i]);
    }
    for (std::size_t i = 1; i < k; ++i) {
        const double w = h[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    M[k] = rhs[k - 1] / diag[k - 1];
    for (std::size_t i = k - 1; i-- > 0;) M[i + 1] = (rhs[i] - upper[i] * M[i + 2]) / diag[i];

    std::size_t seg = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double xt = static_cast<double>(t);
        if (xt <= x.front()) {
            const double slope = (y[1] - y[0]) / h[0] - h[0] * (2.0 * M[0] + M[1]) / 6.0;
            out[t] = y[0] + slope * (xt - x[0]);
            continue;
        }
        if (xt >= x.back()) {
            const double hl = h[m - 2];
            const double slope = (y[m - 1] - y[m - 2]) / hl + hl * (M[m - 2] + 2.0 * M[m - 1]) / 6.0;
            out[t] = y[m - 1] + slope * (xt - x[m - 1]);
            continue;
        }
        while (x[seg + 1] < xt) ++seg;
        const double a = x[seg + 1] - xt;
        const double b = xt - x[seg];
        const double hs = h[seg];
        out[t] = (M[seg] * a * a * a + M[seg + 1] * b * b * b) / (6.0 * hs) +
                 (y[seg] / hs - M[seg] * hs / 6.0) * a + (y[seg + 1] / hs - M[seg + 1] * hs / 6.0) * b;
    }
    return out;
}

bool is_constant(std::span<const double> s) {
    return std::all_of(s.begin(), s.end(), [&](double v) { return v == s.front(); });
}

double energy(std::span<const double> s) {
    double e = 0.0;
    for (double v : s) e += v * v;
    return e;
}

}  // namespace

std::vector<double> envelope(std::span<const double> signal, std::span<const std::size_t> extrema,
                             std::size_t pad) {
    if (extrema.size() < 2) throw DataError("envelope needs at least 2 extrema");
    const std::size_t m = extrema.size();
    const std::size_t npad = std::min(pad, m - 1);
    std::vector<double> x, y;
    x.reserve(m + 2 * npad);
    y.reserve(m + 2 * npad);
    const double first = static_cast<double>(extrema.front());
    const double last = static_cast<double>(extrema.back());
    for (std::size_t i = npad; i >= 1; --i) {
        x.push_back(2.0 * first - static_cast<double>(extrema[i]));
        y.push_back(signal[extrema[i]]);
    }
    for (std::size_t e : extrema) {
        x.push_back(static_cast<double>(e));
        y.push_back(signal[e]);
    }
    for (std::size_t i = 1; i <= npad; ++i) {
        x.push_back(2.0 * last - static_cast<double>(extrema[m - 1 - i]));
        y.push_back(signal[extrema[m - 1 - i]]);
    }
    return natural_spline(x, y, signal.size());
}

std::vector<double> sift_once(std::span<const double> h, std::size_t pad) {
    std::vector<double> out(h.begin(), h.end());
    if (is_constant(h)) {
        // both envelopes equal the constant
        std::fill(out.begin(), out.end(), 0.0);
        return out;
    }
    const Extrema ex = find_extrema(h);
    const auto upper = envelope(h, ex.maxima, pad);
    const auto lower = envelope(h, ex.minima, pad);
    for (std::size_t t = 0; t < out.size(); ++t) out[t] -= 0.5 * (upper[t] + lower[t]);
    return out;
}

namespace {

// Sifting step used by decompose. A side with a single extremum gets a flat
// envelope at that value, so residues with three extrema keep sifting.
std::vector<double> sift_step(std::span<const double> h, std::size_t pad) {
    const Extrema ex = find_extrema(h);
    if (ex.maxima.size() >= 2 && ex.minima.size() >= 2) return sift_once(h, pad);
    auto side = [&](const std::vector<std::size_t>& idx) {
        if (idx.size() >= 2) return envelope(h, idx, pad);
        return std::vector<double>(h.size(), h[idx.front()]);
    };
    const auto upper = side(ex.maxima);
    const auto lower = side(ex.minima);
    std::vector<double> out(h.begin(), h.end());
    for (std::size_t t = 0; t < out.size(); ++t) out[t] -= 0.5 * (upper[t] + lower[t]);
    return out;
}

}  // namespace

bool satisfies_imf_balance(std::span<const double> imf) {
    const Extrema ex = find_extrema(imf);
    const double extrema = static_cast<double>(ex.maxima.size() + ex.minima.size());
    const double zc = static_cast<double>(count_zero_crossings(imf));
    double allowed = 1.0;
    if (imf.size() > 512) allowed = std::max(allowed, 0.02 * extrema);
    return std::abs(extrema - zc) <= allowed;
}

EmdResult decompose(std::span<const double> signal, const EmdConfig& cfg) {
    cfg.validate();
    if (signal.size() < 8) throw DataError("EMD needs at least 8 samples");
    for (double v : signal)
        if (!std::isfinite(v)) throw DataError("EMD input contains non-finite values");

    EmdResult result;
    std::vector<double> rem(signal.begin(), signal.end());
    auto extrema_count = [](std::span<const double> s) {
        const Extrema e = find_extrema(s);
        return e.maxima.size() + e.minima.size();
    };
    auto can_sift = [](std::span<const double> s) {
        const Extrema e = find_extrema(s);
        return !e.maxima.empty() && !e.minima.empty() && e.maxima.size() + e.minima.size() >= 3;
    };

    while (result.imfs.size() < cfg.max_imfs && extrema_count(rem) >= 3 && can_sift(rem)) {
        std::vector<double> h = rem;
        for (std::size_t it = 0; it < cfg.max_sift_iters; ++it) {
            if (!can_sift(h)) break;
            std::vector<double> next = sift_step(h, cfg.boundary_pad_extrema);
            double diff = 0.0;
            for (std::size_t t = 0; t < h.size(); ++t) diff += (h[t] - next[t]) * (h[t] - next[t]);
            const double denom = energy(h);
            const double sd = denom > 0.0 ? diff / denom : 0.0;
            h = std::move(next);
            if (sd < cfg.sd_threshold && (!cfg.require_imf_balance || satisfies_imf_balance(h))) break;
        }
        for (std::size_t t = 0; t < rem.size(); ++t) rem[t] -= h[t];
        result.imfs.push_back(std::move(h));
    }

    // residue as the exact complement of the IMF sum
    result.residue.assign(signal.begin(), signal.end());
    for (const auto& imf : result.imfs)
        for (std::size_t t = 0; t < imf.size(); ++t) result.residue[t] -= imf[t];
    return result;
}

void write_csv(std::ostream& os, const EmdResult& result) {
    std::vector<std::string> header;
    std::vector<std::vector<double>> cols;
    for (std::size_t k = 0; k < result.imfs.size(); ++k) {
        header.push_back("IMF" + std::to_string(k + 1));
        cols.push_back(result.imfs[k]);
    }
    header.emplace_back("residue");
    cols.push_back(result.residue);
    csv::write_columns(os, header, cols);
}

}  // namespace hhtfc::emd
