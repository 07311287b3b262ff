#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace hhtfc::emd {

struct EmdConfig {
    double sd_threshold = 0.2;          ///< Cauchy-type sifting stop, in (0, 1)
    std::size_t max_sift_iters = 100;
    std::size_t max_imfs = 12;
    std::size_t boundary_pad_extrema = 2;
    /// Also require the zero-crossing/extrema balance before accepting an IMF.
    bool require_imf_balance = true;

    void validate() const;
};

struct EmdResult {
    std::vector<std::vector<double>> imfs;  ///< fastest oscillation first
    std::vector<double> residue;
};

struct Extrema {
    std::vector<std::size_t> maxima;
    std::vector<std::size_t> minima;
};

/// Strict local maxima and minima. Plateaus report their center index
/// (left-center for even lengths); endpoints are never extrema.
Extrema find_extrema(std::span<const double> signal);

/// Sign changes of the signal, ignoring exact zeros.
std::size_t count_zero_crossings(std::span<const double> signal);

/// Natural cubic spline through (extremum index, value) evaluated at every
/// sample. `pad` extrema are mirrored about each end extremum before fitting.
std::vector<double> envelope(std::span<const double> signal, std::span<const std::size_t> extrema,
                             std::size_t pad);

/// One sifting step: h minus the mean of its upper and lower envelopes.
std::vector<double> sift_once(std::span<const double> h, std::size_t pad);

EmdResult decompose(std::span<const double> signal, const EmdConfig& cfg = {});

/// True when zero crossings and extrema differ by at most one, or by at most
/// 2% of the extrema count when the signal is longer than 512 samples.
bool satisfies_imf_balance(std::span<const double> imf);

/// One column per IMF plus the residue, one row per sample.
void write_csv(std::ostream& os, const EmdResult& result);

}  // namespace hhtfc::emd
