#pragma once

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace hhtfc::spectral {

using cplx = std::complex<double>;

/// In-order radix-2 DFT, X_k = sum_n x_n exp(-2 pi i k n / N). N must be a power of two.
std::vector<cplx> fft(std::span<const cplx> x);
/// Inverse of fft, including the 1/N factor.
std::vector<cplx> ifft(std::span<const cplx> x);

std::size_t next_pow2(std::size_t n);

/// x + i H[x] by spectral masking: negative-frequency bins zeroed, positive
/// bins doubled, DC and Nyquist kept. Input is zero-padded to a power of two
/// and the result trimmed back to the input length.
std::vector<cplx> analytic_signal(std::span<const double> x);

struct InstAttributes {
    std::vector<double> amplitude;  ///< envelope modulus, >= 0
    std::vector<double> frequency;  ///< cycles per sample
    std::size_t valid_begin = 0;    ///< interior range [valid_begin, valid_end)
    std::size_t valid_end = 0;
};

/// Instantaneous amplitude and frequency from the unwrapped analytic phase.
/// Frequency uses central differences (one-sided at the ends); valid range
/// excludes ceil(valid_frac * n) samples at each end.
InstAttributes inst_attributes(std::span<const double> imf, double valid_frac = 0.05);

/// Unwraps a phase sequence so successive jumps stay within (-pi, pi].
std::vector<double> unwrap(std::span<const double> phase);

/// Columns IMFk, Ak, Fk for each component.
void write_csv(std::ostream& os, const std::vector<std::vector<double>>& imfs,
               const std::vector<InstAttributes>& attrs);

}  // namespace hhtfc::spectral
