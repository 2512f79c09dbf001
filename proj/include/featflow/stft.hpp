#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "featflow/params.hpp"
#include "featflow/result.hpp"
#include "featflow/stim.hpp"

namespace featflow {

// Forward DFT of any length, X_k = sum_n x_n exp(-2 pi i k n / N). Mixed
// radix for composite lengths, Bluestein for large prime factors.
std::vector<std::complex<double>> fft(std::span<const std::complex<double>> input);

// Symmetric Hann window of length n; n == 1 gives {1}.
std::vector<double> hann_window(std::size_t n);

enum class WindowKind { kHann, kRectangular };

struct Band {
  double low = 0.0;
  double high = 0.0;
  bool operator==(const Band&) const = default;
};

struct StftParams {
  double frame_size = 0.5;  // seconds
  double hop_size = 0.1;    // seconds
  // Either n equal-width bands from 0 to Nyquist, or explicit [low, high)
  // bands in Hz.
  std::variant<int, std::vector<Band>> freq_bins = 5;
  WindowKind window = WindowKind::kHann;

  // Throws InvalidParams.
  void validate() const;
  // frame_size, when absent, defaults to max(0.5, hop_size) so that a lone
  // hop_size never violates hop <= frame. Throws InvalidParams.
  static StftParams from_params(const ParamMap& params);
};

struct ResolvedBand {
  std::string feature;  // "power_<low>_<high>hz" or "bin<i>"
  double low = 0.0;
  double high = 0.0;
  // The band ending at Nyquist also takes the Nyquist bin, so that bands
  // covering 0..Nyquist partition the one-sided spectrum.
  bool closed_high = false;
};

// Throws InvalidParams when an explicit band falls outside 0..Nyquist.
std::vector<ResolvedBand> resolve_bands(const StftParams& params, int sample_rate);

// Sum of |X_k|^2 over one-sided DFT bins k = 0..N/2 whose center frequency
// k * sample_rate / N falls in each band.
std::vector<double> band_powers(std::span<const std::complex<double>> spectrum,
                                int sample_rate, std::span<const ResolvedBand> bands);

// One row per hop h at onset h * hop_size (plus the stim's onset). Throws
// InvalidParams, AudioTooShort.
ExtractorResult stft_extract(const AudioStim& audio, const StftParams& params);

}  // namespace featflow
