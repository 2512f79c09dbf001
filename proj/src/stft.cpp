#include "featflow/stft.hpp"

#include <cmath>
#include <numbers>

#include "featflow/error.hpp"

namespace featflow {
namespace {

using Complex = std::complex<double>;

// Prime lengths above this go through Bluestein instead of a direct DFT.
constexpr std::size_t kDirectPrimeLimit = 64;

std::size_t smallest_factor(std::size_t n) {
  if (n % 2 == 0) return 2;
  for (std::size_t p = 3; p * p <= n; p += 2) {
    if (n % p == 0) return p;
  }
  return n;
}

Complex twiddle(std::size_t k, std::size_t n) {
  double angle = -2.0 * std::numbers::pi * static_cast<double>(k % n) / static_cast<double>(n);
  return {std::cos(angle), std::sin(angle)};
}

std::vector<Complex> direct_dft(std::span<const Complex> x) {
  std::size_t n = x.size();
  std::vector<Complex> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    Complex sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += x[j] * twiddle(k * j % n, n);
    out[k] = sum;
  }
  return out;
}

std::vector<Complex> transform(std::span<const Complex> x);

std::vector<Complex> inverse_pow2(std::span<const Complex> x) {
  std::vector<Complex> conj(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) conj[i] = std::conj(x[i]);
  std::vector<Complex> y = transform(conj);
  double scale = 1.0 / static_cast<double>(x.size());
  for (Complex& v : y) v = std::conj(v) * scale;
  return y;
}

std::vector<Complex> bluestein(std::span<const Complex> x) {
  std::size_t n = x.size();
  std::size_t m = 1;
  while (m < 2 * n - 1) m <<= 1;
  // chirp_k = exp(-i pi k^2 / n); k^2 reduced mod 2n keeps the angle exact.
  std::vector<Complex> chirp(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t k2 = (k * k) % (2 * n);
    double angle = -std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n);
    chirp[k] = {std::cos(angle), std::sin(angle)};
  }
  std::vector<Complex> a(m), b(m);
  for (std::size_t k = 0; k < n; ++k) a[k] = x[k] * chirp[k];
  b[0] = std::conj(chirp[0]);
  for (std::size_t k = 1; k < n; ++k) b[k] = b[m - k] = std::conj(chirp[k]);
  std::vector<Complex> fa = transform(a);
  std::vector<Complex> fb = transform(b);
  for (std::size_t i = 0; i < m; ++i) fa[i] *= fb[i];
  std::vector<Complex> conv = inverse_pow2(fa);
  std::vector<Complex> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = conv[k] * chirp[k];
  return out;
}

std::vector<Complex> transform(std::span<const Complex> x) {
  std::size_t n = x.size();
  if (n <= 1) return {x.begin(), x.end()};
  std::size_t p = smallest_factor(n);
  if (p == n) return n <= kDirectPrimeLimit ? direct_dft(x) : bluestein(x);

  // Decimation in time: p interleaved sub-sequences of length m.
  std::size_t m = n / p;
  std::vector<std::vector<Complex>> sub(p);
  std::vector<Complex> buffer(m);
  for (std::size_t r = 0; r < p; ++r) {
    for (std::size_t j = 0; j < m; ++j) buffer[j] = x[j * p + r];
    sub[r] = transform(buffer);
  }
  std::vector<Complex> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    Complex sum = 0.0;
    for (std::size_t r = 0; r < p; ++r) sum += sub[r][k % m] * twiddle(r * k, n);
    out[k] = sum;
  }
  return out;
}

[[noreturn]] void invalid(const std::string& why) {
  throw Error(ErrorCode::kInvalidParams, "stft: " + why);
}

std::string band_feature(double low, double high) {
  return "power_" + format_number(low) + "_" + format_number(high) + "hz";
}

}  // namespace

std::vector<Complex> fft(std::span<const Complex> input) { return transform(input); }

std::vector<double> hann_window(std::size_t n) {
  if (n == 1) return {1.0};
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                static_cast<double>(n - 1));
  }
  return w;
}

void StftParams::validate() const {
  if (!(frame_size > 0.0) || !std::isfinite(frame_size)) invalid("frame_size must be > 0");
  if (!(hop_size > 0.0) || !std::isfinite(hop_size)) invalid("hop_size must be > 0");
  if (hop_size > frame_size) invalid("hop_size must not exceed frame_size");
  if (const int* n = std::get_if<int>(&freq_bins)) {
    if (*n <= 0) invalid("freq_bins must be a positive integer");
  } else {
    const auto& bands = std::get<std::vector<Band>>(freq_bins);
    if (bands.empty()) invalid("freq_bins band list is empty");
    for (const Band& b : bands) {
      if (!(b.low >= 0.0) || !(b.low < b.high)) {
        invalid("band [" + format_number(b.low) + ", " + format_number(b.high) +
                ") needs 0 <= low < high");
      }
    }
  }
}

StftParams StftParams::from_params(const ParamMap& params) {
  StftParams out;
  if (auto hop = get_number(params, "hop_size")) out.hop_size = *hop;
  if (auto frame = get_number(params, "frame_size")) {
    out.frame_size = *frame;
  } else {
    out.frame_size = std::max(0.5, out.hop_size);
  }
  auto it = params.find("freq_bins");
  if (it != params.end()) {
    const ParamValue& v = it->second;
    if (v.is_number()) {
      double d = v.get<double>();
      if (d != std::floor(d)) invalid("freq_bins must be an integer or a list of bands");
      out.freq_bins = static_cast<int>(d);
    } else if (v.is_array()) {
      std::vector<Band> bands;
      for (const auto& pair : v) {
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() ||
            !pair[1].is_number()) {
          invalid("each band must be a [low, high] pair");
        }
        bands.push_back({pair[0].get<double>(), pair[1].get<double>()});
      }
      out.freq_bins = std::move(bands);
    } else {
      invalid("freq_bins must be an integer or a list of bands");
    }
  }
  if (auto window = get_string(params, "window")) {
    if (*window == "hann") {
      out.window = WindowKind::kHann;
    } else if (*window == "rectangular") {
      out.window = WindowKind::kRectangular;
    } else {
      invalid("unknown window '" + *window + "'");
    }
  }
  out.validate();
  return out;
}

std::vector<ResolvedBand> resolve_bands(const StftParams& params, int sample_rate) {
  double nyquist = sample_rate / 2.0;
  std::vector<ResolvedBand> out;
  if (const int* n = std::get_if<int>(&params.freq_bins)) {
    for (int i = 0; i < *n; ++i) {
      double low = nyquist * i / *n;
      double high = i + 1 == *n ? nyquist : nyquist * (i + 1) / *n;
      out.push_back({"bin" + std::to_string(i), low, high, i + 1 == *n});
    }
    return out;
  }
  for (const Band& b : std::get<std::vector<Band>>(params.freq_bins)) {
    if (b.high > nyquist) {
      invalid("band " + band_feature(b.low, b.high) + " exceeds Nyquist (" +
              format_number(nyquist) + " Hz)");
    }
    out.push_back({band_feature(b.low, b.high), b.low, b.high, b.high == nyquist});
  }
  return out;
}

std::vector<double> band_powers(std::span<const Complex> spectrum, int sample_rate,
                                std::span<const ResolvedBand> bands) {
  std::size_t n = spectrum.size();
  std::vector<double> out(bands.size(), 0.0);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    double freq = static_cast<double>(k) * sample_rate / static_cast<double>(n);
    double power = std::norm(spectrum[k]);
    for (std::size_t b = 0; b < bands.size(); ++b) {
      const ResolvedBand& band = bands[b];
      bool inside = freq >= band.low && (freq < band.high || (band.closed_high && freq == band.high));
      if (inside) out[b] += power;
    }
  }
  return out;
}

ExtractorResult stft_extract(const AudioStim& audio, const StftParams& params) {
  params.validate();
  if (audio.sample_rate <= 0) invalid("audio has no sample rate");
  auto frame_len = static_cast<std::size_t>(std::llround(params.frame_size * audio.sample_rate));
  if (frame_len == 0) invalid("frame_size is shorter than one sample");
  if (audio.samples.size() < frame_len) {
    throw Error(ErrorCode::kAudioTooShort,
                "audio has " + std::to_string(audio.samples.size()) +
                    " samples, one frame needs " + std::to_string(frame_len));
  }
  std::vector<ResolvedBand> bands = resolve_bands(params, audio.sample_rate);
  std::vector<double> window = params.window == WindowKind::kHann
                                   ? hann_window(frame_len)
                                   : std::vector<double>(frame_len, 1.0);

  ExtractorResult result;
  for (const ResolvedBand& b : bands) result.features.push_back(b.feature);
  double base = audio.meta.onset.value_or(0.0);
  std::vector<Complex> frame(frame_len);
  for (std::size_t h = 0;; ++h) {
    double t = static_cast<double>(h) * params.hop_size;
    auto start = static_cast<std::size_t>(std::llround(t * audio.sample_rate));
    if (start >= audio.samples.size()) break;
    for (std::size_t i = 0; i < frame_len; ++i) {
      double s = start + i < audio.samples.size() ? audio.samples[start + i] : 0.0;
      frame[i] = s * window[i];
    }
    std::vector<double> powers = band_powers(fft(frame), audio.sample_rate, bands);
    ResultRow row;
    row.onset = base + t;
    row.duration = params.hop_size;
    row.values.assign(powers.begin(), powers.end());
    result.rows.push_back(std::move(row));
  }
  return result;
}

}  // namespace featflow
