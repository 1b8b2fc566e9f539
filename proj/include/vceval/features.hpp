// Copyright (c) 2026 vceval authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Acoustic feature extractors. Everything here is a pure function of its
// inputs and runs in double precision, so identical buffers give
// bit-identical results on a given build.

#ifndef VCEVAL_FEATURES_HPP_
#define VCEVAL_FEATURES_HPP_

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vceval/audio_io.hpp"

namespace vceval {

struct FrameParams {
  std::size_t n_fft = 1024;
  std::size_t hop = 256;

  // Throws std::invalid_argument unless 0 < hop <= n_fft and n_fft is a
  // power of two.
  void validate() const;
  // 1 + floor(len / hop): centered framing with n_fft/2 reflect padding.
  std::size_t frame_count(std::size_t len) const { return 1 + len / hop; }
};

// Dense row-major matrix, rows = bins/bands/lags, cols = frames.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

enum class SpectrumKind { kMagnitude, kPower };

struct Spectrogram {
  Matrix values;
  SpectrumKind kind = SpectrumKind::kMagnitude;
  FrameParams frame_params;
  int sample_rate = kCanonicalRate;

  std::size_t bins() const { return values.rows; }
  std::size_t frames() const { return values.cols; }
};

enum class FeatureId {
  kPitch,
  kMelSpectrogram,
  kRms,
  kSpectralCentroid,
  kSpectralFlatness,
  kSpectralRolloff,
  kTempogram,
  kChromagram,
  kPseudoCqt,
  kChromaCqt,
};

// Report column order.
inline constexpr std::array<FeatureId, 10> kAllFeatures = {
    FeatureId::kPitch,           FeatureId::kMelSpectrogram,
    FeatureId::kRms,             FeatureId::kSpectralCentroid,
    FeatureId::kSpectralFlatness, FeatureId::kSpectralRolloff,
    FeatureId::kTempogram,       FeatureId::kChromagram,
    FeatureId::kPseudoCqt,       FeatureId::kChromaCqt,
};

std::string_view feature_name(FeatureId id);
std::optional<FeatureId> parse_feature_id(std::string_view name);
// Declared summary length: 256 for contours, band count for matrices.
std::size_t summary_length(FeatureId id);

struct FeatureSummary {
  FeatureId feature_id;
  std::vector<double> vector;
};

// ---- STFT family -----------------------------------------------------------

// Periodic Hann window of length n.
std::vector<double> hann_window(std::size_t n);

// Magnitude STFT, bins = n_fft/2 + 1. Throws InputTooShort for < 2 samples.
Spectrogram stft(const AudioBuffer& buf, const FrameParams& fp = {});

// Element-wise square of a magnitude spectrogram; power input is copied.
Spectrogram to_power(const Spectrogram& spec);

// Slaney-scale triangular filters, area normalized (2 / bandwidth),
// shape [n_mels x (n_fft/2 + 1)].
Matrix mel_filterbank(int sample_rate, std::size_t n_fft, std::size_t n_mels,
                      double fmin, double fmax);
// Center frequency of each mel band (Hz).
std::vector<double> mel_band_centers(std::size_t n_mels, double fmin, double fmax);

Spectrogram mel_spectrogram(const AudioBuffer& buf, const FrameParams& fp = {},
                            std::size_t n_mels = 128, double fmin = 0.0,
                            double fmax = 8000.0);

// ---- per-frame scalars -----------------------------------------------------

struct YinParams {
  double fmin = 50.0;
  double fmax = 500.0;
  std::size_t frame = 1024;
  std::size_t hop = 256;
  double threshold = 0.1;
};

// YIN f0 per frame in Hz; 0 marks an unvoiced frame.
std::vector<double> f0_contour(const AudioBuffer& buf, const YinParams& params = {});

std::vector<double> rms_envelope(const AudioBuffer& buf, const FrameParams& fp = {});

// Magnitude-weighted mean bin frequency; silent frames give 0.
std::vector<double> spectral_centroid(const Spectrogram& spec);
// Geometric over arithmetic mean of max(power, 1e-10). Magnitude input is
// squared first.
std::vector<double> spectral_flatness(const Spectrogram& spec);
// Lowest bin frequency holding `fraction` of the frame's magnitude.
std::vector<double> spectral_rolloff(const Spectrogram& spec, double fraction = 0.85);

// ---- rhythm ----------------------------------------------------------------

// Mean positive log1p-difference across mel bands; frame 0 is 0.
std::vector<double> onset_strength(const Spectrogram& mel_power);

// Local autocorrelation of the onset envelope over a Hann-windowed
// `win_length`-frame neighbourhood, each column scaled so lag 0 is 1.
// Shape [win_length x frames].
Matrix tempogram(std::span<const double> onset, std::size_t win_length = 384);

// ---- pitch-class family ----------------------------------------------------

// [n_chroma x bins] projection weights; each bin's column sums to 1.
Matrix chroma_filterbank(int sample_rate, std::size_t n_fft, std::size_t n_chroma = 12,
                         double a4_hz = 440.0);
Matrix chroma_stft(const Spectrogram& spec, std::size_t n_chroma = 12, double a4_hz = 440.0);

std::vector<double> pseudo_cqt_frequencies(std::size_t n_bins = 84,
                                           std::size_t bins_per_octave = 12,
                                           double fmin = 32.703);
Matrix pseudo_cqt_filterbank(int sample_rate, std::size_t n_fft, std::size_t n_bins = 84,
                             std::size_t bins_per_octave = 12, double fmin = 32.703);
Matrix pseudo_cqt(const Spectrogram& spec, std::size_t n_bins = 84,
                  std::size_t bins_per_octave = 12, double fmin = 32.703);

// Folds octaves: class c = sum_o pcqt[12 o + c]. Throws DimensionError
// unless the row count is a multiple of 12.
Matrix chroma_cqt(const Matrix& pcqt);

// ---- summaries -------------------------------------------------------------

// Matrix features: per-row time mean. Throws EmptyFeature for zero frames.
FeatureSummary summarize(FeatureId id, const Matrix& raw);
// Scalar contours: linear interpolation onto 256 evenly spaced points.
FeatureSummary summarize(FeatureId id, std::span<const double> raw);

// Runs the requested extractors on a mono buffer, sharing the STFT.
std::map<FeatureId, FeatureSummary> extract_features(const AudioBuffer& buf,
                                                     std::span<const FeatureId> ids,
                                                     const FrameParams& fp = {});

}  // namespace vceval

#endif  // VCEVAL_FEATURES_HPP_
