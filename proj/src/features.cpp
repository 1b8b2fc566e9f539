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

#include "vceval/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "vceval/errors.hpp"
#include "vceval/fft.hpp"

namespace vceval {

namespace {

constexpr std::size_t kContourLength = 256;
constexpr double kFlatnessFloor = 1e-10;

struct FeatureInfo {
  FeatureId id;
  std::string_view name;
  std::size_t length;
};

constexpr std::array<FeatureInfo, 10> kFeatureTable = {{
    {FeatureId::kPitch, "pitch", kContourLength},
    {FeatureId::kMelSpectrogram, "mel_spectrogram", 128},
    {FeatureId::kRms, "rms", kContourLength},
    {FeatureId::kSpectralCentroid, "spectral_centroid", kContourLength},
    {FeatureId::kSpectralFlatness, "spectral_flatness", kContourLength},
    {FeatureId::kSpectralRolloff, "spectral_rolloff", kContourLength},
    {FeatureId::kTempogram, "tempogram", 384},
    {FeatureId::kChromagram, "chromagram", 12},
    {FeatureId::kPseudoCqt, "pseudo_cqt", 84},
    {FeatureId::kChromaCqt, "chroma_cqt", 12},
}};

const FeatureInfo& info(FeatureId id) {
  for (const auto& f : kFeatureTable) {
    if (f.id == id) return f;
  }
  throw std::logic_error("unknown feature id");
}

void require_mono(const AudioBuffer& buf) {
  if (buf.channel_count != 1) throw Error("feature extraction expects mono audio");
  if (buf.samples.size() < 2) throw InputTooShort("need at least 2 samples");
}

// Mirror index without repeating the edge sample (numpy "reflect").
std::size_t reflect_index(long long i, std::size_t n) {
  const long long period = 2 * (static_cast<long long>(n) - 1);
  long long m = i % period;
  if (m < 0) m += period;
  if (m >= static_cast<long long>(n)) m = period - m;
  return static_cast<std::size_t>(m);
}

// Copies the centered frame starting at padded offset t*hop into `out`.
void centered_frame(std::span<const float> x, std::size_t t, std::size_t hop,
                    std::span<double> out) {
  const long long start = static_cast<long long>(t * hop) - static_cast<long long>(out.size() / 2);
  const std::size_t n = x.size();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const long long j = start + static_cast<long long>(i);
    out[i] = (j >= 0 && j < static_cast<long long>(n)) ? x[static_cast<std::size_t>(j)]
                                                        : x[reflect_index(j, n)];
  }
}

double bin_frequency(std::size_t b, int sample_rate, std::size_t n_fft) {
  return static_cast<double>(b) * sample_rate / static_cast<double>(n_fft);
}

double hz_to_mel(double hz) {
  constexpr double f_sp = 200.0 / 3.0;
  constexpr double min_log_hz = 1000.0;
  constexpr double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  if (hz >= min_log_hz) return min_log_mel + std::log(hz / min_log_hz) / logstep;
  return hz / f_sp;
}

double mel_to_hz(double mel) {
  constexpr double f_sp = 200.0 / 3.0;
  constexpr double min_log_hz = 1000.0;
  constexpr double min_log_mel = min_log_hz / f_sp;
  const double logstep = std::log(6.4) / 27.0;
  if (mel >= min_log_mel) return min_log_hz * std::exp(logstep * (mel - min_log_mel));
  return f_sp * mel;
}

std::vector<double> mel_edges(std::size_t n_mels, double fmin, double fmax) {
  const double lo = hz_to_mel(fmin);
  const double hi = hz_to_mel(fmax);
  std::vector<double> hz(n_mels + 2);
  for (std::size_t i = 0; i < hz.size(); ++i) {
    hz[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_mels + 1));
  }
  return hz;
}

// out = filters x spec.
Matrix apply_filterbank(const Matrix& filters, const Matrix& spec) {
  if (filters.cols != spec.rows) throw DimensionError("filterbank/spectrogram bin mismatch");
  Matrix out(filters.rows, spec.cols);
  for (std::size_t r = 0; r < filters.rows; ++r) {
    const auto w = filters.row(r);
    auto dst = out.row(r);
    for (std::size_t b = 0; b < filters.cols; ++b) {
      if (w[b] == 0.0) continue;
      const auto src = spec.row(b);
      for (std::size_t t = 0; t < spec.cols; ++t) dst[t] += w[b] * src[t];
    }
  }
  return out;
}

Matrix power_values(const Spectrogram& spec) {
  if (spec.kind == SpectrumKind::kPower) return spec.values;
  Matrix out = spec.values;
  for (double& v : out.data) v *= v;
  return out;
}

void check_finite(const FeatureSummary& s) {
  for (double v : s.vector) {
    if (!std::isfinite(v)) {
      throw Error("non-finite value in " + std::string(feature_name(s.feature_id)) + " summary");
    }
  }
}

}  // namespace

void FrameParams::validate() const {
  if (hop == 0 || hop > n_fft) throw std::invalid_argument("hop must be in (0, n_fft]");
  if (!std::has_single_bit(n_fft)) throw std::invalid_argument("n_fft must be a power of two");
}

std::string_view feature_name(FeatureId id) { return info(id).name; }

std::optional<FeatureId> parse_feature_id(std::string_view name) {
  for (const auto& f : kFeatureTable) {
    if (f.name == name) return f.id;
  }
  return std::nullopt;
}

std::size_t summary_length(FeatureId id) { return info(id).length; }

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n));
  }
  return w;
}

Spectrogram stft(const AudioBuffer& buf, const FrameParams& fp) {
  fp.validate();
  require_mono(buf);
  const RealFft fft(fp.n_fft);
  const auto window = hann_window(fp.n_fft);
  const std::size_t frames = fp.frame_count(buf.samples.size());
  const std::size_t bins = fp.n_fft / 2 + 1;

  Spectrogram spec;
  spec.values = Matrix(bins, frames);
  spec.kind = SpectrumKind::kMagnitude;
  spec.frame_params = fp;
  spec.sample_rate = buf.sample_rate;

  std::vector<double> frame(fp.n_fft);
  for (std::size_t t = 0; t < frames; ++t) {
    centered_frame(buf.samples, t, fp.hop, frame);
    for (std::size_t i = 0; i < fp.n_fft; ++i) frame[i] *= window[i];
    const auto bins_c = fft.forward(frame);
    for (std::size_t b = 0; b < bins; ++b) spec.values.at(b, t) = std::abs(bins_c[b]);
  }
  return spec;
}

Spectrogram to_power(const Spectrogram& spec) {
  Spectrogram out = spec;
  out.values = power_values(spec);
  out.kind = SpectrumKind::kPower;
  return out;
}

Matrix mel_filterbank(int sample_rate, std::size_t n_fft, std::size_t n_mels, double fmin,
                      double fmax) {
  const std::size_t bins = n_fft / 2 + 1;
  const auto edges = mel_edges(n_mels, fmin, fmax);
  Matrix fb(n_mels, bins);
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = edges[m];
    const double mid = edges[m + 1];
    const double hi = edges[m + 2];
    const double enorm = 2.0 / (hi - lo);
    for (std::size_t b = 0; b < bins; ++b) {
      const double f = bin_frequency(b, sample_rate, n_fft);
      const double rising = (f - lo) / (mid - lo);
      const double falling = (hi - f) / (hi - mid);
      fb.at(m, b) = std::max(0.0, std::min(rising, falling)) * enorm;
    }
  }
  return fb;
}

std::vector<double> mel_band_centers(std::size_t n_mels, double fmin, double fmax) {
  const auto edges = mel_edges(n_mels, fmin, fmax);
  return {edges.begin() + 1, edges.end() - 1};
}

Spectrogram mel_spectrogram(const AudioBuffer& buf, const FrameParams& fp, std::size_t n_mels,
                            double fmin, double fmax) {
  const auto power = to_power(stft(buf, fp));
  Spectrogram mel;
  mel.values = apply_filterbank(mel_filterbank(buf.sample_rate, fp.n_fft, n_mels, fmin, fmax),
                                power.values);
  mel.kind = SpectrumKind::kPower;
  mel.frame_params = fp;
  mel.sample_rate = buf.sample_rate;
  return mel;
}

std::vector<double> f0_contour(const AudioBuffer& buf, const YinParams& params) {
  require_mono(buf);
  const double sr = buf.sample_rate;
  const auto tau_min = static_cast<std::size_t>(std::floor(sr / params.fmax));
  const auto tau_max = static_cast<std::size_t>(std::ceil(sr / params.fmin));
  if (tau_min < 1 || tau_max + 1 >= params.frame) {
    throw std::invalid_argument("YIN lag range does not fit the frame");
  }
  const std::size_t integration = params.frame - tau_max;
  const std::size_t frames = 1 + buf.samples.size() / params.hop;

  std::vector<double> f0(frames, 0.0);
  std::vector<double> x(params.frame);
  std::vector<double> cmndf(tau_max + 1);
  for (std::size_t t = 0; t < frames; ++t) {
    centered_frame(buf.samples, t, params.hop, x);

    cmndf[0] = 1.0;
    double running = 0.0;
    for (std::size_t tau = 1; tau <= tau_max; ++tau) {
      double d = 0.0;
      for (std::size_t j = 0; j < integration; ++j) {
        const double diff = x[j] - x[j + tau];
        d += diff * diff;
      }
      running += d;
      cmndf[tau] = running > 0.0 ? d * static_cast<double>(tau) / running : 1.0;
    }

    std::size_t best = 0;
    for (std::size_t tau = tau_min; tau <= tau_max; ++tau) {
      if (cmndf[tau] < params.threshold) {
        while (tau + 1 <= tau_max && cmndf[tau + 1] < cmndf[tau]) ++tau;
        best = tau;
        break;
      }
    }
    if (best == 0) continue;

    double period = static_cast<double>(best);
    if (best > 1 && best < tau_max) {
      const double s0 = cmndf[best - 1];
      const double s1 = cmndf[best];
      const double s2 = cmndf[best + 1];
      const double denom = s0 - 2.0 * s1 + s2;
      if (denom != 0.0) period += std::clamp((s0 - s2) / (2.0 * denom), -1.0, 1.0);
    }
    f0[t] = sr / period;
  }
  return f0;
}

std::vector<double> rms_envelope(const AudioBuffer& buf, const FrameParams& fp) {
  fp.validate();
  require_mono(buf);
  const std::size_t frames = fp.frame_count(buf.samples.size());
  std::vector<double> out(frames);
  std::vector<double> frame(fp.n_fft);
  for (std::size_t t = 0; t < frames; ++t) {
    centered_frame(buf.samples, t, fp.hop, frame);
    double acc = 0.0;
    for (double v : frame) acc += v * v;
    out[t] = std::sqrt(acc / static_cast<double>(fp.n_fft));
  }
  return out;
}

std::vector<double> spectral_centroid(const Spectrogram& spec) {
  const auto& m = spec.values;
  const std::size_t n_fft = spec.frame_params.n_fft;
  std::vector<double> out(m.cols, 0.0);
  for (std::size_t t = 0; t < m.cols; ++t) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t b = 0; b < m.rows; ++b) {
      num += bin_frequency(b, spec.sample_rate, n_fft) * m.at(b, t);
      den += m.at(b, t);
    }
    out[t] = den > 0.0 ? num / den : 0.0;
  }
  return out;
}

std::vector<double> spectral_flatness(const Spectrogram& spec) {
  const Matrix power = power_values(spec);
  std::vector<double> out(power.cols, 0.0);
  const double n = static_cast<double>(power.rows);
  for (std::size_t t = 0; t < power.cols; ++t) {
    double log_sum = 0.0;
    double sum = 0.0;
    for (std::size_t b = 0; b < power.rows; ++b) {
      const double p = std::max(power.at(b, t), kFlatnessFloor);
      log_sum += std::log(p);
      sum += p;
    }
    out[t] = std::min(1.0, std::exp(log_sum / n) / (sum / n));
  }
  return out;
}

std::vector<double> spectral_rolloff(const Spectrogram& spec, double fraction) {
  const auto& m = spec.values;
  const std::size_t n_fft = spec.frame_params.n_fft;
  std::vector<double> out(m.cols, 0.0);
  for (std::size_t t = 0; t < m.cols; ++t) {
    double total = 0.0;
    for (std::size_t b = 0; b < m.rows; ++b) total += m.at(b, t);
    if (total <= 0.0) continue;
    const double target = fraction * total;
    double cum = 0.0;
    for (std::size_t b = 0; b < m.rows; ++b) {
      cum += m.at(b, t);
      if (cum >= target) {
        out[t] = bin_frequency(b, spec.sample_rate, n_fft);
        break;
      }
    }
  }
  return out;
}

std::vector<double> onset_strength(const Spectrogram& mel_power) {
  const auto& m = mel_power.values;
  std::vector<double> out(m.cols, 0.0);
  if (m.rows == 0) return out;
  for (std::size_t t = 1; t < m.cols; ++t) {
    double acc = 0.0;
    for (std::size_t b = 0; b < m.rows; ++b) {
      acc += std::max(0.0, std::log1p(m.at(b, t)) - std::log1p(m.at(b, t - 1)));
    }
    out[t] = acc / static_cast<double>(m.rows);
  }
  return out;
}

Matrix tempogram(std::span<const double> onset, std::size_t win_length) {
  if (win_length == 0) throw std::invalid_argument("win_length must be positive");
  const std::size_t frames = onset.size();
  const std::size_t half = win_length / 2;
  const auto window = hann_window(win_length);
  Matrix out(win_length, frames);
  std::vector<double> seg(win_length);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t i = 0; i < win_length; ++i) {
      const long long j = static_cast<long long>(t + i) - static_cast<long long>(half);
      const double v = (j >= 0 && j < static_cast<long long>(frames))
                           ? onset[static_cast<std::size_t>(j)]
                           : 0.0;
      seg[i] = v * window[i];
    }
    double lag0 = 0.0;
    for (double v : seg) lag0 += v * v;
    if (lag0 <= 0.0) continue;
    for (std::size_t lag = 0; lag < win_length; ++lag) {
      double acc = 0.0;
      for (std::size_t i = 0; i + lag < win_length; ++i) acc += seg[i] * seg[i + lag];
      out.at(lag, t) = acc / lag0;
    }
  }
  return out;
}

Matrix chroma_filterbank(int sample_rate, std::size_t n_fft, std::size_t n_chroma,
                         double a4_hz) {
  const std::size_t bins = n_fft / 2 + 1;
  const double n = static_cast<double>(n_chroma);
  // C0 sits 57 semitones (4 octaves + 9) below A4.
  const double c0 = a4_hz * std::pow(2.0, -57.0 / 12.0);
  Matrix fb(n_chroma, bins);
  for (std::size_t b = 1; b < bins; ++b) {
    const double f = bin_frequency(b, sample_rate, n_fft);
    double pc = std::fmod(n * std::log2(f / c0), n);
    if (pc < 0.0) pc += n;
    double total = 0.0;
    for (std::size_t c = 0; c < n_chroma; ++c) {
      double d = pc - static_cast<double>(c);
      d -= n * std::round(d / n);
      const double w = std::exp(-0.5 * d * d);
      fb.at(c, b) = w;
      total += w;
    }
    for (std::size_t c = 0; c < n_chroma; ++c) fb.at(c, b) /= total;
  }
  return fb;
}

Matrix chroma_stft(const Spectrogram& spec, std::size_t n_chroma, double a4_hz) {
  return apply_filterbank(
      chroma_filterbank(spec.sample_rate, spec.frame_params.n_fft, n_chroma, a4_hz),
      power_values(spec));
}

std::vector<double> pseudo_cqt_frequencies(std::size_t n_bins, std::size_t bins_per_octave,
                                           double fmin) {
  std::vector<double> f(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k) {
    f[k] = fmin * std::pow(2.0, static_cast<double>(k) / static_cast<double>(bins_per_octave));
  }
  return f;
}

Matrix pseudo_cqt_filterbank(int sample_rate, std::size_t n_fft, std::size_t n_bins,
                             std::size_t bins_per_octave, double fmin) {
  const std::size_t bins = n_fft / 2 + 1;
  const double step = std::pow(2.0, 1.0 / static_cast<double>(bins_per_octave));
  const double resolution = bin_frequency(1, sample_rate, n_fft);
  const auto centers = pseudo_cqt_frequencies(n_bins, bins_per_octave, fmin);
  Matrix fb(n_bins, bins);
  for (std::size_t k = 0; k < n_bins; ++k) {
    const double fc = centers[k];
    // Below the STFT resolution a semitone-wide triangle would miss every
    // bin, so each side is at least one bin wide.
    const double left = std::max(fc - fc / step, resolution);
    const double right = std::max(fc * step - fc, resolution);
    for (std::size_t b = 0; b < bins; ++b) {
      const double f = bin_frequency(b, sample_rate, n_fft);
      const double w = f <= fc ? 1.0 - (fc - f) / left : 1.0 - (f - fc) / right;
      fb.at(k, b) = std::max(0.0, w);
    }
  }
  return fb;
}

Matrix pseudo_cqt(const Spectrogram& spec, std::size_t n_bins, std::size_t bins_per_octave,
                  double fmin) {
  return apply_filterbank(pseudo_cqt_filterbank(spec.sample_rate, spec.frame_params.n_fft,
                                                n_bins, bins_per_octave, fmin),
                          power_values(spec));
}

Matrix chroma_cqt(const Matrix& pcqt) {
  if (pcqt.rows == 0 || pcqt.rows % 12 != 0) {
    throw DimensionError("pseudo-CQT bin count " + std::to_string(pcqt.rows) +
                         " is not a multiple of 12");
  }
  Matrix out(12, pcqt.cols);
  for (std::size_t k = 0; k < pcqt.rows; ++k) {
    const auto src = pcqt.row(k);
    auto dst = out.row(k % 12);
    for (std::size_t t = 0; t < pcqt.cols; ++t) dst[t] += src[t];
  }
  return out;
}

FeatureSummary summarize(FeatureId id, const Matrix& raw) {
  if (raw.cols == 0 || raw.rows == 0) {
    throw EmptyFeature(std::string(feature_name(id)) + " has no frames");
  }
  FeatureSummary s{id, std::vector<double>(raw.rows, 0.0)};
  for (std::size_t r = 0; r < raw.rows; ++r) {
    double acc = 0.0;
    for (double v : raw.row(r)) acc += v;
    s.vector[r] = acc / static_cast<double>(raw.cols);
  }
  check_finite(s);
  return s;
}

FeatureSummary summarize(FeatureId id, std::span<const double> raw) {
  if (raw.empty()) throw EmptyFeature(std::string(feature_name(id)) + " has no frames");
  FeatureSummary s{id, std::vector<double>(kContourLength)};
  const std::size_t last = raw.size() - 1;
  for (std::size_t i = 0; i < kContourLength; ++i) {
    if (last == 0) {
      s.vector[i] = raw[0];
      continue;
    }
    const double x = static_cast<double>(i) * static_cast<double>(last) /
                     static_cast<double>(kContourLength - 1);
    const auto j = static_cast<std::size_t>(x);
    if (j >= last) {
      s.vector[i] = raw[last];
    } else {
      const double frac = x - static_cast<double>(j);
      s.vector[i] = raw[j] * (1.0 - frac) + raw[j + 1] * frac;
    }
  }
  check_finite(s);
  return s;
}

std::map<FeatureId, FeatureSummary> extract_features(const AudioBuffer& buf,
                                                     std::span<const FeatureId> ids,
                                                     const FrameParams& fp) {
  std::map<FeatureId, FeatureSummary> out;
  if (ids.empty()) return out;
  require_mono(buf);

  const auto wants = [&](FeatureId id) { return std::find(ids.begin(), ids.end(), id) != ids.end(); };
  const bool need_spec = std::any_of(ids.begin(), ids.end(), [](FeatureId id) {
    return id != FeatureId::kPitch && id != FeatureId::kRms;
  });

  std::optional<Spectrogram> mag;
  std::optional<Spectrogram> power;
  if (need_spec) {
    mag = stft(buf, fp);
    power = to_power(*mag);
  }

  if (wants(FeatureId::kPitch)) {
    YinParams yin;
    yin.frame = fp.n_fft;
    yin.hop = fp.hop;
    out.emplace(FeatureId::kPitch, summarize(FeatureId::kPitch, f0_contour(buf, yin)));
  }
  if (wants(FeatureId::kRms)) {
    out.emplace(FeatureId::kRms, summarize(FeatureId::kRms, rms_envelope(buf, fp)));
  }
  if (wants(FeatureId::kMelSpectrogram) || wants(FeatureId::kTempogram)) {
    Spectrogram mel;
    mel.values = apply_filterbank(mel_filterbank(buf.sample_rate, fp.n_fft, 128, 0.0, 8000.0),
                                  power->values);
    mel.kind = SpectrumKind::kPower;
    mel.frame_params = fp;
    mel.sample_rate = buf.sample_rate;
    if (wants(FeatureId::kMelSpectrogram)) {
      out.emplace(FeatureId::kMelSpectrogram, summarize(FeatureId::kMelSpectrogram, mel.values));
    }
    if (wants(FeatureId::kTempogram)) {
      out.emplace(FeatureId::kTempogram,
                  summarize(FeatureId::kTempogram, tempogram(onset_strength(mel))));
    }
  }
  if (wants(FeatureId::kSpectralCentroid)) {
    out.emplace(FeatureId::kSpectralCentroid,
                summarize(FeatureId::kSpectralCentroid, spectral_centroid(*mag)));
  }
  if (wants(FeatureId::kSpectralFlatness)) {
    out.emplace(FeatureId::kSpectralFlatness,
                summarize(FeatureId::kSpectralFlatness, spectral_flatness(*power)));
  }
  if (wants(FeatureId::kSpectralRolloff)) {
    out.emplace(FeatureId::kSpectralRolloff,
                summarize(FeatureId::kSpectralRolloff, spectral_rolloff(*mag)));
  }
  if (wants(FeatureId::kChromagram)) {
    out.emplace(FeatureId::kChromagram, summarize(FeatureId::kChromagram, chroma_stft(*power)));
  }
  if (wants(FeatureId::kPseudoCqt) || wants(FeatureId::kChromaCqt)) {
    const Matrix pcqt = pseudo_cqt(*power);
    if (wants(FeatureId::kPseudoCqt)) {
      out.emplace(FeatureId::kPseudoCqt, summarize(FeatureId::kPseudoCqt, pcqt));
    }
    if (wants(FeatureId::kChromaCqt)) {
      out.emplace(FeatureId::kChromaCqt, summarize(FeatureId::kChromaCqt, chroma_cqt(pcqt)));
    }
  }
  return out;
}

}  // namespace vceval
