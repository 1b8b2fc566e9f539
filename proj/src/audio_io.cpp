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

#include "vceval/audio_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>
#include <string>

#include "vceval/errors.hpp"

namespace vceval {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

bool tag_is(const std::uint8_t* p, const char (&tag)[5]) {
  return std::memcmp(p, tag, 4) == 0;
}

struct FmtChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
};

FmtChunk parse_fmt(const std::uint8_t* p, std::uint32_t size) {
  if (size < 16) throw FormatError("fmt chunk too small");
  FmtChunk fmt;
  fmt.format = read_u16(p);
  fmt.channels = read_u16(p + 2);
  fmt.sample_rate = read_u32(p + 4);
  fmt.block_align = read_u16(p + 12);
  fmt.bits = read_u16(p + 14);
  if (fmt.format == kFormatExtensible) {
    // cbSize(2) validBits(2) channelMask(4) then the sub-format GUID, whose
    // first two bytes carry the real format tag.
    if (size < 40) throw FormatError("extensible fmt chunk too small");
    fmt.format = read_u16(p + 24);
  }
  return fmt;
}

void append_le(std::vector<std::uint8_t>& out, std::uint32_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void append_tag(std::vector<std::uint8_t>& out, const char (&tag)[5]) {
  out.insert(out.end(), tag, tag + 4);
}

double bessel_i0(double x) {
  // Power series; converges quickly for the beta range used here.
  double sum = 1.0;
  double term = 1.0;
  const double half_sq = x * x / 4.0;
  for (int k = 1; k < 200; ++k) {
    term *= half_sq / (static_cast<double>(k) * k);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

}  // namespace

AudioBuffer decode_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || !tag_is(bytes.data(), "RIFF") ||
      !tag_is(bytes.data() + 8, "WAVE")) {
    throw FormatError("missing RIFF/WAVE magic");
  }

  std::size_t pos = 12;
  bool have_fmt = false;
  FmtChunk fmt;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;

  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* hdr = bytes.data() + pos;
    const std::uint32_t size = read_u32(hdr + 4);
    const std::size_t body = pos + 8;
    const std::size_t remaining = bytes.size() - body;
    if (tag_is(hdr, "fmt ")) {
      if (size > remaining) throw FormatError("truncated fmt chunk");
      fmt = parse_fmt(hdr + 8, size);
      have_fmt = true;
    } else if (tag_is(hdr, "data")) {
      if (size > remaining) throw FormatError("truncated data chunk");
      data = hdr + 8;
      data_size = size;
      break;
    }
    if (size > remaining) break;
    pos = body + size + (size & 1u);
  }

  if (!have_fmt) throw FormatError("missing fmt chunk");
  if (data == nullptr) throw FormatError("missing data chunk");
  if (fmt.channels == 0) throw FormatError("zero channels");
  if (fmt.sample_rate == 0) throw FormatError("zero sample rate");

  const bool is_float = fmt.format == kFormatFloat;
  if (is_float) {
    if (fmt.bits != 32) throw FormatError("unsupported float width " + std::to_string(fmt.bits));
  } else if (fmt.format == kFormatPcm) {
    if (fmt.bits != 16 && fmt.bits != 24 && fmt.bits != 32) {
      throw FormatError("unsupported PCM width " + std::to_string(fmt.bits));
    }
  } else {
    throw FormatError("unsupported codec tag " + std::to_string(fmt.format));
  }

  const std::size_t bytes_per_sample = fmt.bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * fmt.channels;
  const std::size_t frames = data_size / frame_bytes;
  if (frames == 0) throw FormatError("empty data chunk");

  AudioBuffer out;
  out.sample_rate = static_cast<int>(fmt.sample_rate);
  out.channel_count = fmt.channels;
  out.samples.resize(frames * fmt.channels);

  const std::uint8_t* p = data;
  for (float& s : out.samples) {
    if (is_float) {
      const float v = std::bit_cast<float>(read_u32(p));
      if (!std::isfinite(v)) throw FormatError("non-finite float sample");
      s = std::clamp(v, -1.0f, 1.0f);
    } else if (fmt.bits == 16) {
      s = static_cast<float>(static_cast<std::int16_t>(read_u16(p)) / 32768.0);
    } else if (fmt.bits == 24) {
      std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
      if (v & 0x800000) v -= 0x1000000;
      s = static_cast<float>(v / 8388608.0);
    } else {
      s = static_cast<float>(static_cast<std::int32_t>(read_u32(p)) / 2147483648.0);
    }
    p += bytes_per_sample;
  }
  return out;
}

AudioBuffer read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  try {
    return decode_wav(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_wav(const AudioBuffer& buf, SampleFormat format) {
  int bits = 32;
  std::uint16_t tag = kFormatPcm;
  switch (format) {
    case SampleFormat::kPcm16: bits = 16; break;
    case SampleFormat::kPcm24: bits = 24; break;
    case SampleFormat::kPcm32: bits = 32; break;
    case SampleFormat::kFloat32: bits = 32; tag = kFormatFloat; break;
  }
  const std::uint32_t bytes_per_sample = bits / 8;
  const std::uint32_t data_size =
      static_cast<std::uint32_t>(buf.samples.size() * bytes_per_sample);

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size + 1);
  append_tag(out, "RIFF");
  append_le(out, 36 + data_size + (data_size & 1u), 4);
  append_tag(out, "WAVE");
  append_tag(out, "fmt ");
  append_le(out, 16, 4);
  append_le(out, tag, 2);
  append_le(out, buf.channel_count, 2);
  append_le(out, buf.sample_rate, 4);
  append_le(out, buf.sample_rate * buf.channel_count * bytes_per_sample, 4);
  append_le(out, buf.channel_count * bytes_per_sample, 2);
  append_le(out, bits, 2);
  append_tag(out, "data");
  append_le(out, data_size, 4);

  for (float s : buf.samples) {
    const double v = std::clamp(static_cast<double>(s), -1.0, 1.0);
    switch (format) {
      case SampleFormat::kFloat32:
        append_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)), 4);
        break;
      case SampleFormat::kPcm16: {
        const auto q = static_cast<std::int32_t>(std::lround(std::min(v * 32768.0, 32767.0)));
        append_le(out, static_cast<std::uint32_t>(q), 2);
        break;
      }
      case SampleFormat::kPcm24: {
        const auto q = static_cast<std::int32_t>(std::lround(std::min(v * 8388608.0, 8388607.0)));
        append_le(out, static_cast<std::uint32_t>(q), 3);
        break;
      }
      case SampleFormat::kPcm32: {
        const auto q = static_cast<std::int64_t>(std::llround(std::min(v * 2147483648.0, 2147483647.0)));
        append_le(out, static_cast<std::uint32_t>(q), 4);
        break;
      }
    }
  }
  if (data_size & 1u) out.push_back(0);
  return out;
}

void write_wav(const std::filesystem::path& path, const AudioBuffer& buf, SampleFormat format) {
  const auto bytes = encode_wav(buf, format);
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("cannot write " + path.string());
}

AudioBuffer downmix_mono(const AudioBuffer& buf) {
  if (buf.channel_count <= 1) return buf;
  const std::size_t channels = buf.channel_count;
  const std::size_t frames = buf.frames();
  AudioBuffer out;
  out.sample_rate = buf.sample_rate;
  out.channel_count = 1;
  out.samples.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) acc += buf.samples[f * channels + c];
    out.samples[f] = static_cast<float>(acc / static_cast<double>(channels));
  }
  return out;
}

AudioBuffer resample(const AudioBuffer& buf, int target_rate) {
  if (target_rate <= 0) throw Error("target rate must be positive");
  if (buf.channel_count != 1) throw Error("resample expects mono input");
  if (target_rate == buf.sample_rate) return buf;

  constexpr int kTaps = 64;
  constexpr int kHalf = kTaps / 2;
  constexpr double kBeta = 8.6;

  const long long g = std::gcd(static_cast<long long>(buf.sample_rate),
                               static_cast<long long>(target_rate));
  const long long up = target_rate / g;           // L
  const long long down = buf.sample_rate / g;     // M
  const double cutoff = 0.95 * std::min(1.0, static_cast<double>(up) / down);
  const double i0_beta = bessel_i0(kBeta);

  // One kernel per output phase. Phase p places the output sample p/L of an
  // input period after input index `base`; taps cover base-31 .. base+32.
  std::vector<double> kernels(static_cast<std::size_t>(up) * kTaps);
  for (long long p = 0; p < up; ++p) {
    const double frac = static_cast<double>(p) / up;
    double* k = &kernels[static_cast<std::size_t>(p) * kTaps];
    double sum = 0.0;
    for (int j = 0; j < kTaps; ++j) {
      const double t = (j - (kHalf - 1)) - frac;
      const double x = cutoff * t;
      const double sinc = x == 0.0 ? 1.0 : std::sin(M_PI * x) / (M_PI * x);
      const double r = t / (kHalf + 1);
      const double win = std::abs(r) < 1.0
                             ? bessel_i0(kBeta * std::sqrt(1.0 - r * r)) / i0_beta
                             : 0.0;
      k[j] = cutoff * sinc * win;
      sum += k[j];
    }
    for (int j = 0; j < kTaps; ++j) k[j] /= sum;
  }

  const long long n_in = static_cast<long long>(buf.samples.size());
  const long long n_out = (n_in * up + down / 2) / down;

  AudioBuffer out;
  out.sample_rate = target_rate;
  out.channel_count = 1;
  out.samples.resize(static_cast<std::size_t>(n_out));
  for (long long m = 0; m < n_out; ++m) {
    const long long pos = m * down;
    const long long base = pos / up;
    const long long phase = pos % up;
    const double* k = &kernels[static_cast<std::size_t>(phase) * kTaps];
    double acc = 0.0;
    for (int j = 0; j < kTaps; ++j) {
      const long long idx = base + j - (kHalf - 1);
      if (idx >= 0 && idx < n_in) acc += k[j] * buf.samples[static_cast<std::size_t>(idx)];
    }
    out.samples[static_cast<std::size_t>(m)] = static_cast<float>(std::clamp(acc, -1.0, 1.0));
  }
  return out;
}

AudioBuffer load_canonical(const std::filesystem::path& path) {
  return resample(downmix_mono(read_wav(path)), kCanonicalRate);
}

}  // namespace vceval
