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

#ifndef VCEVAL_AUDIO_IO_HPP_
#define VCEVAL_AUDIO_IO_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace vceval {

// Rate every buffer is brought to before embedding and feature extraction.
inline constexpr int kCanonicalRate = 16000;

// Interleaved PCM audio. Samples are normalized to [-1, 1].
struct AudioBuffer {
  std::vector<float> samples;
  int sample_rate = 0;
  int channel_count = 1;

  std::size_t frames() const {
    return channel_count > 0 ? samples.size() / channel_count : 0;
  }
};

enum class SampleFormat { kPcm16, kPcm24, kPcm32, kFloat32 };

// Parses a RIFF/WAVE byte image. Accepts PCM 16/24/32-bit little-endian
// and IEEE float32 (plain or WAVE_FORMAT_EXTENSIBLE). Chunks other than
// `fmt ` and `data` are skipped. Throws FormatError.
AudioBuffer decode_wav(std::span<const std::uint8_t> bytes);

// Reads and decodes a file; I/O failures surface as FormatError too, since
// the caller can do nothing different about either.
AudioBuffer read_wav(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_wav(const AudioBuffer& buf,
                                     SampleFormat format = SampleFormat::kFloat32);
void write_wav(const std::filesystem::path& path, const AudioBuffer& buf,
               SampleFormat format = SampleFormat::kFloat32);

// Arithmetic mean over channels. Mono input is returned unchanged.
AudioBuffer downmix_mono(const AudioBuffer& buf);

// Band-limited rational-ratio conversion: polyphase windowed sinc with a
// Kaiser window (beta 8.6) and 64 taps per phase. Output length is
// round(N * target / source). Returns the input untouched when the rates
// already agree. `buf` must be mono.
AudioBuffer resample(const AudioBuffer& buf, int target_rate);

// decode -> downmix -> resample to kCanonicalRate.
AudioBuffer load_canonical(const std::filesystem::path& path);

}  // namespace vceval

#endif  // VCEVAL_AUDIO_IO_HPP_
