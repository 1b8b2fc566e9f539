#include <cmath>
#include <cstdint>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "test_support.hpp"
#include "vceval/audio_io.hpp"
#include "vceval/errors.hpp"

using namespace vceval;
using namespace vceval::testing;

namespace {

// Builds a WAV image by hand so the decoder is not tested against its own
// encoder.
struct WavBuilder {
  std::uint16_t tag = 1;
  std::uint16_t channels = 1;
  std::uint32_t rate = 8000;
  std::uint16_t bits = 16;
  bool extensible = false;
  std::vector<std::uint8_t> data;
  std::vector<std::uint8_t> extra_chunk;  // inserted between fmt and data

  static void put(std::vector<std::uint8_t>& v, std::uint64_t x, int n) {
    for (int i = 0; i < n; ++i) v.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
  }
  static void tag4(std::vector<std::uint8_t>& v, const char* s) { v.insert(v.end(), s, s + 4); }

  std::vector<std::uint8_t> build(std::int64_t data_size_override = -1) const {
    std::vector<std::uint8_t> fmt;
    put(fmt, extensible ? 0xFFFE : tag, 2);
    put(fmt, channels, 2);
    put(fmt, rate, 4);
    put(fmt, rate * channels * bits / 8, 4);
    put(fmt, channels * bits / 8, 2);
    put(fmt, bits, 2);
    if (extensible) {
      put(fmt, 22, 2);
      put(fmt, bits, 2);
      put(fmt, 0, 4);
      put(fmt, tag, 2);  // first two bytes of the sub-format GUID
      const std::uint8_t guid_tail[14] = {0x00, 0x00, 0x00, 0x00, 0x10, 0x00, 0x80,
                                          0x00, 0x00, 0xAA, 0x00, 0x38, 0x9B, 0x71};
      fmt.insert(fmt.end(), guid_tail, guid_tail + 14);
    }
    std::vector<std::uint8_t> body;
    tag4(body, "WAVE");
    tag4(body, "fmt ");
    put(body, fmt.size(), 4);
    body.insert(body.end(), fmt.begin(), fmt.end());
    body.insert(body.end(), extra_chunk.begin(), extra_chunk.end());
    tag4(body, "data");
    put(body, data_size_override >= 0 ? static_cast<std::uint64_t>(data_size_override) : data.size(), 4);
    body.insert(body.end(), data.begin(), data.end());
    std::vector<std::uint8_t> out;
    tag4(out, "RIFF");
    put(out, body.size(), 4);
    out.insert(out.end(), body.begin(), body.end());
    return out;
  }
};

}  // namespace

TEST_CASE("16-bit PCM is scaled by 1/32768") {
  WavBuilder w;
  for (std::int16_t s : {0, 16384, -16384, -32768}) WavBuilder::put(w.data, static_cast<std::uint16_t>(s), 2);
  const auto buf = decode_wav(w.build());
  CHECK(buf.sample_rate == 8000);
  CHECK(buf.channel_count == 1);
  REQUIRE(buf.samples.size() == 4);
  CHECK(buf.samples[0] == 0.0f);
  CHECK(buf.samples[1] == 0.5f);
  CHECK(buf.samples[2] == -0.5f);
  CHECK(buf.samples[3] == -1.0f);
}

TEST_CASE("24-bit and 32-bit PCM") {
  WavBuilder w24;
  w24.bits = 24;
  WavBuilder::put(w24.data, 0x400000, 3);  // +0.5
  WavBuilder::put(w24.data, 0x800000, 3);  // -1.0
  const auto b24 = decode_wav(w24.build());
  REQUIRE(b24.samples.size() == 2);
  CHECK(b24.samples[0] == 0.5f);
  CHECK(b24.samples[1] == -1.0f);

  WavBuilder w32;
  w32.bits = 32;
  WavBuilder::put(w32.data, 0xC0000000u, 4);  // -0.5
  const auto b32 = decode_wav(w32.build());
  REQUIRE(b32.samples.size() == 1);
  CHECK(b32.samples[0] == -0.5f);
}

TEST_CASE("float32 stereo passes through with its channel count") {
  WavBuilder w;
  w.tag = 3;
  w.bits = 32;
  w.channels = 2;
  w.rate = 44100;
  for (int i = 0; i < 200; ++i) {
    float f = 0.001f * static_cast<float>(i);
    std::uint32_t u;
    std::memcpy(&u, &f, 4);
    WavBuilder::put(w.data, u, 4);
  }
  const auto buf = decode_wav(w.build());
  CHECK(buf.channel_count == 2);
  CHECK(buf.frames() == 100);
  CHECK(buf.samples[7] == doctest::Approx(0.007f).epsilon(1e-7));
}

TEST_CASE("WAVE_FORMAT_EXTENSIBLE and unknown chunks") {
  WavBuilder w;
  w.extensible = true;
  w.bits = 16;
  WavBuilder::tag4(w.extra_chunk, "LIST");
  WavBuilder::put(w.extra_chunk, 3, 4);
  w.extra_chunk.insert(w.extra_chunk.end(), {'a', 'b', 'c', 0});  // odd size plus pad byte
  WavBuilder::put(w.data, 0x2000, 2);
  const auto buf = decode_wav(w.build());
  REQUIRE(buf.samples.size() == 1);
  CHECK(buf.samples[0] == 0.25f);
}

TEST_CASE("malformed containers raise FormatError") {
  WavBuilder w;
  WavBuilder::put(w.data, 0, 2);
  auto bytes = w.build();

  auto rifx = bytes;
  rifx[3] = 'X';
  CHECK_THROWS_AS(decode_wav(rifx), FormatError);

  auto wave = bytes;
  wave[8] = 'X';
  CHECK_THROWS_AS(decode_wav(wave), FormatError);

  CHECK_THROWS_AS(decode_wav(w.build(1000)), FormatError);  // truncated data

  WavBuilder alaw;
  alaw.tag = 6;
  alaw.bits = 8;
  alaw.data = {1, 2};
  CHECK_THROWS_AS(decode_wav(alaw.build()), FormatError);

  WavBuilder pcm8;
  pcm8.bits = 8;
  pcm8.data = {1, 2};
  CHECK_THROWS_AS(decode_wav(pcm8.build()), FormatError);

  CHECK_THROWS_AS(decode_wav(std::vector<std::uint8_t>{}), FormatError);
  CHECK_THROWS_AS(read_wav("/nonexistent/file.wav"), FormatError);
}

TEST_CASE("encode/decode round trip") {
  const auto src = tone(330.0, 0.05, 22050, 0.9);
  SUBCASE("float32 is lossless") {
    const auto back = decode_wav(encode_wav(src, SampleFormat::kFloat32));
    CHECK(back.samples == src.samples);
    CHECK(back.sample_rate == 22050);
  }
  SUBCASE("pcm16 within one step") {
    const auto back = decode_wav(encode_wav(src, SampleFormat::kPcm16));
    REQUIRE(back.samples.size() == src.samples.size());
    for (std::size_t i = 0; i < src.samples.size(); ++i) {
      CHECK(std::abs(back.samples[i] - src.samples[i]) <= 1.0f / 32768.0f);
    }
  }
  SUBCASE("pcm24") {
    const auto back = decode_wav(encode_wav(src, SampleFormat::kPcm24));
    for (std::size_t i = 0; i < src.samples.size(); ++i) {
      CHECK(std::abs(back.samples[i] - src.samples[i]) <= 1.0f / 8388608.0f);
    }
  }
}

TEST_CASE("decoding is deterministic and stays in [-1, 1]") {
  auto loud = tone(100.0, 0.01, 16000, 1.0);
  loud.samples[3] = 1.5f;  // float files may exceed full scale
  const auto bytes = encode_wav(loud, SampleFormat::kFloat32);
  const auto a = decode_wav(bytes);
  const auto b = decode_wav(bytes);
  CHECK(a.samples == b.samples);
  for (float s : a.samples) CHECK(std::abs(s) <= 1.0f + 1e-6f);
}

TEST_CASE("downmix is the channel mean") {
  AudioBuffer st;
  st.sample_rate = 16000;
  st.channel_count = 2;
  st.samples = {1.0f, 0.0f, 0.8f, -0.8f, -0.5f, -0.25f};
  const auto m = downmix_mono(st);
  CHECK(m.channel_count == 1);
  REQUIRE(m.samples.size() == 3);
  CHECK(m.samples[0] == 0.5f);
  CHECK(m.samples[1] == 0.0f);
  CHECK(m.samples[2] == -0.375f);

  const auto mono_in = tone(200.0, 0.01);
  CHECK(downmix_mono(mono_in).samples == mono_in.samples);
}

TEST_CASE("resample: identity, lengths, spectral peak") {
  const auto x = tone(1000.0, 1.0, 48000, 0.5);
  CHECK(resample(x, 48000).samples == x.samples);

  const auto y = resample(x, 16000);
  CHECK(y.sample_rate == 16000);
  CHECK(y.samples.size() == 16000);

  for (auto [src, dst] : {std::pair{44100, 16000}, {22050, 16000}, {8000, 16000}, {16000, 11025}}) {
    const auto in = tone(300.0, 0.37, src, 0.5);
    const auto out = resample(in, dst);
    const double want = std::round(static_cast<double>(in.samples.size()) * dst / src);
    CHECK(std::abs(static_cast<double>(out.samples.size()) - want) <= 1.0);
  }

  const auto mag = dft_magnitude(std::span<const float>(y.samples).subspan(4000, 2048), 2048);
  CHECK(std::abs(static_cast<double>(argmax(mag)) * 16000.0 / 2048.0 - 1000.0) <= 7.8125);
}

TEST_CASE("resample preserves passband energy within 0.5 dB") {
  for (double hz : {200.0, 1000.0, 3000.0, 6000.0}) {
    const auto x = tone(hz, 0.5, 44100, 0.5);
    const auto y = resample(x, 16000);
    const auto energy = [](const AudioBuffer& b, std::size_t skip) {
      double e = 0.0;
      std::size_t n = 0;
      for (std::size_t i = skip; i + skip < b.samples.size(); ++i, ++n) e += double(b.samples[i]) * b.samples[i];
      return e / static_cast<double>(n);
    };
    const double db = 10.0 * std::log10(energy(y, 200) / energy(x, 600));
    CHECK(std::abs(db) < 0.5);
  }
}

TEST_CASE("resample removes content above the new Nyquist") {
  const auto x = tone(12000.0, 0.5, 48000, 0.5);  // above 8 kHz
  const auto y = resample(x, 16000);
  double e = 0.0;
  for (std::size_t i = 200; i + 200 < y.samples.size(); ++i) e += double(y.samples[i]) * y.samples[i];
  CHECK(e / static_cast<double>(y.samples.size()) < 1e-4 * 0.125);  // at least 40 dB down
}

TEST_CASE("load_canonical downmixes and resamples") {
  TempDir dir;
  AudioBuffer st;
  st.sample_rate = 32000;
  st.channel_count = 2;
  const auto t = tone(500.0, 0.5, 32000, 0.5);
  for (float s : t.samples) {
    st.samples.push_back(s);
    st.samples.push_back(s);
  }
  write_wav(dir / "st.wav", st, SampleFormat::kPcm24);
  const auto buf = load_canonical(dir / "st.wav");
  CHECK(buf.sample_rate == kCanonicalRate);
  CHECK(buf.channel_count == 1);
  CHECK(buf.samples.size() == 8000);
}
