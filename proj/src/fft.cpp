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

#include "vceval/fft.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace vceval {

RealFft::RealFft(std::size_t n) : n_(n) {
  if (n < 2 || !std::has_single_bit(n)) {
    throw std::invalid_argument("FFT size must be a power of two >= 2");
  }
  const int bits = std::countr_zero(n);
  bitrev_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = 0;
    for (int b = 0; b < bits; ++b) r |= ((i >> b) & 1u) << (bits - 1 - b);
    bitrev_[i] = r;
  }
  twiddles_.resize(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double angle = -2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n);
    twiddles_[k] = {std::cos(angle), std::sin(angle)};
  }
}

void RealFft::transform(std::vector<std::complex<double>>& data) const {
  for (std::size_t i = 0; i < n_; ++i) {
    if (i < bitrev_[i]) std::swap(data[i], data[bitrev_[i]]);
  }
  for (std::size_t len = 2; len <= n_; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n_ / len;
    for (std::size_t start = 0; start < n_; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const auto w = twiddles_[k * stride];
        const auto a = data[start + k];
        const auto b = data[start + k + half] * w;
        data[start + k] = a + b;
        data[start + k + half] = a - b;
      }
    }
  }
}

std::vector<std::complex<double>> RealFft::forward(std::span<const double> in) const {
  if (in.size() != n_) throw std::invalid_argument("FFT input length mismatch");
  std::vector<std::complex<double>> data(in.begin(), in.end());
  transform(data);
  data.resize(n_ / 2 + 1);
  return data;
}

}  // namespace vceval
