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

#ifndef VCEVAL_FFT_HPP_
#define VCEVAL_FFT_HPP_

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace vceval {

// Precomputed radix-2 plan. Immutable after construction, so one plan can be
// shared between threads.
class RealFft {
 public:
  explicit RealFft(std::size_t n);

  std::size_t size() const { return n_; }

  // `in` has size() samples; returns size()/2 + 1 bins.
  std::vector<std::complex<double>> forward(std::span<const double> in) const;

 private:
  void transform(std::vector<std::complex<double>>& data) const;

  std::size_t n_;
  std::vector<std::size_t> bitrev_;
  std::vector<std::complex<double>> twiddles_;
};

}  // namespace vceval

#endif  // VCEVAL_FFT_HPP_
