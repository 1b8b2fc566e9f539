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

#ifndef VCEVAL_SRC_ONNX_BACKEND_HPP_
#define VCEVAL_SRC_ONNX_BACKEND_HPP_

#include <memory>

#include "vceval/embedding.hpp"

namespace vceval {

// Backend running an ONNX graph [1 x samples] float -> [1 x D] float through
// a dynamically loaded ONNX Runtime.
std::unique_ptr<Backend> make_onnx_backend(const BackendSpec& spec);

}  // namespace vceval

#endif  // VCEVAL_SRC_ONNX_BACKEND_HPP_
