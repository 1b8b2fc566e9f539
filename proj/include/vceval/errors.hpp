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

#ifndef VCEVAL_ERRORS_HPP_
#define VCEVAL_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace vceval {

// Root of every error the library throws. Subclasses only exist so callers
// can dispatch on the failure kind.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define VCEVAL_DEFINE_ERROR(Name)            \
  class Name : public Error {                \
   public:                                   \
    using Error::Error;                      \
  }

// audio_io
VCEVAL_DEFINE_ERROR(FormatError);
// dsp_features
VCEVAL_DEFINE_ERROR(InputTooShort);
VCEVAL_DEFINE_ERROR(DimensionError);
VCEVAL_DEFINE_ERROR(EmptyFeature);
// embedding_backend
VCEVAL_DEFINE_ERROR(ModelLoadError);
VCEVAL_DEFINE_ERROR(SchemaError);
VCEVAL_DEFINE_ERROR(RateError);
VCEVAL_DEFINE_ERROR(MissingEmbedding);
VCEVAL_DEFINE_ERROR(ParseError);
VCEVAL_DEFINE_ERROR(DimensionMismatch);
// similarity
VCEVAL_DEFINE_ERROR(LengthMismatch);
// pipeline
VCEVAL_DEFINE_ERROR(NoPairs);
VCEVAL_DEFINE_ERROR(EmptyInput);
VCEVAL_DEFINE_ERROR(IoError);
VCEVAL_DEFINE_ERROR(TooFewSamples);

#undef VCEVAL_DEFINE_ERROR

}  // namespace vceval

#endif  // VCEVAL_ERRORS_HPP_
