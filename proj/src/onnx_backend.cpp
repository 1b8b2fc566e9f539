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

// ONNX Runtime is reached through its C ABI: OrtGetApiBase() hands out a
// versioned table of function pointers that only ever grows at the end, so
// a slot index is stable across releases. Only the handful of slots below
// are used, which lets the runtime be loaded at run time without headers.

#include "onnx_backend.hpp"

#include <dlfcn.h>

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <mutex>
#include <string>
#include <vector>

#include "vceval/errors.hpp"

namespace vceval {

namespace {

constexpr std::uint32_t kApiVersion = 16;  // ONNX Runtime >= 1.16

// Slot numbers in the OrtApi table.
enum Slot : std::size_t {
  kGetErrorMessage = 2,
  kCreateEnv = 3,
  kCreateSession = 7,
  kRun = 9,
  kCreateSessionOptions = 10,
  kSetIntraOpNumThreads = 24,
  kSetInterOpNumThreads = 25,
  kSessionGetInputCount = 30,
  kSessionGetOutputCount = 31,
  kSessionGetInputTypeInfo = 33,
  kSessionGetOutputTypeInfo = 34,
  kSessionGetInputName = 36,
  kSessionGetOutputName = 37,
  kCreateTensorWithDataAsOrtValue = 49,
  kGetTensorMutableData = 51,
  kCastTypeInfoToTensorInfo = 55,
  kGetTensorElementType = 60,
  kGetDimensionsCount = 61,
  kGetDimensions = 62,
  kGetTensorShapeElementCount = 64,
  kGetTensorTypeAndShape = 65,
  kCreateCpuMemoryInfo = 69,
  kAllocatorFree = 76,
  kGetAllocatorWithDefaultOptions = 78,
  kReleaseEnv = 92,
  kReleaseStatus = 93,
  kReleaseMemoryInfo = 94,
  kReleaseSession = 95,
  kReleaseValue = 96,
  kReleaseTypeInfo = 98,
  kReleaseTensorTypeAndShapeInfo = 99,
  kReleaseSessionOptions = 100,
};

constexpr int kLoggingLevelError = 3;
constexpr int kArenaAllocator = 1;
constexpr int kMemTypeDefault = 0;
constexpr int kElementFloat = 1;

using Status = void*;

struct ApiBase {
  const void* (*get_api)(std::uint32_t version);
  const char* (*get_version_string)();
};

class Runtime {
 public:
  explicit Runtime(const std::vector<std::string>& candidates) {
    std::string errors;
    for (const auto& name : candidates) {
      handle_ = dlopen(name.c_str(), RTLD_NOW | RTLD_LOCAL);
      if (handle_) break;
      errors += "\n  " + name + ": " + dlerror();
    }
    if (!handle_) throw ModelLoadError("cannot load ONNX Runtime:" + errors);
    using GetApiBase = const ApiBase* (*)();
    auto* get_base = reinterpret_cast<GetApiBase>(dlsym(handle_, "OrtGetApiBase"));
    if (!get_base) throw ModelLoadError("OrtGetApiBase not exported by the ONNX Runtime library");
    const ApiBase* base = get_base();
    table_ = static_cast<void* const*>(base->get_api(kApiVersion));
    if (!table_) {
      throw ModelLoadError(std::string("ONNX Runtime ") + base->get_version_string() +
                           " does not provide C API version " + std::to_string(kApiVersion));
    }
    version_ = base->get_version_string();
  }

  // The library stays mapped for the life of the process; sessions may
  // outlive any particular owner.
  Runtime(const Runtime&) = delete;
  Runtime& operator=(const Runtime&) = delete;

  template <typename Fn>
  Fn fn(Slot slot) const {
    return reinterpret_cast<Fn>(table_[slot]);
  }

  // Converts a non-null status into an exception of type E.
  template <typename E = ModelLoadError>
  void check(Status status, const std::string& what) const {
    if (!status) return;
    std::string msg = fn<const char* (*)(const void*)>(kGetErrorMessage)(status);
    fn<void (*)(void*)>(kReleaseStatus)(status);
    throw E(what + ": " + msg);
  }

  void release(Slot slot, void* handle) const {
    if (handle) fn<void (*)(void*)>(slot)(handle);
  }

  const std::string& version() const { return version_; }

 private:
  void* handle_ = nullptr;
  void* const* table_ = nullptr;
  std::string version_;
};

std::vector<std::string> library_candidates(const BackendSpec& spec) {
  if (spec.runtime_library) return {spec.runtime_library->string()};
  if (const char* env = std::getenv("VCEVAL_ONNXRUNTIME"); env && *env) return {env};
  return {"libonnxruntime.so", "libonnxruntime.so.1"};
}

const Runtime& runtime_for(const std::vector<std::string>& candidates) {
  static std::mutex mu;
  static std::vector<std::pair<std::vector<std::string>, std::unique_ptr<Runtime>>> cache;
  std::lock_guard lock(mu);
  for (const auto& [key, rt] : cache) {
    if (key == candidates) return *rt;
  }
  cache.emplace_back(candidates, std::make_unique<Runtime>(candidates));
  return *cache.back().second;
}

struct TensorSignature {
  std::string name;
  int element_type = 0;
  std::vector<std::int64_t> dims;
};

class OnnxBackend final : public Backend {
 public:
  OnnxBackend(const Runtime& rt, const BackendSpec& spec)
      : rt_(rt), model_(spec.path), expected_dim_(spec.expected_dim) {
    try {
      open_session();
      validate_graph();
    } catch (...) {
      release_all();
      throw;
    }
  }

  ~OnnxBackend() override { release_all(); }

  OnnxBackend(const OnnxBackend&) = delete;
  OnnxBackend& operator=(const OnnxBackend&) = delete;

  std::optional<std::size_t> dim() const override {
    std::lock_guard lock(mu_);
    return dim_;
  }

  std::string id() const override { return "onnx:" + model_.filename().string(); }

  SpeakerEmbedding embed(const AudioBuffer& buf, std::string_view) override {
    if (buf.sample_rate != kCanonicalRate) {
      throw RateError("embedding input must be 16000 Hz, got " + std::to_string(buf.sample_rate));
    }
    if (buf.channel_count != 1) throw Error("embedding input must be mono");

    std::vector<float> samples = buf.samples;
    const std::array<std::int64_t, 2> shape = {1, static_cast<std::int64_t>(samples.size())};

    std::lock_guard lock(mu_);
    void* input = nullptr;
    rt_.check<Error>(
        rt_.fn<Status (*)(const void*, void*, std::size_t, const std::int64_t*, std::size_t, int,
                          void**)>(kCreateTensorWithDataAsOrtValue)(
            memory_, samples.data(), samples.size() * sizeof(float), shape.data(), shape.size(),
            kElementFloat, &input),
        "CreateTensor");

    const char* in_names[] = {input_.name.c_str()};
    const char* out_names[] = {output_.name.c_str()};
    void* output = nullptr;
    Status st = rt_.fn<Status (*)(void*, const void*, const char* const*, const void* const*,
                                  std::size_t, const char* const*, std::size_t, void**)>(kRun)(
        session_, nullptr, in_names, &input, 1, out_names, 1, &output);
    rt_.release(kReleaseValue, input);
    rt_.check<Error>(st, "model inference failed");

    SpeakerEmbedding emb;
    try {
      emb.vector = read_output(output);
    } catch (...) {
      rt_.release(kReleaseValue, output);
      throw;
    }
    rt_.release(kReleaseValue, output);

    if (dim_ && *dim_ != emb.vector.size()) {
      throw DimensionMismatch("model produced " + std::to_string(emb.vector.size()) +
                              " values, earlier calls produced " + std::to_string(*dim_));
    }
    if (expected_dim_ && *expected_dim_ != emb.vector.size()) {
      throw DimensionMismatch("model produced " + std::to_string(emb.vector.size()) +
                              " values, expected " + std::to_string(*expected_dim_));
    }
    dim_ = emb.vector.size();
    return emb;
  }

 private:
  void open_session() {
    rt_.check(rt_.fn<Status (*)(int, const char*, void**)>(kCreateEnv)(kLoggingLevelError,
                                                                      "vceval", &env_),
              "CreateEnv");
    void* options = nullptr;
    rt_.check(rt_.fn<Status (*)(void**)>(kCreateSessionOptions)(&options), "CreateSessionOptions");
    // Single-threaded kernels keep reductions in a fixed order.
    Status st = rt_.fn<Status (*)(void*, int)>(kSetIntraOpNumThreads)(options, 1);
    if (!st) st = rt_.fn<Status (*)(void*, int)>(kSetInterOpNumThreads)(options, 1);
    if (!st) {
      st = rt_.fn<Status (*)(const void*, const char*, const void*, void**)>(kCreateSession)(
          env_, model_.c_str(), options, &session_);
    }
    rt_.release(kReleaseSessionOptions, options);
    rt_.check(st, "cannot load model " + model_.string());
    rt_.check(rt_.fn<Status (*)(int, int, void**)>(kCreateCpuMemoryInfo)(
                  kArenaAllocator, kMemTypeDefault, &memory_),
              "CreateCpuMemoryInfo");
  }

  void release_all() {
    rt_.release(kReleaseMemoryInfo, memory_);
    rt_.release(kReleaseSession, session_);
    rt_.release(kReleaseEnv, env_);
    memory_ = session_ = env_ = nullptr;
  }

  TensorSignature describe(bool is_input, std::size_t index) const {
    TensorSignature sig;
    void* allocator = nullptr;
    rt_.check<SchemaError>(rt_.fn<Status (*)(void**)>(kGetAllocatorWithDefaultOptions)(&allocator),
                           "GetAllocator");
    char* name = nullptr;
    rt_.check<SchemaError>(
        rt_.fn<Status (*)(const void*, std::size_t, void*, char**)>(
            is_input ? kSessionGetInputName : kSessionGetOutputName)(session_, index, allocator,
                                                                     &name),
        "GetName");
    sig.name = name;
    rt_.check<SchemaError>(rt_.fn<Status (*)(void*, void*)>(kAllocatorFree)(allocator, name),
                           "AllocatorFree");

    void* type_info = nullptr;
    rt_.check<SchemaError>(rt_.fn<Status (*)(const void*, std::size_t, void**)>(
                               is_input ? kSessionGetInputTypeInfo : kSessionGetOutputTypeInfo)(
                               session_, index, &type_info),
                           "GetTypeInfo");
    const void* tensor_info = nullptr;
    Status st = rt_.fn<Status (*)(const void*, const void**)>(kCastTypeInfoToTensorInfo)(
        type_info, &tensor_info);
    if (!st && tensor_info) {
      st = rt_.fn<Status (*)(const void*, int*)>(kGetTensorElementType)(tensor_info,
                                                                         &sig.element_type);
      std::size_t rank = 0;
      if (!st) st = rt_.fn<Status (*)(const void*, std::size_t*)>(kGetDimensionsCount)(tensor_info, &rank);
      if (!st) {
        sig.dims.resize(rank);
        st = rt_.fn<Status (*)(const void*, std::int64_t*, std::size_t)>(kGetDimensions)(
            tensor_info, sig.dims.data(), rank);
      }
    }
    rt_.release(kReleaseTypeInfo, type_info);
    rt_.check<SchemaError>(st, "tensor type info");
    if (!tensor_info) throw SchemaError("graph " + std::string(is_input ? "input" : "output") +
                                        " '" + sig.name + "' is not a tensor");
    return sig;
  }

  void validate_graph() {
    std::size_t inputs = 0;
    std::size_t outputs = 0;
    rt_.check<SchemaError>(
        rt_.fn<Status (*)(const void*, std::size_t*)>(kSessionGetInputCount)(session_, &inputs),
        "GetInputCount");
    rt_.check<SchemaError>(
        rt_.fn<Status (*)(const void*, std::size_t*)>(kSessionGetOutputCount)(session_, &outputs),
        "GetOutputCount");
    if (inputs != 1 || outputs != 1) {
      throw SchemaError("model must have exactly one input and one output, found " +
                        std::to_string(inputs) + " inputs and " + std::to_string(outputs) +
                        " outputs");
    }
    input_ = describe(true, 0);
    output_ = describe(false, 0);
    for (const auto* sig : {&input_, &output_}) {
      if (sig->element_type != kElementFloat) {
        throw SchemaError("tensor '" + sig->name + "' is not float32");
      }
      if (sig->dims.size() != 2) {
        throw SchemaError("tensor '" + sig->name + "' must have rank 2, has rank " +
                          std::to_string(sig->dims.size()));
      }
      if (sig->dims[0] > 1) throw SchemaError("tensor '" + sig->name + "' batch dimension must be 1");
    }
    if (output_.dims[1] > 0) {
      const auto d = static_cast<std::size_t>(output_.dims[1]);
      if (expected_dim_ && *expected_dim_ != d) {
        throw ModelLoadError("model embedding dimension " + std::to_string(d) +
                             " does not match expected dimension " +
                             std::to_string(*expected_dim_));
      }
      dim_ = d;
    }
  }

  std::vector<double> read_output(void* value) const {
    void* shape_info = nullptr;
    rt_.check<Error>(rt_.fn<Status (*)(const void*, void**)>(kGetTensorTypeAndShape)(value, &shape_info),
                     "output shape");
    std::size_t count = 0;
    std::size_t rank = 0;
    Status st = rt_.fn<Status (*)(const void*, std::size_t*)>(kGetTensorShapeElementCount)(shape_info, &count);
    if (!st) st = rt_.fn<Status (*)(const void*, std::size_t*)>(kGetDimensionsCount)(shape_info, &rank);
    rt_.release(kReleaseTensorTypeAndShapeInfo, shape_info);
    rt_.check<Error>(st, "output shape");
    if (rank != 2 || count == 0) throw SchemaError("model output is not a [1 x D] tensor");

    void* raw = nullptr;
    rt_.check<Error>(rt_.fn<Status (*)(void*, void**)>(kGetTensorMutableData)(value, &raw), "output data");
    const auto* data = static_cast<const float*>(raw);
    std::vector<double> out(data, data + count);
    double norm = 0.0;
    for (double v : out) {
      if (!std::isfinite(v)) throw Error("model produced a non-finite embedding");
      norm += v * v;
    }
    if (norm == 0.0) throw Error("model produced a zero-norm embedding");
    return out;
  }

  const Runtime& rt_;
  std::filesystem::path model_;
  std::optional<std::size_t> expected_dim_;
  void* env_ = nullptr;
  void* session_ = nullptr;
  void* memory_ = nullptr;
  TensorSignature input_;
  TensorSignature output_;

  mutable std::mutex mu_;
  std::optional<std::size_t> dim_;
};

}  // namespace

std::unique_ptr<Backend> make_onnx_backend(const BackendSpec& spec) {
  if (!std::filesystem::is_regular_file(spec.path)) {
    throw ModelLoadError("model file not found: " + spec.path.string());
  }
  const Runtime& rt = runtime_for(library_candidates(spec));
  return std::make_unique<OnnxBackend>(rt, spec);
}

}  // namespace vceval
