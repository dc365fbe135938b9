#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "joulebench/kernel_model.hpp"

namespace joulebench {

using DotEntry = double (*)(const float*, const float*, std::int64_t);
using AxpyEntry = void (*)(float, const float*, float*, std::int64_t);
using MatmulEntry = void (*)(const float*, const float*, float*, std::int64_t, std::int64_t,
                             std::int64_t);

/// Owns a dlopen handle to a compiled variant. Only child processes map
/// variants; the harness itself never does.
class LoadedVariant {
 public:
  /// Throws AbiError when the object cannot be loaded or lacks kernel_entry.
  explicit LoadedVariant(const std::filesystem::path& object_path);
  ~LoadedVariant();
  LoadedVariant(LoadedVariant&& other) noexcept;
  LoadedVariant& operator=(LoadedVariant&& other) noexcept;
  LoadedVariant(const LoadedVariant&) = delete;
  LoadedVariant& operator=(const LoadedVariant&) = delete;

  void* entry() const { return entry_; }

 private:
  void* handle_ = nullptr;
  void* entry_ = nullptr;
};

/// Input/output buffers for repeated invocations of one variant on one
/// workload. Inputs are private copies; axpy's y is restored by reset().
class KernelCall {
 public:
  KernelCall(const LoadedVariant& variant, const KernelSpec& kernel, const KernelInputs& inputs,
             const Sizes& sizes);

  /// Restores in-place outputs to the original inputs.
  void reset();
  /// One kernel invocation. Returns a value derived from the output so the
  /// call cannot be elided (the dot result, else the first output element).
  double invoke();
  /// Outputs of the most recent invocation, widened to double.
  std::vector<double> outputs() const;

 private:
  KernelId id_;
  void* entry_;
  std::int64_t m_ = 0, n_ = 0, k_ = 0;
  float alpha_ = 0;
  std::vector<float> a_, b_, b_initial_, out_;
  double scalar_ = 0;
};

}  // namespace joulebench
