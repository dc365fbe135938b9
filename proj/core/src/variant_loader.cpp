#include "joulebench/variant_loader.hpp"

#include <dlfcn.h>

#include <algorithm>
#include <limits>
#include <utility>

#include "joulebench/build_harness.hpp"
#include "joulebench/errors.hpp"

namespace joulebench {

LoadedVariant::LoadedVariant(const std::filesystem::path& object_path) {
  handle_ = ::dlopen(object_path.c_str(), RTLD_NOW | RTLD_LOCAL);
  if (handle_ == nullptr) {
    const char* err = ::dlerror();
    throw AbiError(object_path.string() + ": " + (err ? err : "dlopen failed"));
  }
  entry_ = ::dlsym(handle_, kEntrySymbol);
  if (entry_ == nullptr) {
    ::dlclose(handle_);
    handle_ = nullptr;
    throw AbiError(object_path.string() + ": symbol '" + kEntrySymbol + "' not exported");
  }
}

LoadedVariant::~LoadedVariant() {
  if (handle_ != nullptr) ::dlclose(handle_);
}

LoadedVariant::LoadedVariant(LoadedVariant&& other) noexcept
    : handle_(std::exchange(other.handle_, nullptr)), entry_(std::exchange(other.entry_, nullptr)) {}

LoadedVariant& LoadedVariant::operator=(LoadedVariant&& other) noexcept {
  if (this != &other) {
    if (handle_ != nullptr) ::dlclose(handle_);
    handle_ = std::exchange(other.handle_, nullptr);
    entry_ = std::exchange(other.entry_, nullptr);
  }
  return *this;
}

KernelCall::KernelCall(const LoadedVariant& variant, const KernelSpec& kernel,
                       const KernelInputs& inputs, const Sizes& sizes)
    : id_(kernel.id), entry_(variant.entry()) {
  const auto lengths = input_lengths(kernel, sizes);
  if (inputs.arrays.size() != lengths.size() || inputs.arrays[0].size() != lengths[0] ||
      inputs.arrays[1].size() != lengths[1]) {
    throw SpecError("inputs do not match the instantiated shape of " + kernel.name);
  }
  alpha_ = inputs.alpha;
  a_ = inputs.arrays[0];
  b_ = inputs.arrays[1];
  switch (id_) {
    case KernelId::Dot: n_ = sizes.at("n"); break;
    case KernelId::Axpy:
      n_ = sizes.at("n");
      b_initial_ = b_;
      break;
    case KernelId::Matmul:
      m_ = sizes.at("m");
      n_ = sizes.at("n");
      k_ = sizes.at("k");
      out_.assign(static_cast<std::size_t>(m_ * n_), std::numeric_limits<float>::quiet_NaN());
      break;
  }
}

void KernelCall::reset() {
  if (id_ == KernelId::Axpy) b_ = b_initial_;
  // C must be fully overwritten; NaN exposes variants that accumulate into it.
  if (id_ == KernelId::Matmul) std::ranges::fill(out_, std::numeric_limits<float>::quiet_NaN());
}

double KernelCall::invoke() {
  switch (id_) {
    case KernelId::Dot:
      scalar_ = reinterpret_cast<DotEntry>(entry_)(a_.data(), b_.data(), n_);
      return scalar_;
    case KernelId::Axpy:
      reinterpret_cast<AxpyEntry>(entry_)(alpha_, a_.data(), b_.data(), n_);
      return b_[0];
    case KernelId::Matmul:
      reinterpret_cast<MatmulEntry>(entry_)(a_.data(), b_.data(), out_.data(), m_, n_, k_);
      return out_[0];
  }
  return 0;
}

std::vector<double> KernelCall::outputs() const {
  switch (id_) {
    case KernelId::Dot: return {scalar_};
    case KernelId::Axpy: return {b_.begin(), b_.end()};
    case KernelId::Matmul: return {out_.begin(), out_.end()};
  }
  return {};
}

}  // namespace joulebench
