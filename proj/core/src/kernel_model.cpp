#include "joulebench/kernel_model.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "joulebench/errors.hpp"

namespace joulebench {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::ranges::transform(out, out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

const std::vector<KernelSpec>& catalog() {
  static const std::vector<KernelSpec> kernels = {
      {KernelId::Dot, "dot", ElementType::F32, 2, false, {"n"}, OutputKind::Scalar,
       "double kernel_entry(const float* a, const float* b, int64_t n)",
       "the vector dot product: return the sum over i of a[i] * b[i] for two float arrays of "
       "length n, accumulated in a double"},
      {KernelId::Axpy, "axpy", ElementType::F32, 2, true, {"n"}, OutputKind::Vector,
       "void kernel_entry(float a, const float* x, float* y, int64_t n)",
       "single-precision axpy: overwrite y[i] with a * x[i] + y[i] for i in [0, n)"},
      {KernelId::Matmul, "matmul", ElementType::F32, 2, false, {"m", "n", "k"}, OutputKind::Matrix,
       "void kernel_entry(const float* A, const float* B, float* C, int64_t m, int64_t n, "
       "int64_t k)",
       "dense matrix multiplication C = A * B with row-major float matrices, A of shape m x k, "
       "B of shape k x n and C of shape m x n (C is fully overwritten)"},
  };
  return kernels;
}

}  // namespace

std::string_view to_string(KernelId id) {
  switch (id) {
    case KernelId::Dot: return "dot";
    case KernelId::Axpy: return "axpy";
    case KernelId::Matmul: return "matmul";
  }
  return "?";
}

std::string_view to_string(ElementType t) { return t == ElementType::F32 ? "f32" : "f64"; }

std::string_view to_string(VariantKind kind) {
  switch (kind) {
    case VariantKind::Scalar: return "Scalar";
    case VariantKind::OpenMP: return "OpenMP";
    case VariantKind::SimdNeon: return "SimdNeon";
    case VariantKind::SimdAvx2: return "SimdAvx2";
    case VariantKind::OpenMpSimdNeon: return "OpenMpSimdNeon";
    case VariantKind::OpenMpSimdAvx2: return "OpenMpSimdAvx2";
  }
  return "?";
}

std::string_view to_string(TargetArch arch) { return arch == TargetArch::ARM64 ? "ARM64" : "AMD64"; }

std::string_view slug(VariantKind kind) {
  switch (kind) {
    case VariantKind::Scalar: return "scalar";
    case VariantKind::OpenMP: return "openmp";
    case VariantKind::SimdNeon: return "simd_neon";
    case VariantKind::SimdAvx2: return "simd_avx2";
    case VariantKind::OpenMpSimdNeon: return "openmp_simd_neon";
    case VariantKind::OpenMpSimdAvx2: return "openmp_simd_avx2";
  }
  return "?";
}

std::string_view slug(TargetArch arch) { return arch == TargetArch::ARM64 ? "arm64" : "amd64"; }

KernelId parse_kernel_id(std::string_view s) {
  const auto l = lower(s);
  for (const auto& k : catalog()) {
    if (k.name == l) return k.id;
  }
  throw SpecError("unknown kernel '" + std::string(s) + "' (expected dot, axpy or matmul)");
}

VariantKind parse_variant_kind(std::string_view s) {
  const auto l = lower(s);
  for (auto kind : kAllVariantKinds) {
    if (lower(to_string(kind)) == l || slug(kind) == l) return kind;
  }
  throw SpecError("unknown variant kind '" + std::string(s) + "'");
}

TargetArch parse_target_arch(std::string_view s) {
  const auto l = lower(s);
  if (l == "arm64" || l == "aarch64") return TargetArch::ARM64;
  if (l == "amd64" || l == "x86_64" || l == "x86-64") return TargetArch::AMD64;
  throw SpecError("unknown target architecture '" + std::string(s) + "'");
}

bool kind_valid_for(VariantKind kind, TargetArch arch) {
  switch (kind) {
    case VariantKind::Scalar:
    case VariantKind::OpenMP: return true;
    case VariantKind::SimdNeon:
    case VariantKind::OpenMpSimdNeon: return arch == TargetArch::ARM64;
    case VariantKind::SimdAvx2:
    case VariantKind::OpenMpSimdAvx2: return arch == TargetArch::AMD64;
  }
  return false;
}

bool uses_openmp(VariantKind kind) {
  return kind == VariantKind::OpenMP || kind == VariantKind::OpenMpSimdNeon ||
         kind == VariantKind::OpenMpSimdAvx2;
}

bool uses_simd(VariantKind kind) {
  return kind != VariantKind::Scalar && kind != VariantKind::OpenMP;
}

std::vector<VariantKind> kinds_for(TargetArch arch) {
  std::vector<VariantKind> out;
  for (auto kind : kAllVariantKinds) {
    if (kind_valid_for(kind, arch)) out.push_back(kind);
  }
  return out;
}

TargetArch host_arch() {
#if defined(__aarch64__) || defined(_M_ARM64)
  return TargetArch::ARM64;
#elif defined(__x86_64__) || defined(_M_X64)
  return TargetArch::AMD64;
#else
#error "unsupported host architecture"
#endif
}

std::vector<KernelSpec> builtin_kernels() { return catalog(); }

const KernelSpec& kernel_spec(KernelId id) {
  for (const auto& k : catalog()) {
    if (k.id == id) return k;
  }
  throw SpecError("unknown kernel id");
}

const KernelSpec& kernel_spec(std::string_view name) { return kernel_spec(parse_kernel_id(name)); }

WorkloadSpec square_workload(const KernelSpec& kernel, std::int64_t size, std::uint64_t seed,
                             Distribution distribution) {
  WorkloadSpec w;
  for (const auto& p : kernel.shape_params) w.sizes[p] = size;
  w.seed = seed;
  w.distribution = distribution;
  return w;
}

void check_sizes(const KernelSpec& kernel, const Sizes& sizes) {
  for (const auto& p : kernel.shape_params) {
    auto it = sizes.find(p);
    if (it == sizes.end()) {
      throw SpecError("kernel " + kernel.name + ": missing size parameter '" + p + "'");
    }
    if (it->second < 1) {
      throw SpecError("kernel " + kernel.name + ": size parameter '" + p +
                      "' must be >= 1, got " + std::to_string(it->second));
    }
  }
}

std::int64_t reduction_depth(const KernelSpec& kernel, const Sizes& sizes) {
  check_sizes(kernel, sizes);
  switch (kernel.id) {
    case KernelId::Dot: return sizes.at("n");
    case KernelId::Axpy: return 2;
    case KernelId::Matmul: return sizes.at("k");
  }
  return 1;
}

std::vector<std::size_t> input_lengths(const KernelSpec& kernel, const Sizes& sizes) {
  check_sizes(kernel, sizes);
  switch (kernel.id) {
    case KernelId::Dot:
    case KernelId::Axpy: {
      const auto n = static_cast<std::size_t>(sizes.at("n"));
      return {n, n};
    }
    case KernelId::Matmul: {
      const auto m = static_cast<std::size_t>(sizes.at("m"));
      const auto n = static_cast<std::size_t>(sizes.at("n"));
      const auto k = static_cast<std::size_t>(sizes.at("k"));
      return {m * k, k * n};
    }
  }
  return {};
}

std::size_t output_length(const KernelSpec& kernel, const Sizes& sizes) {
  check_sizes(kernel, sizes);
  switch (kernel.output_kind) {
    case OutputKind::Scalar: return 1;
    case OutputKind::Vector: return static_cast<std::size_t>(sizes.at("n"));
    case OutputKind::Matrix:
      return static_cast<std::size_t>(sizes.at("m")) * static_cast<std::size_t>(sizes.at("n"));
  }
  return 0;
}

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SplitMix64::unit() { return static_cast<double>(next() >> 40) * 0x1.0p-24; }

float draw_element(SplitMix64& rng, const Distribution& d) {
  const double u = rng.unit();
  const double span = d.hi - d.lo;
  const double scaled = span * u;
  const double v = d.lo + scaled;
  float f = static_cast<float>(v);
  const auto lo = static_cast<float>(d.lo);
  const auto hi = static_cast<float>(d.hi);
  return std::clamp(f, std::min(lo, hi), std::max(lo, hi));
}

KernelInputs generate_inputs(const KernelSpec& kernel, const WorkloadSpec& workload) {
  if (!(workload.distribution.lo < workload.distribution.hi)) {
    throw SpecError("distribution must satisfy lo < hi");
  }
  const auto lengths = input_lengths(kernel, workload.sizes);
  SplitMix64 rng(workload.seed);
  KernelInputs in;
  if (kernel.has_scalar_coefficient) in.alpha = draw_element(rng, workload.distribution);
  in.arrays.reserve(lengths.size());
  for (auto len : lengths) {
    std::vector<float> a(len);
    for (auto& x : a) x = draw_element(rng, workload.distribution);
    in.arrays.push_back(std::move(a));
  }
  return in;
}

std::vector<double> reference_eval(const KernelSpec& kernel, const KernelInputs& inputs,
                                   const Sizes& sizes) {
  const auto lengths = input_lengths(kernel, sizes);
  if (inputs.arrays.size() != lengths.size()) {
    throw SpecError("kernel " + kernel.name + " expects " + std::to_string(lengths.size()) +
                    " input arrays, got " + std::to_string(inputs.arrays.size()));
  }
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    if (inputs.arrays[i].size() != lengths[i]) {
      throw SpecError("kernel " + kernel.name + ": input " + std::to_string(i) + " has " +
                      std::to_string(inputs.arrays[i].size()) + " elements, shape requires " +
                      std::to_string(lengths[i]));
    }
  }

  switch (kernel.id) {
    case KernelId::Dot: {
      const auto& a = inputs.arrays[0];
      const auto& b = inputs.arrays[1];
      double result = 0.0;
      for (std::size_t i = 0; i < a.size(); ++i) {
        const float product = a[i] * b[i];
        result += product;
      }
      return {result};
    }
    case KernelId::Axpy: {
      const auto& x = inputs.arrays[0];
      const auto& y = inputs.arrays[1];
      std::vector<double> out(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) {
        const float product = inputs.alpha * x[i];
        out[i] = static_cast<double>(product) + static_cast<double>(y[i]);
      }
      return out;
    }
    case KernelId::Matmul: {
      const auto m = static_cast<std::size_t>(sizes.at("m"));
      const auto n = static_cast<std::size_t>(sizes.at("n"));
      const auto k = static_cast<std::size_t>(sizes.at("k"));
      const auto& A = inputs.arrays[0];
      const auto& B = inputs.arrays[1];
      std::vector<double> C(m * n, 0.0);
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          double acc = 0.0;
          for (std::size_t p = 0; p < k; ++p) {
            const float product = A[i * k + p] * B[p * n + j];
            acc += product;
          }
          C[i * n + j] = acc;
        }
      }
      return C;
    }
  }
  return {};
}

}  // namespace joulebench
