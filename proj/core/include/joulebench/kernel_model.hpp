#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace joulebench {

enum class KernelId { Dot, Axpy, Matmul };
enum class ElementType { F32, F64 };
enum class OutputKind { Scalar, Vector, Matrix };

enum class VariantKind { Scalar, OpenMP, SimdNeon, SimdAvx2, OpenMpSimdNeon, OpenMpSimdAvx2 };
enum class TargetArch { ARM64, AMD64 };

inline constexpr VariantKind kAllVariantKinds[] = {
    VariantKind::Scalar,   VariantKind::OpenMP,         VariantKind::SimdNeon,
    VariantKind::SimdAvx2, VariantKind::OpenMpSimdNeon, VariantKind::OpenMpSimdAvx2};

std::string_view to_string(KernelId id);
std::string_view to_string(ElementType t);
std::string_view to_string(VariantKind kind);
std::string_view to_string(TargetArch arch);

/// Lower-case forms used in file names: "simd_avx2", "amd64".
std::string_view slug(VariantKind kind);
std::string_view slug(TargetArch arch);

/// Parsers accept either the display name or the slug, case-insensitively.
KernelId parse_kernel_id(std::string_view s);
VariantKind parse_variant_kind(std::string_view s);
TargetArch parse_target_arch(std::string_view s);

bool kind_valid_for(VariantKind kind, TargetArch arch);
bool uses_openmp(VariantKind kind);
bool uses_simd(VariantKind kind);
/// Kinds valid for `arch`, in enumeration order.
std::vector<VariantKind> kinds_for(TargetArch arch);
TargetArch host_arch();

struct KernelSpec {
  KernelId id;
  std::string name;
  ElementType element_type;
  int arity;
  bool has_scalar_coefficient;
  std::vector<std::string> shape_params;
  OutputKind output_kind;
  std::string signature;    // C prototype of kernel_entry
  std::string description;  // one-sentence semantics, used in prompts
};

std::vector<KernelSpec> builtin_kernels();
const KernelSpec& kernel_spec(KernelId id);
const KernelSpec& kernel_spec(std::string_view name);

struct Distribution {
  double lo = -1.0;
  double hi = 1.0;
  bool operator==(const Distribution&) const = default;
};

using Sizes = std::map<std::string, std::int64_t>;

struct WorkloadSpec {
  Sizes sizes;
  std::uint64_t seed = 0;
  Distribution distribution;
  bool operator==(const WorkloadSpec&) const = default;
};

/// Workload for a single "size" knob: n for vector kernels, m=n=k for matmul.
WorkloadSpec square_workload(const KernelSpec& kernel, std::int64_t size, std::uint64_t seed,
                             Distribution distribution = {});

/// Length of the longest floating-point reduction the kernel performs.
std::int64_t reduction_depth(const KernelSpec& kernel, const Sizes& sizes);

/// Validates that every shape parameter is present and >= 1.
void check_sizes(const KernelSpec& kernel, const Sizes& sizes);

/// Element counts of each input array, in ABI argument order.
std::vector<std::size_t> input_lengths(const KernelSpec& kernel, const Sizes& sizes);
std::size_t output_length(const KernelSpec& kernel, const Sizes& sizes);

struct KernelInputs {
  float alpha = 0.0f;  // axpy coefficient; unused otherwise
  std::vector<std::vector<float>> arrays;
  bool operator==(const KernelInputs&) const = default;
};

/// SplitMix64 stream. The emitted C test drivers replicate it bit for bit.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  /// Uniform on [0, 1) with 24 random bits.
  double unit();

 private:
  std::uint64_t state_;
};

/// lo + (hi - lo) * u rounded to float, clamped to [lo, hi].
float draw_element(SplitMix64& rng, const Distribution& d);

KernelInputs generate_inputs(const KernelSpec& kernel, const WorkloadSpec& workload);

/// Textbook sequential result: products in the element type, accumulation
/// in double, left to right. Scalar outputs are a length-1 vector.
std::vector<double> reference_eval(const KernelSpec& kernel, const KernelInputs& inputs,
                                   const Sizes& sizes);

}  // namespace joulebench
