#pragma once

#include <filesystem>

namespace joulebench {

inline constexpr const char* kDataDirEnv = "JOULEBENCH_DATA_DIR";

/// Root holding corpus/, catalog/ and fixtures/: $JOULEBENCH_DATA_DIR when
/// set, else the location fixed at build time.
std::filesystem::path data_dir();

}  // namespace joulebench
