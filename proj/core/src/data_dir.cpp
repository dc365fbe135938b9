#include "joulebench/data_dir.hpp"

#include <cstdlib>

#ifndef JOULEBENCH_DATA_DIR
#define JOULEBENCH_DATA_DIR "."
#endif

namespace joulebench {

std::filesystem::path data_dir() {
  if (const char* env = std::getenv(kDataDirEnv); env != nullptr && *env != '\0') return env;
  return JOULEBENCH_DATA_DIR;
}

}  // namespace joulebench
