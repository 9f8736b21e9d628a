#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "nlsobs/types.hpp"

namespace nlsobs {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t x);

// On-disk Gramians. File layout: a canonical text header ending in "end\n",
// then rows*cols little-endian IEEE-754 doubles in row-major order.
class GramianCache {
 public:
  static constexpr const char* kEnvironmentVariable = "NLSOBS_CACHE_DIR";

  explicit GramianCache(std::filesystem::path dir);
  static std::optional<GramianCache> from_environment();

  const std::filesystem::path& directory() const { return dir_; }
  std::filesystem::path path_for(const std::string& key) const;
  std::optional<RMatrix> load(const std::string& key) const;
  // Writes atomically (temporary file + rename). Throws IoError.
  void store(const std::string& key, const RMatrix& G) const;

 private:
  std::filesystem::path dir_;
};

}  // namespace nlsobs
