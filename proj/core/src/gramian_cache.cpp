#include "nlsobs/gramian_cache.hpp"

#include <bit>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "nlsobs/errors.hpp"

namespace nlsobs {

namespace {

constexpr const char* kMagic = "nlsobs-gramian 1\n";

std::string header_for(const std::string& key, Eigen::Index rows, Eigen::Index cols) {
  std::ostringstream os;
  os << kMagic << key;
  if (!key.empty() && key.back() != '\n') os << '\n';
  os << "rows=" << rows << " cols=" << cols << "\nend\n";
  return os.str();
}

std::uint64_t to_little(std::uint64_t x) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((x >> (8 * i)) & 0xffULL) << (8 * (7 - i));
    return r;
  }
  return x;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t x) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, x >>= 4) s[i] = digits[x & 0xf];
  return s;
}

GramianCache::GramianCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::optional<GramianCache> GramianCache::from_environment() {
  const char* d = std::getenv(kEnvironmentVariable);
  if (d == nullptr || *d == '\0') return std::nullopt;
  return GramianCache(d);
}

std::filesystem::path GramianCache::path_for(const std::string& key) const {
  return dir_ / ("gramian-" + hex64(fnv1a64(key)) + ".bin");
}

std::optional<RMatrix> GramianCache::load(const std::string& key) const {
  std::ifstream in(path_for(key), std::ios::binary);
  if (!in) return std::nullopt;
  std::string text;
  std::string line;
  Eigen::Index rows = -1, cols = -1;
  while (std::getline(in, line)) {
    text += line + "\n";
    if (line.rfind("rows=", 0) == 0) {
      std::istringstream ls(line);
      std::string tok;
      try {
        ls >> tok;
        rows = std::stol(tok.substr(5));
        ls >> tok;
        cols = std::stol(tok.substr(5));
      } catch (const std::exception&) {
        return std::nullopt;
      }
    }
    if (line == "end") break;
  }
  // A digest collision or a stale format is treated as a miss.
  if (rows < 0 || cols < 0 || text != header_for(key, rows, cols)) return std::nullopt;
  std::vector<std::uint64_t> raw(static_cast<std::size_t>(rows * cols));
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 8));
  if (!in) return std::nullopt;
  RMatrix G(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      const std::uint64_t bits = to_little(raw[static_cast<std::size_t>(r * cols + c)]);
      double v;
      std::memcpy(&v, &bits, 8);
      G(r, c) = v;
    }
  return G;
}

void GramianCache::store(const std::string& key, const RMatrix& G) const {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw IoError("gramian cache: cannot create " + dir_.string() + ": " + ec.message());
  const auto target = path_for(key);
  const auto tmp = std::filesystem::path(target.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("gramian cache: cannot write " + tmp.string());
    const std::string h = header_for(key, G.rows(), G.cols());
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    for (Eigen::Index r = 0; r < G.rows(); ++r)
      for (Eigen::Index c = 0; c < G.cols(); ++c) {
        std::uint64_t bits;
        const double v = G(r, c);
        std::memcpy(&bits, &v, 8);
        bits = to_little(bits);
        out.write(reinterpret_cast<const char*>(&bits), 8);
      }
    if (!out) throw IoError("gramian cache: short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, target, ec);
  if (ec) throw IoError("gramian cache: cannot rename into " + target.string() + ": " + ec.message());
}

}  // namespace nlsobs
