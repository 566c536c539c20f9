#include "stopdiff/io.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "stopdiff/common.hpp"

namespace stopdiff::io {

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

std::string metadata_comment(std::uint64_t seed, const std::string& config_text) {
  const std::uint64_t h = fnv1a64(config_text.data(), config_text.size());
  char buf[128];
  std::snprintf(buf, sizeof(buf), "# stopdiff %s seed=%llu config=%016llx",
                kVersion, static_cast<unsigned long long>(seed),
                static_cast<unsigned long long>(h));
  return buf;
}

void atomic_write_file(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  const fs::path dir = target.has_parent_path() ? target.parent_path() : fs::path(".");
  fs::create_directories(dir);
  const fs::path tmp = dir / (target.filename().string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open temporary file " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  fs::rename(tmp, target);
}

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("STOPDIFF_WORKERS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace stopdiff::io
