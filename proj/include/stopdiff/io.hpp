#pragma once

#include <cstdint>
#include <string>

namespace stopdiff::io {

inline constexpr const char* kVersion = "0.1.0";

/// Shortest round-trip decimal representation of a double (std::to_chars).
/// Used for all numeric CSV output so identical values always produce
/// identical bytes.
std::string format_double(double value);

/// "# stopdiff <version> seed=<seed> config=<fnv1a hex>" — the provenance
/// comment every output file starts with.
std::string metadata_comment(std::uint64_t seed, const std::string& config_text);

/// Writes content to a temporary file in the target directory and renames
/// it into place, so readers never observe a truncated file.
void atomic_write_file(const std::string& path, const std::string& content);

/// Worker count resolution: explicit value if > 0, else the
/// STOPDIFF_WORKERS environment variable, else hardware concurrency.
int resolve_workers(int requested);

}  // namespace stopdiff::io
