#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace smelt {

// std::uniform_*_distribution output is implementation-defined, so every
// seeded draw in the engine goes through these two helpers instead.
inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound == 0) return 0;
  const std::uint64_t rem = std::numeric_limits<std::uint64_t>::max() % bound;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - rem;
  std::uint64_t v = rng();
  while (v >= limit) v = rng();
  return v % bound;
}

inline double uniform_real(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Stateless per-(tag, index) seed derivation; keeps iteration streams
/// independent of each other so interrupted runs resume bit-identically.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                          std::uint64_t index);

/// Shortest round-trip decimal form, stable across runs and platforms.
std::string format_double(double v);

std::string to_hex(const unsigned char* data, std::size_t len);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

/// Write-then-rename so interrupted writers never leave torn files.
void atomic_write_file(const std::filesystem::path& path,
                       std::string_view content);

void append_line(const std::filesystem::path& path, std::string_view line);

std::vector<std::string> split_lines(std::string_view text);

}  // namespace smelt
