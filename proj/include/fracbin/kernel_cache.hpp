#pragma once

// Binary kernel cache, little-endian:
//   "FBKT" | u32 version = 1 | H sigma cH s0 (f64) | N (u64) | rel_tol (f64) |
//   nodes_per_panel (u32) | g_1..g_N (f64) | j rows n = 2..N (f64)
// A file whose header differs from the requested configuration is ignored.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fracbin/kernel.hpp"

namespace fracbin {

inline constexpr std::uint32_t kCacheVersion = 1;

namespace detail {

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
}
inline void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
}
inline void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

inline double get_f64(const std::string& bytes, size_t pos) {
  std::uint64_t raw = 0;
  for (int b = 0; b < 8; ++b) raw |= std::uint64_t{static_cast<unsigned char>(bytes[pos + b])} << (8 * b);
  return std::bit_cast<double>(raw);
}

inline std::string cache_header(std::int64_t N, const ModelParams& params, const QuadratureConfig& quad) {
  std::string out = "FBKT";
  put_u32(out, kCacheVersion);
  put_f64(out, params.H);
  put_f64(out, params.sigma);
  put_f64(out, params.cH);
  put_f64(out, params.s0);
  put_u64(out, static_cast<std::uint64_t>(N));
  put_f64(out, quad.rel_tol);
  put_u32(out, static_cast<std::uint32_t>(quad.nodes_per_panel));
  return out;
}

}  // namespace detail

/// Serialized cache file contents.
inline std::string encode_kernel_table(const KernelTable& table) {
  std::string out = detail::cache_header(table.N(), table.params(), table.quad());
  out.reserve(out.size() + 8 * (table.g_row().size() + table.j_rows().size()));
  for (double v : table.g_row()) detail::put_f64(out, v);
  for (double v : table.j_rows()) detail::put_f64(out, v);
  return out;
}

/// Parses bytes produced by encode_kernel_table; nullopt unless the header
/// matches (N, params, quad) exactly and the payload has the right length.
inline std::optional<KernelTable> decode_kernel_table(const std::string& bytes, std::int64_t N,
                                                      const ModelParams& params, const QuadratureConfig& quad) {
  const std::string header = detail::cache_header(N, params, quad);
  if (bytes.compare(0, header.size(), header) != 0) return std::nullopt;
  const auto expected = header.size() + 8 * static_cast<size_t>(N + KernelTable::j_count(N));
  if (bytes.size() != expected) return std::nullopt;
  size_t pos = header.size();
  std::vector<double> g_row(static_cast<size_t>(N));
  std::vector<double> j_rows(static_cast<size_t>(KernelTable::j_count(N)));
  for (auto& v : g_row) {
    v = detail::get_f64(bytes, pos);
    pos += 8;
  }
  for (auto& v : j_rows) {
    v = detail::get_f64(bytes, pos);
    pos += 8;
  }
  return KernelTable(N, params, quad, std::move(g_row), std::move(j_rows));
}

/// Cache directory: FRACBIN_CACHE_DIR if set, otherwise `fallback`.
inline std::filesystem::path cache_directory(const std::filesystem::path& fallback = ".fracbin-cache") {
  if (const char* env = std::getenv("FRACBIN_CACHE_DIR"); env != nullptr && *env != '\0') return env;
  return fallback;
}

/// File name derived from every input that affects the table.
inline std::filesystem::path cache_file_name(std::int64_t N, const ModelParams& params, const QuadratureConfig& quad) {
  std::string key = detail::cache_header(N, params, quad);
  detail::put_f64(key, quad.abs_tol);
  detail::put_u32(key, static_cast<std::uint32_t>(quad.max_panels));
  std::uint64_t hash = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : key) hash = (hash ^ c) * 0x100000001b3ULL;
  char name[64];
  std::snprintf(name, sizeof name, "kernel-N%lld-%016llx.fbkt", static_cast<long long>(N),
                static_cast<unsigned long long>(hash));
  return name;
}

inline void write_kernel_cache(const std::filesystem::path& file, const KernelTable& table) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  const auto tmp = std::filesystem::path(file.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write kernel cache " + tmp.string());
    const std::string bytes = encode_kernel_table(table);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("failed writing kernel cache " + tmp.string());
  }
  std::filesystem::rename(tmp, file);
}

inline std::optional<KernelTable> read_kernel_cache(const std::filesystem::path& file, std::int64_t N,
                                                    const ModelParams& params, const QuadratureConfig& quad) {
  std::ifstream in(file, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return decode_kernel_table(buffer.str(), N, params, quad);
}

/// Cache-first table load: reuse a matching file in `dir`, otherwise build
/// and store. `hit` reports which happened.
inline KernelTable load_or_build_kernel_table(std::int64_t N, const ModelParams& params, const QuadratureConfig& quad,
                                              const std::filesystem::path& dir, unsigned workers = 0,
                                              bool* hit = nullptr) {
  const auto file = dir / cache_file_name(N, params, quad);
  if (auto cached = read_kernel_cache(file, N, params, quad)) {
    if (hit != nullptr) *hit = true;
    return std::move(*cached);
  }
  if (hit != nullptr) *hit = false;
  auto table = build_kernel_table(N, params, quad, workers);
  write_kernel_cache(file, table);
  return table;
}

}  // namespace fracbin
