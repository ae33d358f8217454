#include "smelt/util.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <system_error>

#include "smelt/digest.hpp"
#include "smelt/error.hpp"

namespace smelt {

const char* errc_name(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::input_shape: return "input_shape";
    case Errc::invalid_trace: return "invalid_trace";
    case Errc::no_signal: return "no_signal";
    case Errc::materialization: return "materialization";
    case Errc::config: return "config";
    case Errc::io: return "io";
    case Errc::not_found: return "not_found";
    case Errc::aborted: return "aborted";
    case Errc::remote: return "remote";
    case Errc::internal: return "internal";
  }
  return "unknown";
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                          std::uint64_t index) {
  Digest d;
  d.field_u64(base);
  d.field(tag);
  d.field_u64(index);
  const std::string hex = d.hex();
  std::uint64_t out = 0;
  for (int i = 0; i < 16; ++i) {
    const char c = hex[static_cast<std::size_t>(i)];
    out = (out << 4) | static_cast<std::uint64_t>(
                           c <= '9' ? c - '0' : c - 'a' + 10);
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string to_hex(const unsigned char* data, std::size_t len) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (std::size_t i = 0; i < len; ++i) {
    out.push_back(digits[data[i] >> 4]);
    out.push_back(digits[data[i] & 0xf]);
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::io, "cannot open " + path.string());
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  if (in.bad()) raise(Errc::io, "read failed for " + path.string());
  return content;
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(Errc::io, "cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) raise(Errc::io, "write failed for " + path.string());
}

void atomic_write_file(const std::filesystem::path& path,
                       std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  write_file(tmp, content);
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) raise(Errc::io, "rename " + tmp.string() + " -> " + path.string() +
                              ": " + ec.message());
}

void append_line(const std::filesystem::path& path, std::string_view line) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) raise(Errc::io, "cannot open " + path.string() + " for append");
  out.write(line.data(), static_cast<std::streamsize>(line.size()));
  out.put('\n');
  out.flush();
  if (!out) raise(Errc::io, "append failed for " + path.string());
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      if (start < text.size()) lines.emplace_back(text.substr(start));
      break;
    }
    lines.emplace_back(text.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

}  // namespace smelt
