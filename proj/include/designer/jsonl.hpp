#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "designer/error.hpp"

namespace designer::jsonl {

namespace fs = std::filesystem;
using json = nlohmann::json;

/// Canonical single-line form: object keys sorted (nlohmann's default
/// ordered map), no extra whitespace.
inline std::string canonical(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::strict); }

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Non-empty lines of a file. A final line without a trailing newline is a
/// torn write and is ignored.
inline std::vector<std::string> read_lines(const fs::path& path) {
  std::vector<std::string> lines;
  if (!fs::exists(path)) return lines;
  const auto content = read_file(path);
  std::size_t pos = 0;
  while (pos < content.size()) {
    const auto nl = content.find('\n', pos);
    if (nl == std::string::npos) break;
    if (nl > pos) lines.push_back(content.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return lines;
}

inline std::vector<json> read_all(const fs::path& path) {
  std::vector<json> out;
  std::size_t line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::malformed_field, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

/// Cuts a torn last line (no trailing newline) so appends start clean.
/// Returns true if anything was removed.
inline bool truncate_torn_tail(const fs::path& path) {
  if (!fs::exists(path)) return false;
  const auto content = read_file(path);
  if (content.empty() || content.back() == '\n') return false;
  const auto nl = content.rfind('\n');
  fs::resize_file(path, nl == std::string::npos ? 0 : nl + 1);
  return true;
}

/// Writes the whole file via a temporary and rename.
inline void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline void write_all(const fs::path& path, const std::vector<json>& records) {
  std::string content;
  for (const auto& r : records) content += canonical(r) + "\n";
  write_atomic(path, content);
}

/// Append-only writer; every line is flushed before append() returns.
class Appender {
 public:
  explicit Appender(const fs::path& path) : path_(path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    file_ = std::fopen(path.string().c_str(), "ab");
    if (!file_) throw Error(ErrorCode::io_error, "cannot open " + path.string());
  }
  Appender(const Appender&) = delete;
  Appender& operator=(const Appender&) = delete;
  ~Appender() {
    if (file_) std::fclose(file_);
  }

  void append(const json& record) { append_line(canonical(record)); }

  void append_line(const std::string& line) { write(line + "\n"); }

  /// Writes bytes without a terminating newline.
  void append_line_raw(const std::string& bytes) { write(bytes); }

 private:
  void write(const std::string& out) {
    if (std::fwrite(out.data(), 1, out.size(), file_) != out.size() || std::fflush(file_) != 0) {
      throw Error(ErrorCode::io_error, "write failed on " + path_.string());
    }
  }

  fs::path path_;
  std::FILE* file_ = nullptr;
};

}  // namespace designer::jsonl
