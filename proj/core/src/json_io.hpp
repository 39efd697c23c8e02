#pragma once

// Internal helpers for file-backed JSON; not installed.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "oocforge/common.hpp"

namespace oocforge::detail {

using json = nlohmann::json;

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError("cannot open file: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline json parse_json_file(const std::string& path) {
  const std::string text = read_file(path);
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) {
    throw ParseError("malformed JSON document: " + path);
  }
  return doc;
}

// Write-then-rename so concurrent readers never observe a partial file.
inline void write_file_atomic(const std::string& path,
                              const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw ParseError("cannot open file for writing: " + tmp.string());
    }
    out << contents;
    if (!out.good()) {
      throw ParseError("write failed: " + tmp.string());
    }
  }
  fs::rename(tmp, target);
}

inline void write_json_atomic(const std::string& path, const json& doc) {
  write_file_atomic(path, doc.dump(2) + "\n");
}

}  // namespace oocforge::detail
