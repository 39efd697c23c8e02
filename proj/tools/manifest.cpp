#include "manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oocforge/common.hpp"

namespace oocforge::cli {

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError("cannot open file: " + path);
  }
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
  }
  char hex[20];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(h));
  return hex;
}

}  // namespace

Manifest::Manifest(std::string command) {
  doc_["command"] = std::move(command);
  doc_["parameters"] = nlohmann::json::object();
  doc_["inputs"] = nlohmann::json::object();
  doc_["tool_version"] = kVersion;
  doc_["timestamp"] = utc_now();
}

void Manifest::param(const std::string& key, const nlohmann::json& value) {
  doc_["parameters"][key] = value;
}

void Manifest::input(const std::string& key, const std::string& path) {
  doc_["inputs"][key] = {{"path", path}, {"fnv1a64", file_digest(path)}};
}

void Manifest::seed(std::uint64_t value) { doc_["seed"] = value; }

namespace {

void write_atomic(const std::filesystem::path& target,
                  const std::string& contents) {
  const std::filesystem::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << contents;
  }
  std::filesystem::rename(tmp, target);
}

}  // namespace

void Manifest::write_beside(const std::string& primary_output) const {
  write_atomic(primary_output + ".manifest.json", doc_.dump(2) + "\n");
}

void Manifest::write_into(const std::string& out_dir) const {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  write_atomic(fs::path(out_dir) / "manifest.json", doc_.dump(2) + "\n");
}

}  // namespace oocforge::cli
