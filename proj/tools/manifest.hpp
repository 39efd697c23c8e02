#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace oocforge::cli {

// Sidecar describing one command invocation: the resolved parameters, input
// digests, seed and tool version. Primary outputs never embed timestamps, so
// reruns with the same manifest parameters are byte-identical; the manifest
// itself carries the wall-clock timestamp.
class Manifest {
 public:
  Manifest(std::string command);

  void param(const std::string& key, const nlohmann::json& value);
  void input(const std::string& key, const std::string& path);
  void seed(std::uint64_t value);

  // Writes <primary_output>.manifest.json, or DIR/manifest.json for
  // directory outputs.
  void write_beside(const std::string& primary_output) const;
  void write_into(const std::string& out_dir) const;

 private:
  nlohmann::json doc_;
};

}  // namespace oocforge::cli
