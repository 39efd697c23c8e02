#include "oocforge/embeddings.hpp"

#include <cmath>
#include <fstream>

#include "json_io.hpp"

namespace oocforge::data {

const std::vector<std::vector<double>>& EmbeddingStore::captions(
    ImageId id) const {
  auto it = vectors_.find(id);
  if (it == vectors_.end()) {
    throw LookupError("no embedding for image id " + std::to_string(id));
  }
  return it->second;
}

void EmbeddingStore::insert(ImageId id,
                            std::vector<std::vector<double>> captions) {
  if (captions.empty()) {
    throw ParseError("image " + std::to_string(id) +
                     " has zero caption vectors");
  }
  for (const auto& v : captions) {
    if (dimension_ == 0) dimension_ = v.size();
    if (v.empty() || v.size() != dimension_) {
      throw ParseError("embedding dimension mismatch on image " +
                       std::to_string(id));
    }
    for (double x : v) {
      if (!std::isfinite(x)) {
        throw ParseError("non-finite embedding entry on image " +
                         std::to_string(id));
      }
    }
  }
  if (!vectors_.emplace(id, std::move(captions)).second) {
    throw ParseError("duplicate embedding row for image " + std::to_string(id));
  }
}

EmbeddingStore load_embeddings(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError("cannot open file: " + path);
  }
  EmbeddingStore store;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    detail::json row = detail::json::parse(line, nullptr, false);
    if (row.is_discarded() || !row.is_object()) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": malformed JSONL row");
    }
    ImageId id;
    std::vector<std::vector<double>> captions;
    try {
      id = row.at("image_id").get<ImageId>();
      captions = row.at("captions").get<std::vector<std::vector<double>>>();
    } catch (const detail::json::exception& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    try {
      store.insert(id, std::move(captions));
    } catch (const ParseError& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return store;
}

}  // namespace oocforge::data
