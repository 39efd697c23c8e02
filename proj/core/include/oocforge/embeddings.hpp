#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "oocforge/common.hpp"

namespace oocforge::data {

// Per-image caption embedding vectors, all sharing one dimension d > 0 with
// finite entries; every image carries at least one caption vector.
// Immutable after load.
class EmbeddingStore {
 public:
  std::size_t dimension() const { return dimension_; }
  std::size_t size() const { return vectors_.size(); }
  bool has(ImageId id) const { return vectors_.count(id) > 0; }

  const std::vector<std::vector<double>>& captions(ImageId id) const;

  void insert(ImageId id, std::vector<std::vector<double>> captions);

  const std::map<ImageId, std::vector<std::vector<double>>>& all() const {
    return vectors_;
  }

 private:
  std::size_t dimension_ = 0;
  std::map<ImageId, std::vector<std::vector<double>>> vectors_;
};

// JSONL input, one image per line: {"image_id": <id>, "captions": [[...],...]}.
// Dimension mismatches, non-finite entries, empty caption lists and duplicate
// image ids are format errors (ParseError with the offending line number).
EmbeddingStore load_embeddings(const std::string& path);

}  // namespace oocforge::data
