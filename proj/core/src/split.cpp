#include "oocforge/split.hpp"

#include <algorithm>
#include <cmath>

#include "json_io.hpp"
#include "oocforge/rng.hpp"

namespace oocforge::data {

const std::vector<ImageId>& DatasetSplit::part(const std::string& name) const {
  if (name == "train") return train_ids;
  if (name == "valid") return valid_ids;
  if (name == "test") return test_ids;
  throw LookupError("unknown split part '" + name + "'");
}

DatasetSplit make_split(std::vector<ImageId> ids,
                        const std::array<double, 3>& ratios,
                        std::uint64_t seed) {
  double sum = 0.0;
  for (double r : ratios) {
    if (!(r > 0.0)) {
      throw ConfigError("split ratios must be positive");
    }
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError("split ratios must sum to 1");
  }

  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());

  Rng rng(seed);
  rng.shuffle(ids);

  const auto n = ids.size();
  const auto n_valid =
      static_cast<std::size_t>(std::floor(ratios[1] * static_cast<double>(n)));
  const auto n_test =
      static_cast<std::size_t>(std::floor(ratios[2] * static_cast<double>(n)));
  const auto n_train = n - n_valid - n_test;  // remainder to train

  DatasetSplit split;
  split.seed = seed;
  split.ratios = ratios;
  split.train_ids.assign(ids.begin(), ids.begin() + n_train);
  split.valid_ids.assign(ids.begin() + n_train, ids.begin() + n_train + n_valid);
  split.test_ids.assign(ids.begin() + n_train + n_valid, ids.end());
  std::sort(split.train_ids.begin(), split.train_ids.end());
  std::sort(split.valid_ids.begin(), split.valid_ids.end());
  std::sort(split.test_ids.begin(), split.test_ids.end());
  return split;
}

DatasetSplit make_split(const AnnotationStore& store,
                        const std::array<double, 3>& ratios,
                        std::uint64_t seed) {
  return make_split(store.image_ids(), ratios, seed);
}

void save_split(const DatasetSplit& split, const std::string& path) {
  detail::json doc;
  doc["seed"] = split.seed;
  doc["ratios"] = split.ratios;
  doc["train"] = split.train_ids;
  doc["valid"] = split.valid_ids;
  doc["test"] = split.test_ids;
  detail::write_json_atomic(path, doc);
}

DatasetSplit load_split(const std::string& path) {
  const detail::json doc = detail::parse_json_file(path);
  DatasetSplit split;
  try {
    split.seed = doc.at("seed").get<std::uint64_t>();
    split.ratios = doc.at("ratios").get<std::array<double, 3>>();
    split.train_ids = doc.at("train").get<std::vector<ImageId>>();
    split.valid_ids = doc.at("valid").get<std::vector<ImageId>>();
    split.test_ids = doc.at("test").get<std::vector<ImageId>>();
  } catch (const detail::json::exception& e) {
    throw ParseError(path + ": malformed split file: " + e.what());
  }
  return split;
}

}  // namespace oocforge::data
