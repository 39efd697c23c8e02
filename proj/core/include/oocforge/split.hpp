#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "oocforge/annotations.hpp"
#include "oocforge/common.hpp"

namespace oocforge::data {

// Deterministic train/valid/test partition. Part sizes use floor rounding
// per ratio with the remainder assigned to train; ids within each part are
// stored sorted so that regeneration is byte-identical.
struct DatasetSplit {
  std::uint64_t seed = 0;
  std::array<double, 3> ratios{0.7, 0.1, 0.2};
  std::vector<ImageId> train_ids;
  std::vector<ImageId> valid_ids;
  std::vector<ImageId> test_ids;

  const std::vector<ImageId>& part(const std::string& name) const;
};

// Pure function of (id set, ratios, seed): ids are brought to a canonical
// sorted order, permuted by a seeded Fisher-Yates shuffle, then cut at the
// floor-rounded boundaries (valid and test get their floors, train the rest).
DatasetSplit make_split(std::vector<ImageId> ids,
                        const std::array<double, 3>& ratios,
                        std::uint64_t seed);

DatasetSplit make_split(const AnnotationStore& store,
                        const std::array<double, 3>& ratios,
                        std::uint64_t seed);

void save_split(const DatasetSplit& split, const std::string& path);
DatasetSplit load_split(const std::string& path);

}  // namespace oocforge::data
