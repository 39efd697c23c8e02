#pragma once

#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "oocforge/common.hpp"

namespace oocforge::data {

struct ImageRecord {
  ImageId image_id = 0;
  int width = 0;   // pixels, > 0
  int height = 0;  // pixels, > 0
};

struct InstanceAnnotation {
  ImageId image_id = 0;
  CategoryId category_id = 0;
  double pixel_area = 0.0;  // >= 0, pixels^2
};

enum class CategoryKind { Thing, Stuff };

struct CategoryInfo {
  std::string name;
  CategoryKind kind = CategoryKind::Thing;
};

// Category table keyed by id; names unique; the "unlabelled" class is
// excluded at load time.
class CategoryTable {
 public:
  void add(CategoryId id, CategoryInfo info);
  bool contains(CategoryId id) const { return entries_.count(id) > 0; }
  const CategoryInfo& at(CategoryId id) const;
  const std::map<CategoryId, CategoryInfo>& entries() const { return entries_; }
  std::vector<CategoryId> ids() const;
  // Lookup by name; names are normalized (spaces/underscores -> hyphens),
  // so both "fire hydrant" and "fire-hydrant" resolve to the same id.
  CategoryId id_of(const std::string& name) const;
  std::size_t size() const { return entries_.size(); }

 private:
  std::map<CategoryId, CategoryInfo> entries_;
  std::unordered_map<std::string, CategoryId> by_name_;
};

// Hyphen-normalized category name used in task lists, exclusion lists and
// challenge-set files ("fire hydrant" -> "fire-hydrant").
std::string normalize_name(const std::string& name);

// Immutable after load; safe for concurrent reads.
class AnnotationStore {
 public:
  const std::map<ImageId, ImageRecord>& images() const { return images_; }
  const CategoryTable& categories() const { return categories_; }
  const std::vector<InstanceAnnotation>& annotations() const {
    return annotations_;
  }

  bool has_image(ImageId id) const { return images_.count(id) > 0; }
  std::vector<ImageId> image_ids() const;

  // Sum of annotation pixel areas of `category` in `image`, divided by the
  // image area. Exactly 0 when the category is absent; may exceed 1 when
  // annotations overlap (no clamping). Throws LookupError on unknown image.
  double area_fraction(ImageId image, CategoryId category) const;

  // Presence of a label: area_fraction > 0.
  bool label(ImageId image, CategoryId category) const {
    return area_fraction(image, category) > 0.0;
  }

  // category -> area fraction for every category annotated in the image.
  // Categories absent from the map have fraction 0.
  const std::unordered_map<CategoryId, double>& area_fractions(
      ImageId image) const;

  // Images of `ids` where `category` is present, in ascending id order.
  std::vector<ImageId> positives(const std::vector<ImageId>& ids,
                                 CategoryId category) const;

  friend AnnotationStore load_annotations(const std::string& path);
  friend AnnotationStore make_store(std::vector<ImageRecord> images,
                                    CategoryTable categories,
                                    std::vector<InstanceAnnotation> anns);

 private:
  void build_index();

  std::map<ImageId, ImageRecord> images_;
  CategoryTable categories_;
  std::vector<InstanceAnnotation> annotations_;
  // image -> (category -> summed pixel area / image area)
  std::unordered_map<ImageId, std::unordered_map<CategoryId, double>> by_image_;
};

// Parses a COCO-format annotation document: top-level "images"
// (id, width, height), "annotations" (image_id, category_id, area, iscrowd),
// "categories" (id, name, supercategory). Extra keys are ignored. Crowd
// annotations are retained and contribute their area. Annotations referencing
// an unknown image or category raise IntegrityError; the "unlabelled" class
// and its annotations are dropped.
AnnotationStore load_annotations(const std::string& path);

// In-memory construction with the same integrity checks, for synthetic
// stores in tests and fixtures.
AnnotationStore make_store(std::vector<ImageRecord> images,
                           CategoryTable categories,
                           std::vector<InstanceAnnotation> anns);

}  // namespace oocforge::data
