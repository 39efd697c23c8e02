#include "oocforge/annotations.hpp"

#include <algorithm>
#include <utility>

#include "json_io.hpp"

namespace oocforge::data {

namespace {

// COCO-Stuff id convention: thing classes live in 1..91, stuff above.
constexpr CategoryId kMaxThingId = 91;

bool is_unlabelled(const std::string& name) {
  return name == "unlabeled" || name == "unlabelled";
}

}  // namespace

std::string normalize_name(const std::string& name) {
  std::string out = name;
  for (char& c : out) {
    if (c == ' ' || c == '_') c = '-';
  }
  return out;
}

void CategoryTable::add(CategoryId id, CategoryInfo info) {
  const std::string key = normalize_name(info.name);
  if (entries_.count(id) > 0) {
    throw IntegrityError("duplicate category id " + std::to_string(id));
  }
  if (by_name_.count(key) > 0) {
    throw IntegrityError("duplicate category name '" + info.name + "'");
  }
  by_name_.emplace(key, id);
  entries_.emplace(id, std::move(info));
}

const CategoryInfo& CategoryTable::at(CategoryId id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) {
    throw LookupError("unknown category id " + std::to_string(id));
  }
  return it->second;
}

std::vector<CategoryId> CategoryTable::ids() const {
  std::vector<CategoryId> out;
  out.reserve(entries_.size());
  for (const auto& [id, _] : entries_) out.push_back(id);
  return out;
}

CategoryId CategoryTable::id_of(const std::string& name) const {
  auto it = by_name_.find(normalize_name(name));
  if (it == by_name_.end()) {
    throw LookupError("unknown category name '" + name + "'");
  }
  return it->second;
}

std::vector<ImageId> AnnotationStore::image_ids() const {
  std::vector<ImageId> out;
  out.reserve(images_.size());
  for (const auto& [id, _] : images_) out.push_back(id);
  return out;
}

double AnnotationStore::area_fraction(ImageId image, CategoryId category) const {
  const auto& fractions = area_fractions(image);
  auto it = fractions.find(category);
  return it == fractions.end() ? 0.0 : it->second;
}

const std::unordered_map<CategoryId, double>& AnnotationStore::area_fractions(
    ImageId image) const {
  static const std::unordered_map<CategoryId, double> kEmpty;
  if (images_.count(image) == 0) {
    throw LookupError("unknown image id " + std::to_string(image));
  }
  auto it = by_image_.find(image);
  return it == by_image_.end() ? kEmpty : it->second;
}

std::vector<ImageId> AnnotationStore::positives(const std::vector<ImageId>& ids,
                                                CategoryId category) const {
  std::vector<ImageId> out;
  for (ImageId id : ids) {
    if (area_fraction(id, category) > 0.0) out.push_back(id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

void AnnotationStore::build_index() {
  by_image_.clear();
  by_image_.reserve(images_.size());
  for (const auto& ann : annotations_) {
    by_image_[ann.image_id][ann.category_id] += ann.pixel_area;
  }
  // Pixel sums -> fractions of the image area.
  for (auto& [image, per_cat] : by_image_) {
    const ImageRecord& rec = images_.at(image);
    const double image_area =
        static_cast<double>(rec.width) * static_cast<double>(rec.height);
    for (auto& [_, area] : per_cat) {
      area /= image_area;
    }
  }
}

AnnotationStore make_store(std::vector<ImageRecord> images,
                           CategoryTable categories,
                           std::vector<InstanceAnnotation> anns) {
  AnnotationStore store;
  for (auto& img : images) {
    if (img.width <= 0 || img.height <= 0) {
      throw IntegrityError("image " + std::to_string(img.image_id) +
                           " has non-positive dimensions");
    }
    if (!store.images_.emplace(img.image_id, img).second) {
      throw IntegrityError("duplicate image id " +
                           std::to_string(img.image_id));
    }
  }
  store.categories_ = std::move(categories);
  for (const auto& ann : anns) {
    if (ann.pixel_area < 0.0) {
      throw IntegrityError("negative area on annotation for image " +
                           std::to_string(ann.image_id));
    }
    if (store.images_.count(ann.image_id) == 0) {
      throw IntegrityError("annotation references unknown image id " +
                           std::to_string(ann.image_id));
    }
    if (!store.categories_.contains(ann.category_id)) {
      throw IntegrityError("annotation references unknown category id " +
                           std::to_string(ann.category_id));
    }
  }
  store.annotations_ = std::move(anns);
  store.build_index();
  return store;
}

AnnotationStore load_annotations(const std::string& path) {
  const detail::json doc = detail::parse_json_file(path);
  if (!doc.is_object() || !doc.contains("images") ||
      !doc.contains("annotations") || !doc.contains("categories")) {
    throw ParseError(path +
                     ": expected top-level keys images/annotations/categories");
  }

  std::vector<ImageRecord> images;
  for (const auto& rec : doc.at("images")) {
    ImageRecord img;
    try {
      img.image_id = rec.at("id").get<ImageId>();
      img.width = rec.at("width").get<int>();
      img.height = rec.at("height").get<int>();
    } catch (const detail::json::exception& e) {
      throw ParseError(path + ": malformed image record: " + rec.dump());
    }
    if (img.width <= 0 || img.height <= 0) {
      throw ParseError(path + ": non-positive dimensions on image " +
                       std::to_string(img.image_id));
    }
    images.push_back(img);
  }

  CategoryTable categories;
  std::unordered_set<CategoryId> unlabelled_ids;
  for (const auto& rec : doc.at("categories")) {
    CategoryId id;
    std::string name;
    try {
      id = rec.at("id").get<CategoryId>();
      name = rec.at("name").get<std::string>();
    } catch (const detail::json::exception& e) {
      throw ParseError(path + ": malformed category record: " + rec.dump());
    }
    if (is_unlabelled(name)) {
      unlabelled_ids.insert(id);
      continue;
    }
    CategoryInfo info;
    info.name = name;
    info.kind = (id <= kMaxThingId) ? CategoryKind::Thing : CategoryKind::Stuff;
    categories.add(id, std::move(info));
  }

  std::vector<InstanceAnnotation> anns;
  for (const auto& rec : doc.at("annotations")) {
    InstanceAnnotation ann;
    try {
      ann.image_id = rec.at("image_id").get<ImageId>();
      ann.category_id = rec.at("category_id").get<CategoryId>();
      ann.pixel_area = rec.at("area").get<double>();
    } catch (const detail::json::exception& e) {
      throw ParseError(path + ": malformed annotation record: " + rec.dump());
    }
    if (unlabelled_ids.count(ann.category_id) > 0) continue;
    if (ann.pixel_area < 0.0) {
      throw ParseError(path + ": negative area on annotation for image " +
                       std::to_string(ann.image_id));
    }
    anns.push_back(ann);
  }

  try {
    return make_store(std::move(images), std::move(categories),
                      std::move(anns));
  } catch (const IntegrityError& e) {
    throw IntegrityError(path + ": " + e.what());
  }
}

}  // namespace oocforge::data
