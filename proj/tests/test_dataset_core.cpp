#include <doctest.h>

#include <algorithm>
#include <set>

#include "oocforge/annotations.hpp"
#include "oocforge/embeddings.hpp"
#include "oocforge/rng.hpp"
#include "oocforge/split.hpp"
#include "support/synth.hpp"
#include "support/tmp.hpp"

using namespace oocforge;
using namespace oocforge::data;
using testsupport::TempDir;
using testsupport::write_text;

namespace {

const char* kTinyCoco = R"({
  "images": [
    {"id": 1, "width": 100, "height": 100, "file_name": "a.jpg"},
    {"id": 2, "width": 200, "height": 50, "file_name": "b.jpg"}
  ],
  "annotations": [
    {"id": 10, "image_id": 1, "category_id": 7, "area": 2000.0, "iscrowd": 0},
    {"id": 11, "image_id": 1, "category_id": 7, "area": 3000.0, "iscrowd": 1},
    {"id": 12, "image_id": 2, "category_id": 8, "area": 10000.0, "iscrowd": 0}
  ],
  "categories": [
    {"id": 7, "name": "car", "supercategory": "vehicle"},
    {"id": 8, "name": "road", "supercategory": "ground"}
  ]
})";

}  // namespace

TEST_CASE("load_annotations preserves counts") {
  TempDir dir;
  write_text(dir.file("coco.json"), kTinyCoco);
  const AnnotationStore store = load_annotations(dir.file("coco.json"));
  CHECK(store.images().size() == 2);
  CHECK(store.annotations().size() == 3);
  CHECK(store.categories().size() == 2);
}

TEST_CASE("load_annotations accepts an empty annotation list") {
  TempDir dir;
  write_text(dir.file("coco.json"), R"({
    "images": [{"id": 1, "width": 10, "height": 10}],
    "annotations": [],
    "categories": [{"id": 1, "name": "car"}]
  })");
  const AnnotationStore store = load_annotations(dir.file("coco.json"));
  CHECK(store.annotations().empty());
  CHECK(store.area_fraction(1, 1) == 0.0);
}

TEST_CASE("load_annotations rejects dangling references") {
  TempDir dir;
  write_text(dir.file("bad_image.json"), R"({
    "images": [{"id": 1, "width": 10, "height": 10}],
    "annotations": [{"id": 5, "image_id": 99, "category_id": 1, "area": 4.0}],
    "categories": [{"id": 1, "name": "car"}]
  })");
  CHECK_THROWS_AS(load_annotations(dir.file("bad_image.json")), IntegrityError);

  write_text(dir.file("bad_cat.json"), R"({
    "images": [{"id": 1, "width": 10, "height": 10}],
    "annotations": [{"id": 5, "image_id": 1, "category_id": 99, "area": 4.0}],
    "categories": [{"id": 1, "name": "car"}]
  })");
  CHECK_THROWS_AS(load_annotations(dir.file("bad_cat.json")), IntegrityError);
}

TEST_CASE("load_annotations rejects malformed documents") {
  TempDir dir;
  write_text(dir.file("broken.json"), "{ not json");
  CHECK_THROWS_AS(load_annotations(dir.file("broken.json")), ParseError);

  write_text(dir.file("badrec.json"), R"({
    "images": [{"id": 1, "width": "wide", "height": 10}],
    "annotations": [],
    "categories": []
  })");
  CHECK_THROWS_AS(load_annotations(dir.file("badrec.json")), ParseError);
}

TEST_CASE("load_annotations drops the unlabelled class") {
  TempDir dir;
  write_text(dir.file("coco.json"), R"({
    "images": [{"id": 1, "width": 10, "height": 10}],
    "annotations": [{"id": 2, "image_id": 1, "category_id": 183, "area": 5.0}],
    "categories": [
      {"id": 1, "name": "car"},
      {"id": 183, "name": "unlabeled"}
    ]
  })");
  const AnnotationStore store = load_annotations(dir.file("coco.json"));
  CHECK(store.categories().size() == 1);
  CHECK(store.annotations().empty());
}

TEST_CASE("area_fraction definition") {
  TempDir dir;
  write_text(dir.file("coco.json"), kTinyCoco);
  const AnnotationStore store = load_annotations(dir.file("coco.json"));

  // two instances of 2000 and 3000 px^2 in a 100x100 image
  CHECK(store.area_fraction(1, 7) == doctest::Approx(0.5).epsilon(1e-12));
  // absent category
  CHECK(store.area_fraction(1, 8) == 0.0);
  // full coverage
  CHECK(store.area_fraction(2, 8) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(store.area_fraction(42, 7), LookupError);
}

TEST_CASE("area_fraction is additive and nonnegative") {
  Rng rng(7101);
  for (int round = 0; round < 20; ++round) {
    const auto synth = testsupport::random_store(rng);
    for (ImageId id : synth.image_ids) {
      for (CategoryId cat : synth.category_ids) {
        double expected = 0.0;
        const auto& rec = synth.store.images().at(id);
        for (const auto& ann : synth.store.annotations()) {
          if (ann.image_id == id && ann.category_id == cat) {
            expected += ann.pixel_area / (double(rec.width) * rec.height);
          }
        }
        const double got = synth.store.area_fraction(id, cat);
        CHECK(got >= 0.0);
        CHECK(got == doctest::Approx(expected).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("make_split sizes use floor rounding with remainder to train") {
  std::vector<ImageId> ids(100);
  for (int i = 0; i < 100; ++i) ids[i] = i;
  const DatasetSplit split = make_split(ids, {0.7, 0.1, 0.2}, 17);
  CHECK(split.train_ids.size() == 70);
  CHECK(split.valid_ids.size() == 10);
  CHECK(split.test_ids.size() == 20);
}

TEST_CASE("make_split reproduces the merged COCO-Stuff sizes") {
  std::vector<ImageId> ids(123287);
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<ImageId>(i);
  const DatasetSplit split = make_split(ids, {0.7, 0.1, 0.2}, 0);
  CHECK(split.train_ids.size() == 86302);
  CHECK(split.valid_ids.size() == 12328);
  CHECK(split.test_ids.size() == 24657);
}

TEST_CASE("make_split is deterministic in (ids, ratios, seed)") {
  Rng rng(555);
  std::vector<ImageId> ids;
  for (int i = 0; i < 1000; ++i) ids.push_back(1000 + i);

  const auto a = make_split(ids, {0.7, 0.1, 0.2}, 99);
  const auto b = make_split(ids, {0.7, 0.1, 0.2}, 99);
  CHECK(a.train_ids == b.train_ids);
  CHECK(a.valid_ids == b.valid_ids);
  CHECK(a.test_ids == b.test_ids);

  const auto c = make_split(ids, {0.7, 0.1, 0.2}, 100);
  CHECK(a.train_ids != c.train_ids);

  // partition: disjoint union equals the input id set
  std::set<ImageId> seen;
  for (const auto* part : {&a.train_ids, &a.valid_ids, &a.test_ids}) {
    for (ImageId id : *part) {
      CHECK(seen.insert(id).second);
    }
  }
  CHECK(seen.size() == ids.size());
}

TEST_CASE("make_split validates ratios") {
  std::vector<ImageId> ids = {1, 2, 3};
  CHECK_THROWS_AS(make_split(ids, {0.5, 0.2, 0.2}, 0), ConfigError);
  CHECK_THROWS_AS(make_split(ids, {-0.1, 0.6, 0.5}, 0), ConfigError);
}

TEST_CASE("split save/load round-trips") {
  TempDir dir;
  std::vector<ImageId> ids;
  for (int i = 0; i < 50; ++i) ids.push_back(i);
  const DatasetSplit split = make_split(ids, {0.7, 0.1, 0.2}, 5);
  save_split(split, dir.file("split.json"));
  const DatasetSplit loaded = load_split(dir.file("split.json"));
  CHECK(loaded.seed == split.seed);
  CHECK(loaded.train_ids == split.train_ids);
  CHECK(loaded.valid_ids == split.valid_ids);
  CHECK(loaded.test_ids == split.test_ids);
}

TEST_CASE("load_embeddings keeps shape and rejects bad rows") {
  TempDir dir;

  SUBCASE("uniform rows") {
    std::string lines;
    for (int i = 0; i < 5; ++i) {
      lines += "{\"image_id\": " + std::to_string(i) + ", \"captions\": [";
      for (int c = 0; c < 5; ++c) {
        if (c) lines += ",";
        lines += "[";
        for (int d = 0; d < 768; ++d) {
          if (d) lines += ",";
          lines += "0.25";
        }
        lines += "]";
      }
      lines += "]}\n";
    }
    write_text(dir.file("emb.jsonl"), lines);
    const EmbeddingStore store = load_embeddings(dir.file("emb.jsonl"));
    CHECK(store.size() == 5);
    CHECK(store.dimension() == 768);
    CHECK(store.captions(3).size() == 5);
  }

  SUBCASE("dimension mismatch") {
    write_text(dir.file("emb.jsonl"),
               "{\"image_id\": 1, \"captions\": [[1.0, 2.0]]}\n"
               "{\"image_id\": 2, \"captions\": [[1.0, 2.0, 3.0]]}\n");
    CHECK_THROWS_AS(load_embeddings(dir.file("emb.jsonl")), ParseError);
  }

  SUBCASE("zero captions") {
    write_text(dir.file("emb.jsonl"), "{\"image_id\": 1, \"captions\": []}\n");
    CHECK_THROWS_AS(load_embeddings(dir.file("emb.jsonl")), ParseError);
  }

  SUBCASE("non-finite entry") {
    write_text(dir.file("emb.jsonl"),
               "{\"image_id\": 1, \"captions\": [[1e999, 0.0]]}\n");
    CHECK_THROWS_AS(load_embeddings(dir.file("emb.jsonl")), ParseError);
  }
}
