#include <doctest.h>

#include <algorithm>

#include "oocforge/ce_miner.hpp"
#include "oocforge/rng.hpp"
#include "support/oracles.hpp"
#include "support/synth.hpp"

using namespace oocforge;
using namespace oocforge::ce;

namespace {

// 100x100 images so pixel_area = 10000 * fraction exactly.
class StoreBuilder {
 public:
  StoreBuilder& category(CategoryId id, const std::string& name) {
    table_.add(id, {name, data::CategoryKind::Thing});
    return *this;
  }
  StoreBuilder& image(ImageId id) {
    images_.push_back({id, 100, 100});
    return *this;
  }
  StoreBuilder& area(ImageId image, CategoryId cat, double fraction) {
    anns_.push_back({image, cat, fraction * 10000.0});
    return *this;
  }
  data::AnnotationStore build() const {
    return data::make_store(images_, table_, anns_);
  }

 private:
  std::vector<data::ImageRecord> images_;
  data::CategoryTable table_;
  std::vector<data::InstanceAnnotation> anns_;
};

constexpr CategoryId kTarget = 1;
constexpr CategoryId kCue = 2;
constexpr CategoryId kOther = 3;

}  // namespace

TEST_CASE("context_score is the mean area difference over Y-positives") {
  SUBCASE("single positive image") {
    auto store = StoreBuilder()
                     .category(kTarget, "target")
                     .category(kCue, "cue")
                     .image(1)
                     .area(1, kTarget, 0.2)
                     .area(1, kCue, 0.3)
                     .build();
    const auto score = context_score(store, {1}, kTarget, kCue);
    CHECK(score.score == doctest::Approx(0.1).epsilon(1e-12));
  }

  SUBCASE("cue absent from every positive") {
    auto store = StoreBuilder()
                     .category(kTarget, "target")
                     .category(kCue, "cue")
                     .image(1)
                     .image(2)
                     .area(1, kTarget, 0.2)
                     .area(2, kTarget, 0.4)
                     .build();
    const auto score = context_score(store, {1, 2}, kTarget, kCue);
    CHECK(score.score == doctest::Approx(-0.3).epsilon(1e-12));
  }

  SUBCASE("no positive training image") {
    auto store = StoreBuilder()
                     .category(kTarget, "target")
                     .category(kCue, "cue")
                     .image(1)
                     .area(1, kCue, 0.5)
                     .build();
    CHECK_THROWS_AS(context_score(store, {1}, kTarget, kCue), ComputeError);
  }

  SUBCASE("cue must differ from target") {
    auto store = StoreBuilder()
                     .category(kTarget, "target")
                     .image(1)
                     .area(1, kTarget, 0.2)
                     .build();
    CHECK_THROWS_AS(context_score(store, {1}, kTarget, kTarget), ConfigError);
  }
}

TEST_CASE("alpha_context_cues thresholds strictly") {
  // road scores 0.12, sky scores 0.04 against a 0.1-area target
  auto store = StoreBuilder()
                   .category(kTarget, "target")
                   .category(kCue, "road")
                   .category(kOther, "sky")
                   .image(1)
                   .area(1, kTarget, 0.1)
                   .area(1, kCue, 0.22)
                   .area(1, kOther, 0.14)
                   .build();
  const CueSet cues = alpha_context_cues(store, {1}, kTarget, 0.05);
  REQUIRE(cues.cues.size() == 1);
  CHECK(cues.cues[0].first == kCue);
  CHECK(cues.cues[0].second == doctest::Approx(0.12).epsilon(1e-12));

  const CueSet none = alpha_context_cues(store, {1}, kTarget, 1e18);
  CHECK(none.empty());
}

TEST_CASE("alpha_context_cues matches a brute-force recomputation") {
  Rng rng(20250808);
  for (int round = 0; round < 25; ++round) {
    const auto synth = testsupport::random_store(rng, 6, 3);
    for (CategoryId target : synth.category_ids) {
      if (synth.store.positives(synth.image_ids, target).empty()) continue;
      for (CategoryId cue : synth.category_ids) {
        if (cue == target) continue;
        const double got =
            context_score(synth.store, synth.image_ids, target, cue).score;
        const double expected = testsupport::brute_context_score(
            synth.store, synth.image_ids, target, cue);
        CHECK(got == doctest::Approx(expected).epsilon(1e-12));
      }
      const double alpha = rng.uniform() * 0.2 - 0.1;
      const CueSet cues =
          alpha_context_cues(synth.store, synth.image_ids, target, alpha);
      const auto expected =
          testsupport::brute_cue_set(synth.store, synth.image_ids, target, alpha);
      REQUIRE(cues.cues.size() == expected.size());
      for (std::size_t i = 0; i < expected.size(); ++i) {
        CHECK(cues.cues[i].first == expected[i].first);
        CHECK(cues.cues[i].second ==
              doctest::Approx(expected[i].second).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("tag_ce_hardness applies the noisy-or rules") {
  auto store = StoreBuilder()
                   .category(kTarget, "target")
                   .category(kCue, "cue")
                   .image(1)   // positive, cue absent
                   .area(1, kTarget, 0.05)
                   .image(2)   // negative, cue large
                   .area(2, kCue, 0.5)
                   .image(3)   // negative, no cue
                   .image(4)   // positive, cue large
                   .area(4, kTarget, 0.05)
                   .area(4, kCue, 0.4)
                   .build();
  CueSet cues;
  cues.target = kTarget;
  cues.alpha = 0.05;
  cues.cues = {{kCue, 0.3}};

  const std::vector<ImageId> eval = {1, 2, 3, 4};
  const HardnessTags tags = tag_ce_hardness(store, eval, kTarget, cues, 0.1);
  CHECK(tags.tags.at(1) == Tag::HardPositive);
  CHECK(tags.tags.at(2) == Tag::HardNegative);
  CHECK(tags.tags.at(3) == Tag::EasyNegative);
  CHECK(tags.tags.at(4) == Tag::EasyPositive);

  SUBCASE("empty cue set yields no hard examples") {
    CueSet empty;
    empty.target = kTarget;
    const HardnessTags t = tag_ce_hardness(store, eval, kTarget, empty, 0.1);
    CHECK(t.count(Tag::HardPositive) == 0);
    CHECK(t.count(Tag::HardNegative) == 0);
    CHECK(t.count(Tag::EasyPositive) == 2);
    CHECK(t.count(Tag::EasyNegative) == 2);
  }

  SUBCASE("area exactly at beta counts as easy on both sides") {
    auto s = StoreBuilder()
                 .category(kTarget, "target")
                 .category(kCue, "cue")
                 .image(1)
                 .area(1, kTarget, 0.05)
                 .area(1, kCue, 0.25)
                 .image(2)
                 .area(2, kCue, 0.25)
                 .build();
    const HardnessTags t = tag_ce_hardness(s, {1, 2}, kTarget, cues, 0.25);
    CHECK(t.tags.at(1) == Tag::EasyPositive);  // not < beta
    CHECK(t.tags.at(2) == Tag::EasyNegative);  // not > beta
  }
}

TEST_CASE("tag_ce_hardness matches brute-force rule application") {
  Rng rng(31337);
  for (int round = 0; round < 40; ++round) {
    const auto synth = testsupport::random_store(rng, 10, 4);
    for (CategoryId target : synth.category_ids) {
      if (synth.store.positives(synth.image_ids, target).empty()) continue;
      const double alpha = rng.uniform() * 0.1;
      const double beta = rng.uniform() * 0.3;
      const CueSet cues =
          alpha_context_cues(synth.store, synth.image_ids, target, alpha);
      const HardnessTags tags =
          tag_ce_hardness(synth.store, synth.image_ids, target, cues, beta);
      const auto expected = testsupport::brute_ce_tags(
          synth.store, synth.image_ids, target,
          testsupport::brute_cue_set(synth.store, synth.image_ids, target,
                                     alpha),
          beta);
      CHECK(tags.tags == expected);
    }
  }
}

TEST_CASE("hardness_balance returns the two conditional hard rates") {
  auto store = StoreBuilder()
                   .category(kTarget, "target")
                   .category(kCue, "cue")
                   .image(1)  // train positive with strong cue
                   .area(1, kTarget, 0.1)
                   .area(1, kCue, 0.3)
                   .image(10)  // eval positive, no cue -> hard
                   .area(10, kTarget, 0.02)
                   .image(11)  // eval positive, no cue -> hard
                   .area(11, kTarget, 0.03)
                   .image(12)  // eval negative, big cue -> hard
                   .area(12, kCue, 0.5)
                   .image(13)  // eval negative, no cue -> easy
                   .build();
  const auto [p_pos, p_neg] =
      hardness_balance(store, {1}, {10, 11, 12, 13}, kTarget, 0.05, 0.1);
  CHECK(p_pos == doctest::Approx(1.0));
  CHECK(p_neg == doctest::Approx(0.5));

  SUBCASE("zero hard examples") {
    // cue present at beta-sized area on the positives, small on negatives
    auto s = StoreBuilder()
                 .category(kTarget, "target")
                 .category(kCue, "cue")
                 .image(1)
                 .area(1, kTarget, 0.1)
                 .area(1, kCue, 0.3)
                 .image(10)
                 .area(10, kTarget, 0.02)
                 .area(10, kCue, 0.5)
                 .image(12)
                 .area(12, kCue, 0.05)
                 .build();
    const auto [hp, hn] = hardness_balance(s, {1}, {10, 12}, kTarget, 0.05, 0.1);
    CHECK(hp == 0.0);
    CHECK(hn == 0.0);
  }

  SUBCASE("single-class eval split is undefined") {
    CHECK_THROWS_AS(hardness_balance(store, {1}, {10, 11}, kTarget, 0.05, 0.1),
                    ComputeError);
  }
}

TEST_CASE("hardness_balance equals brute-force counting") {
  Rng rng(911);
  int checked = 0;
  while (checked < 10) {
    const auto synth = testsupport::random_store(rng, 20, 4);
    const CategoryId target = synth.category_ids[0];
    const auto positives = synth.store.positives(synth.image_ids, target);
    if (positives.empty() || positives.size() == synth.image_ids.size()) {
      continue;
    }
    const double alpha = 0.02;
    const double beta = 0.15;
    const auto [hp_rate, hn_rate] = hardness_balance(
        synth.store, synth.image_ids, synth.image_ids, target, alpha, beta);
    const auto tags = testsupport::brute_ce_tags(
        synth.store, synth.image_ids, target,
        testsupport::brute_cue_set(synth.store, synth.image_ids, target, alpha),
        beta);
    std::size_t hp = 0, ep = 0, hn = 0, en = 0;
    for (const auto& [_, tag] : tags) {
      if (tag == Tag::HardPositive) ++hp;
      if (tag == Tag::EasyPositive) ++ep;
      if (tag == Tag::HardNegative) ++hn;
      if (tag == Tag::EasyNegative) ++en;
    }
    CHECK(hp_rate == doctest::Approx(double(hp) / double(hp + ep)));
    CHECK(hn_rate == doctest::Approx(double(hn) / double(hn + en)));
    ++checked;
  }
}

TEST_CASE("raising beta grows hard positives and shrinks hard negatives") {
  Rng rng(4242);
  for (int round = 0; round < 30; ++round) {
    const auto synth = testsupport::random_store(rng);
    const CategoryId target = synth.category_ids[0];
    if (synth.store.positives(synth.image_ids, target).empty()) continue;
    const CueSet cues =
        alpha_context_cues(synth.store, synth.image_ids, target, 0.0);
    const double beta_lo = rng.uniform() * 0.2;
    const double beta_hi = beta_lo + rng.uniform() * 0.2;
    const auto lo =
        tag_ce_hardness(synth.store, synth.image_ids, target, cues, beta_lo);
    const auto hi =
        tag_ce_hardness(synth.store, synth.image_ids, target, cues, beta_hi);
    CHECK(hi.count(Tag::HardPositive) >= lo.count(Tag::HardPositive));
    CHECK(hi.count(Tag::HardNegative) <= lo.count(Tag::HardNegative));
  }
}

TEST_CASE("raising alpha shrinks the cue set and grows hard positives") {
  Rng rng(777);
  for (int round = 0; round < 30; ++round) {
    const auto synth = testsupport::random_store(rng);
    const CategoryId target = synth.category_ids[0];
    if (synth.store.positives(synth.image_ids, target).empty()) continue;
    const double alpha_lo = -0.2 + rng.uniform() * 0.2;
    const double alpha_hi = alpha_lo + rng.uniform() * 0.2;
    const CueSet lo =
        alpha_context_cues(synth.store, synth.image_ids, target, alpha_lo);
    const CueSet hi =
        alpha_context_cues(synth.store, synth.image_ids, target, alpha_hi);
    CHECK(hi.cues.size() <= lo.cues.size());
    for (const auto& [cue, _] : hi.cues) {
      const bool in_lo =
          std::any_of(lo.cues.begin(), lo.cues.end(),
                      [&](const auto& c) { return c.first == cue; });
      CHECK(in_lo);
    }
    if (!hi.empty()) {
      const auto tags_lo =
          tag_ce_hardness(synth.store, synth.image_ids, target, lo, 0.1);
      const auto tags_hi =
          tag_ce_hardness(synth.store, synth.image_ids, target, hi, 0.1);
      CHECK(tags_hi.count(Tag::HardPositive) >=
            tags_lo.count(Tag::HardPositive));
    }
  }
}

TEST_CASE("tags partition positives and negatives") {
  Rng rng(88);
  for (int round = 0; round < 20; ++round) {
    const auto synth = testsupport::random_store(rng);
    const CategoryId target = synth.category_ids[0];
    const auto positives = synth.store.positives(synth.image_ids, target);
    if (positives.empty()) continue;
    const CueSet cues =
        alpha_context_cues(synth.store, synth.image_ids, target, 0.05);
    const auto tags =
        tag_ce_hardness(synth.store, synth.image_ids, target, cues, 0.1);
    CHECK(tags.tags.size() == synth.image_ids.size());
    CHECK(tags.count(Tag::HardPositive) + tags.count(Tag::EasyPositive) ==
          positives.size());
    CHECK(tags.count(Tag::HardNegative) + tags.count(Tag::EasyNegative) ==
          synth.image_ids.size() - positives.size());
  }
}

TEST_CASE("eval-side edits to non-cue categories never change tags") {
  auto base = StoreBuilder()
                  .category(kTarget, "target")
                  .category(kCue, "cue")
                  .category(kOther, "bystander")
                  .image(1)
                  .area(1, kTarget, 0.1)
                  .area(1, kCue, 0.3)
                  .image(10)
                  .area(10, kTarget, 0.02)
                  .image(11)
                  .area(11, kCue, 0.4);
  auto store = base.build();
  const CueSet cues = alpha_context_cues(store, {1}, kTarget, 0.05);
  REQUIRE(cues.cues.size() == 1);
  const auto before = tag_ce_hardness(store, {10, 11}, kTarget, cues, 0.1);

  // Same store plus a large bystander annotation on both eval images.
  auto edited = base.area(10, kOther, 0.9).area(11, kOther, 0.9).build();
  const auto after = tag_ce_hardness(edited, {10, 11}, kTarget, cues, 0.1);
  CHECK(before.tags == after.tags);
}

TEST_CASE("an image-filling background scores 1 - mean target area") {
  Rng rng(3030);
  const auto synth = testsupport::random_store(rng, 8, 3);
  const CategoryId target = synth.category_ids[0];
  const auto positives = synth.store.positives(synth.image_ids, target);
  if (positives.empty()) return;

  // Rebuild with an extra background category filling every positive image.
  std::vector<data::ImageRecord> images;
  for (const auto& [id, rec] : synth.store.images()) images.push_back(rec);
  data::CategoryTable table;
  for (const auto& [id, info] : synth.store.categories().entries()) {
    table.add(id, info);
  }
  const CategoryId background = 99;
  table.add(background, {"background", data::CategoryKind::Stuff});
  auto anns = synth.store.annotations();
  for (ImageId id : positives) {
    const auto& rec = synth.store.images().at(id);
    anns.push_back(
        {id, background, double(rec.width) * double(rec.height)});
  }
  const auto store = data::make_store(images, std::move(table), anns);

  double mean_target = 0.0;
  for (ImageId id : positives) mean_target += store.area_fraction(id, target);
  mean_target /= static_cast<double>(positives.size());

  const auto score = context_score(store, synth.image_ids, target, background);
  CHECK(score.score == doctest::Approx(1.0 - mean_target).epsilon(1e-9));
}
