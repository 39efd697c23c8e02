#include <doctest.h>

#include <cmath>

#include "oocforge/metrics.hpp"
#include "oocforge/rng.hpp"
#include "support/oracles.hpp"

using namespace oocforge;
using namespace oocforge::metrics;

namespace {

PredictionSet preds_of(std::initializer_list<std::pair<double, int>> rows) {
  PredictionSet out;
  ImageId id = 0;
  for (auto& [score, y] : rows) {
    out.push_back({id++, score, y});
  }
  return out;
}

PredictionSet random_preds(Rng& rng, std::size_t n, bool with_ties) {
  PredictionSet out;
  for (std::size_t i = 0; i < n; ++i) {
    double score = rng.uniform();
    if (with_ties) score = std::round(score * 8.0) / 8.0;
    out.push_back({static_cast<ImageId>(i), score,
                   rng.uniform() < 0.5 ? 1 : 0});
  }
  return out;
}

}  // namespace

TEST_CASE("auc identities") {
  CHECK(auc(preds_of({{0.9, 1}, {0.8, 1}, {0.2, 0}, {0.1, 0}})) == 1.0);
  CHECK(auc(preds_of({{0.5, 1}, {0.5, 0}, {0.5, 1}, {0.5, 0}})) == 0.5);
  // 3 wins, 1 loss of 4 pairs
  CHECK(auc(preds_of({{0.9, 1}, {0.4, 1}, {0.6, 0}, {0.1, 0}})) == 0.75);
  CHECK_THROWS_AS(auc(preds_of({{0.9, 1}, {0.4, 1}})), ComputeError);
}

TEST_CASE("rank-based auc equals pair counting exactly") {
  Rng rng(99);
  for (int round = 0; round < 60; ++round) {
    const auto preds = random_preds(rng, 2 + rng.below(199), true);
    bool has_pos = false, has_neg = false;
    for (const auto& p : preds) (p.y ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) continue;
    CHECK(auc(preds) == testsupport::brute_auc(preds));
  }
}

TEST_CASE("auc is invariant to strictly increasing score transforms") {
  Rng rng(123);
  for (int round = 0; round < 20; ++round) {
    const auto preds = random_preds(rng, 50, true);
    bool has_pos = false, has_neg = false;
    for (const auto& p : preds) (p.y ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) continue;
    PredictionSet warped = preds;
    for (auto& p : warped) p.score = std::tanh(3.0 * p.score) + 2.0;
    CHECK(auc(warped) == doctest::Approx(auc(preds)).epsilon(1e-12));

    PredictionSet flipped = preds;
    for (auto& p : flipped) p.y = 1 - p.y;
    CHECK(auc(flipped) == doctest::Approx(1.0 - auc(preds)).epsilon(1e-12));
  }
}

TEST_CASE("error_rate with the threshold tie predicting negative") {
  CHECK(error_rate(preds_of({{0.9, 1}, {0.1, 0}})) == 0.0);
  // score exactly 0.5 predicts 0, so y=1 counts as an error
  CHECK(error_rate(preds_of({{0.5, 1}})) == 1.0);
  CHECK(error_rate(preds_of({{0.5, 0}})) == 0.0);

  Rng rng(5);
  const auto preds = random_preds(rng, 10, false);
  std::size_t wrong = 0;
  for (const auto& p : preds) {
    wrong += ((p.score > 0.5 ? 1 : 0) != p.y);
  }
  CHECK(error_rate(preds) == doctest::Approx(wrong / 10.0));
}

TEST_CASE("mean_nll values") {
  // clamp-saturated perfect predictor
  CHECK(mean_nll(preds_of({{1.0, 1}, {0.0, 0}})) <= 1e-11);
  CHECK(mean_nll(preds_of({{0.5, 1}, {0.5, 0}})) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  const auto preds = preds_of(
      {{0.9, 1}, {0.8, 0}, {0.3, 1}, {0.6, 1}, {0.2, 0}, {0.7, 0}});
  double expected = 0.0;
  expected += -std::log(0.9);
  expected += -std::log(1.0 - 0.8);
  expected += -std::log(0.3);
  expected += -std::log(0.6);
  expected += -std::log(1.0 - 0.2);
  expected += -std::log(1.0 - 0.7);
  CHECK(mean_nll(preds) == doctest::Approx(expected / 6.0).epsilon(1e-12));
  CHECK(mean_nll(preds) >= 0.0);
}

TEST_CASE("ece identities") {
  // constant 0.7 on data with exactly 70% positives
  PredictionSet calibrated;
  for (int i = 0; i < 10; ++i) {
    calibrated.push_back({i, 0.7, i < 7 ? 1 : 0});
  }
  CHECK(ece(calibrated) == doctest::Approx(0.0).epsilon(1e-12));

  // constant 1.0 on all-negative data
  PredictionSet wrong;
  for (int i = 0; i < 4; ++i) wrong.push_back({i, 1.0, 0});
  CHECK(ece(wrong) == doctest::Approx(1.0).epsilon(1e-12));

  // scores at bin centers with matching empirical rates
  PredictionSet centered;
  ImageId id = 0;
  for (int b = 0; b < 5; ++b) {
    const double center = (b + 0.5) / 5.0;
    // 10 examples per bin, round(center*10) positives
    const int n_pos = static_cast<int>(std::lround(center * 10.0));
    for (int i = 0; i < 10; ++i) {
      centered.push_back({id++, center, i < n_pos ? 1 : 0});
    }
  }
  CHECK(ece(centered, 5) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("ece equals the brute-force bin computation") {
  Rng rng(314);
  for (int round = 0; round < 40; ++round) {
    PredictionSet preds;
    for (int i = 0; i < 20; ++i) {
      preds.push_back({i, rng.uniform(), rng.uniform() < 0.4 ? 1 : 0});
    }
    CHECK(std::abs(ece(preds, 5) - testsupport::brute_ece(preds, 5)) <= 1e-12);
    CHECK(std::abs(ece(preds, 15) - testsupport::brute_ece(preds, 15)) <=
          1e-12);
  }
}

TEST_CASE("split_report breaks metrics out by hardness subset") {
  HardnessTags tags;
  tags.task = "car";
  PredictionSet preds;
  Rng rng(2718);
  for (ImageId id = 0; id < 50; ++id) {
    const bool pos = rng.uniform() < 0.4;
    const bool hard = rng.uniform() < 0.3;
    tags.tags[id] = pos ? (hard ? Tag::HardPositive : Tag::EasyPositive)
                        : (hard ? Tag::HardNegative : Tag::EasyNegative);
    preds.push_back({id, rng.uniform(), pos ? 1 : 0});
  }
  const MetricsReport report = split_report(preds, tags);

  // counts partition the set
  const auto& s = report.subsets;
  CHECK(s.at("hard").count == s.at("hard_pos").count + s.at("hard_neg").count);
  CHECK(s.at("all").count == s.at("hard").count + s.at("easy").count);
  CHECK(s.at("all").count == 50);

  // filter-then-recompute oracle per subset
  const auto filter = [&](auto pred) {
    PredictionSet out;
    for (const auto& p : preds) {
      if (pred(tags.tags.at(p.id))) out.push_back(p);
    }
    return out;
  };
  const auto hard_pos = filter([](Tag t) { return t == Tag::HardPositive; });
  const auto easy = filter([](Tag t) { return !is_hard(t); });
  CHECK(*s.at("hard_pos").nll == doctest::Approx(mean_nll(hard_pos)));
  CHECK(*s.at("hard_pos").error == doctest::Approx(error_rate(hard_pos)));
  CHECK(*s.at("easy").ece == doctest::Approx(ece(easy)));
  CHECK(*s.at("easy").auc == doctest::Approx(auc(easy)));

  // hard_pos is single-class: AUC omitted
  CHECK_FALSE(s.at("hard_pos").auc.has_value());
  CHECK_FALSE(s.at("hard_neg").auc.has_value());

  SUBCASE("prediction without a tag is a coverage error") {
    PredictionSet extra = preds;
    extra.push_back({999, 0.5, 1});
    CHECK_THROWS_AS(split_report(extra, tags), IntegrityError);
  }
}

TEST_CASE("all-easy split leaves hard metrics absent") {
  HardnessTags tags;
  PredictionSet preds;
  for (ImageId id = 0; id < 8; ++id) {
    tags.tags[id] = id < 4 ? Tag::EasyPositive : Tag::EasyNegative;
    preds.push_back({id, id < 4 ? 0.8 : 0.3, id < 4 ? 1 : 0});
  }
  const MetricsReport report = split_report(preds, tags);
  CHECK(report.subsets.at("hard").count == 0);
  CHECK_FALSE(report.subsets.at("hard").nll.has_value());
  CHECK(report.subsets.at("easy").count == 8);
  CHECK(*report.subsets.at("easy").nll ==
        doctest::Approx(*report.subsets.at("all").nll));
}
