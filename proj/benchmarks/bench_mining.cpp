#include <benchmark/benchmark.h>

#include "oocforge/annotations.hpp"
#include "oocforge/ce_miner.hpp"
#include "oocforge/metrics.hpp"
#include "oocforge/rng.hpp"

using namespace oocforge;

namespace {

// Store shaped like an annotation dataset: many images, ~170 categories,
// a handful of annotations each.
data::AnnotationStore make_large_store(std::size_t n_images,
                                       std::size_t n_categories) {
  Rng rng(23);
  std::vector<data::ImageRecord> images;
  data::CategoryTable table;
  for (std::size_t c = 1; c <= n_categories; ++c) {
    table.add(static_cast<CategoryId>(c),
              {"cat-" + std::to_string(c), data::CategoryKind::Stuff});
  }
  std::vector<data::InstanceAnnotation> anns;
  for (std::size_t i = 0; i < n_images; ++i) {
    const auto id = static_cast<ImageId>(i);
    images.push_back({id, 640, 480});
    const std::size_t n_ann = 2 + rng.below(8);
    for (std::size_t k = 0; k < n_ann; ++k) {
      const auto cat = static_cast<CategoryId>(1 + rng.below(n_categories));
      anns.push_back({id, cat, rng.uniform() * 0.25 * 640.0 * 480.0});
    }
  }
  return data::make_store(std::move(images), std::move(table), std::move(anns));
}

}  // namespace

static void BM_AlphaContextCues(benchmark::State& state) {
  const auto store = make_large_store(state.range(0), 170);
  const auto ids = store.image_ids();
  for (auto _ : state) {
    benchmark::DoNotOptimize(ce::alpha_context_cues(store, ids, 1, 0.05));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_AlphaContextCues)->Arg(1000)->Arg(10000)
    ->Unit(benchmark::kMillisecond);

static void BM_TagCeHardness(benchmark::State& state) {
  const auto store = make_large_store(state.range(0), 170);
  const auto ids = store.image_ids();
  const auto cues = ce::alpha_context_cues(store, ids, 1, 0.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ce::tag_ce_hardness(store, ids, 1, cues, 0.1));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TagCeHardness)->Arg(1000)->Arg(10000)
    ->Unit(benchmark::kMillisecond);

static void BM_Auc(benchmark::State& state) {
  Rng rng(7);
  metrics::PredictionSet preds;
  for (std::size_t i = 0; i < static_cast<std::size_t>(state.range(0)); ++i) {
    preds.push_back({static_cast<ImageId>(i), rng.uniform(),
                     rng.uniform() < 0.3 ? 1 : 0});
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(metrics::auc(preds));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Auc)->Arg(1000)->Arg(100000);

static void BM_Ece(benchmark::State& state) {
  Rng rng(8);
  metrics::PredictionSet preds;
  for (std::size_t i = 0; i < static_cast<std::size_t>(state.range(0)); ++i) {
    preds.push_back({static_cast<ImageId>(i), rng.uniform(),
                     rng.uniform() < 0.3 ? 1 : 0});
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(metrics::ece(preds, 15));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Ece)->Arg(1000)->Arg(100000);
