// Copyright 2026 The compdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <memory>

#include "compdiff/compose.hpp"
#include "compdiff/grid_oracle.hpp"
#include "compdiff/model.hpp"
#include "compdiff/rng.hpp"
#include "compdiff/sample.hpp"
#include "compdiff/train.hpp"

namespace compdiff {
namespace {

GaussianConceptSpec gauss(double mx, double my, double v) {
  GaussianConceptSpec s;
  s.mean = Vector{{mx, my}};
  s.var = Vector{{v, v}};
  return s;
}

AnalyticGaussianField conjunction_field(int T) {
  return AnalyticGaussianField(NoiseSchedule::build(ScheduleKind::cosine, T), gauss(0, 0, 4),
                               {{ConceptLabel::discrete(0), gauss(-1, 0, 1)}, {ConceptLabel::discrete(1), gauss(1, 0, 1)}});
}

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Philox rng(seed, 0);
  Matrix x(rows, cols);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  return x;
}

DenoiserNet blob_net() {
  DenoiserConfig c;
  c.data_dim = 64;
  c.hidden_widths = {256, 256, 256};
  c.time_embed_dim = 32;
  c.label_embed_dim = 64;
  c.coord_dim = 2;
  return DenoiserNet::initialized(c, 0);
}

void BM_PhiloxNormal(benchmark::State& state) {
  Philox rng(0, 0);
  for (auto _ : state) benchmark::DoNotOptimize(rng.normal());
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_PhiloxNormal);

void BM_ComposedEpsilonAnalytic(benchmark::State& state) {
  const auto field = conjunction_field(1000);
  const Matrix x = random_matrix(state.range(0), 2, 1);
  const CompositionSpec spec({{ConceptLabel::discrete(0), Polarity::positive, 1.0},
                              {ConceptLabel::discrete(1), Polarity::positive, 1.0}});
  for (auto _ : state) benchmark::DoNotOptimize(composed_epsilon(field, x, 500, spec));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ComposedEpsilonAnalytic)->Arg(1)->Arg(500);

void BM_DdpmSampleAnalytic(benchmark::State& state) {
  const auto field = conjunction_field(100);
  const CompositionSpec spec({{ConceptLabel::discrete(0), Polarity::positive, 1.0},
                              {ConceptLabel::discrete(1), Polarity::positive, 1.0}});
  for (auto _ : state) benchmark::DoNotOptimize(ddpm_sample(field, spec, state.range(0), 0).samples);
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DdpmSampleAnalytic)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_DenoiserForward(benchmark::State& state) {
  const DenoiserNet net = blob_net();
  const Matrix x = random_matrix(state.range(0), 64, 2);
  const ConceptLabel label = ConceptLabel::coord({0.25, -0.5});
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x, 50, label));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DenoiserForward)->Arg(1)->Arg(500)->Unit(benchmark::kMicrosecond);

void BM_DenoiserTrainStep(benchmark::State& state) {
  DenoiserNet net = blob_net();
  const auto sched = NoiseSchedule::build(ScheduleKind::cosine, 100);
  const Matrix x0 = random_matrix(128, 64, 3);
  std::vector<ConceptLabel> labels(128, ConceptLabel::coord({0.0, 0.0}));
  AdamState adam(net.param_count());
  Philox rng(4, 0);
  for (auto _ : state) {
    const DenoisingLoss loss = denoising_loss(net, x0, labels, sched, 0.1, rng);
    adam_step(net.params(), loss.grad, adam, AdamConfig{});
  }
  state.SetItemsProcessed(state.iterations() * 128);
}
BENCHMARK(BM_DenoiserTrainStep)->Unit(benchmark::kMillisecond);

void BM_GridOracleEpsilon(benchmark::State& state) {
  const auto sched = NoiseSchedule::build(ScheduleKind::cosine, 1000);
  const GaussianConceptSpec spec = gauss(0.5, 0, 1);
  const GridOracleField oracle(sched, grid_around(spec, 8.0, static_cast<int>(state.range(0))), gaussian_density(spec));
  const Matrix x = random_matrix(25, 2, 5);
  for (auto _ : state) benchmark::DoNotOptimize(oracle.epsilon(x, 250, ConceptLabel::null()));
}
BENCHMARK(BM_GridOracleEpsilon)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace compdiff

BENCHMARK_MAIN();
