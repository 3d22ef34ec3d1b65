// Serial reference kernels versus their OpenMP counterparts, plus one full
// filter pass. Run with OMP_NUM_THREADS to vary the thread count.

#include <map>
#include <random>
#include <set>
#include <vector>

#include <benchmark/benchmark.h>

#include "gtn/kernels.hpp"
#include "gtn/trend_filter.hpp"

namespace gtn {
namespace {

struct Fixture {
  InteractionGraph graph;
  IncidenceOperator incidence;
  PropagationOperator propagation;
  Matrix nodes;
  Matrix edges;
};

// Random graph with |E| = num_edges and average user/item degree 10.
const Fixture& fixture(Index num_edges, int dim) {
  static std::map<std::pair<Index, int>, Fixture> cache;
  auto it = cache.find({num_edges, dim});
  if (it != cache.end()) return it->second;
  const Index n = num_edges / 10, m = num_edges / 10;
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<Index> uu(0, n - 1), ii(0, m - 1);
  std::set<std::pair<Index, Index>> seen;
  std::vector<Interaction> pairs;
  while (static_cast<Index>(pairs.size()) < num_edges) {
    const Interaction e{uu(rng), ii(rng)};
    if (seen.insert({e.user, e.item}).second) pairs.push_back(e);
  }
  Fixture f{build_graph(pairs, n, m), {}, {}, {}, {}};
  f.incidence = build_incidence(f.graph);
  f.propagation = build_propagation(f.graph);
  std::normal_distribution<double> normal(0.0, 0.1);
  f.nodes = Matrix::NullaryExpr(f.graph.num_nodes(), dim, [&] { return normal(rng); });
  f.edges = Matrix::NullaryExpr(num_edges, dim, [&] { return normal(rng); });
  return cache.emplace(std::pair{num_edges, dim}, std::move(f)).first->second;
}

template <void (*Kernel)(const IncidenceOperator&, const Matrix&, Matrix&)>
void BM_IncidenceForward(benchmark::State& state) {
  const auto& f = fixture(state.range(0), static_cast<int>(state.range(1)));
  Matrix out;
  for (auto _ : state) {
    Kernel(f.incidence, f.nodes, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <void (*Kernel)(const IncidenceOperator&, const Matrix&, Matrix&)>
void BM_IncidenceTranspose(benchmark::State& state) {
  const auto& f = fixture(state.range(0), static_cast<int>(state.range(1)));
  Matrix out;
  for (auto _ : state) {
    Kernel(f.incidence, f.edges, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <void (*Kernel)(const IncidenceOperator&, const Matrix&, double, double, Matrix&,
                         Matrix*, std::uint8_t*)>
void BM_DualStep(benchmark::State& state) {
  const auto& f = fixture(state.range(0), static_cast<int>(state.range(1)));
  Matrix y = f.edges;
  for (auto _ : state) {
    Kernel(f.incidence, f.nodes, 0.5, 0.2, y, nullptr, nullptr);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <void (*Kernel)(const PropagationOperator&, const Matrix&, Matrix&)>
void BM_Propagate(benchmark::State& state) {
  const auto& f = fixture(state.range(0), static_cast<int>(state.range(1)));
  Matrix out;
  for (auto _ : state) {
    Kernel(f.propagation, f.nodes, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_GtcfFilter(benchmark::State& state) {
  const auto& f = fixture(state.range(0), static_cast<int>(state.range(1)));
  FilterConfig cfg;
  cfg.num_layers = 3;
  for (auto _ : state) {
    auto trace = gtcf_filter(f.nodes, f.incidence, cfg);
    benchmark::DoNotOptimize(trace.output.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * cfg.num_layers);
}

void sizes(benchmark::internal::Benchmark* b) {
  for (long edges : {10000L, 100000L, 300000L}) b->Args({edges, 64});
  b->Unit(benchmark::kMillisecond);
}

BENCHMARK_TEMPLATE(BM_IncidenceForward, serial::incidence_forward)->Apply(sizes);
BENCHMARK_TEMPLATE(BM_IncidenceForward, parallel::incidence_forward)->Apply(sizes);
BENCHMARK_TEMPLATE(BM_IncidenceTranspose, serial::incidence_transpose)->Apply(sizes);
BENCHMARK_TEMPLATE(BM_IncidenceTranspose, parallel::incidence_transpose)->Apply(sizes);
BENCHMARK_TEMPLATE(BM_DualStep, serial::dual_step)->Apply(sizes);
BENCHMARK_TEMPLATE(BM_DualStep, parallel::dual_step)->Apply(sizes);
BENCHMARK_TEMPLATE(BM_Propagate, serial::propagate)->Apply(sizes);
BENCHMARK_TEMPLATE(BM_Propagate, parallel::propagate)->Apply(sizes);
BENCHMARK(BM_GtcfFilter)->Apply(sizes);

}  // namespace
}  // namespace gtn

BENCHMARK_MAIN();
