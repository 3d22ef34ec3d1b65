#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gtn/config.hpp"
#include "gtn/dataset.hpp"
#include "gtn/evaluation.hpp"
#include "gtn/training.hpp"

namespace gtn {

enum class SweepKind { kLambda, kLayers, kNoise, kEpochs };

std::string to_string(SweepKind kind);
SweepKind parse_sweep_kind(const std::string& name);

// Perturbation rates used for the robustness study.
inline constexpr double kNoiseGrid[] = {0.05, 0.06, 0.08, 0.10, 0.15, 0.20, 0.30, 0.50};

struct ReportRow {
  std::string kind;
  double coordinate = 0.0;
  std::string backend;
  std::uint64_t seed = 0;
  std::string metric;
  int k = 0;
  double value = 0.0;
  std::uint64_t state_hash = 0;
};

struct ExperimentReport {
  std::string kind;
  std::string started_at;  // wall clock, metadata only
  std::vector<ReportRow> rows;

  void append(ReportRow row) { rows.push_back(std::move(row)); }
  std::vector<ReportRow> select(const std::string& backend, const std::string& metric) const;

  // CSV header: kind,coordinate,backend,seed,metric,K,value,state_hash
  void write_csv(const std::string& path) const;
  void write_json(const std::string& path) const;
};

// Adds floor(rate |E|) edges drawn uniformly without replacement from user-
// item pairs absent from the graph and from `forbidden` (sorted). Original
// edges are kept. Throws GraphError when not enough absent pairs exist.
InteractionGraph inject_noise(const InteractionGraph& graph, double rate, std::mt19937_64& rng,
                              std::span<const Interaction> forbidden = {});

// Trains from scratch. `on_epoch` runs after every epoch.
ModelState train_model(const InteractionGraph& graph, const TrainConfig& cfg,
                       const std::function<void(const ModelState&, const EpochStats&)>& on_epoch =
                           {});

// Filtered embeddings of a trained state over `graph`.
Matrix final_embeddings(const ModelState& state, const InteractionGraph& graph);

// Runs one sweep. For every value and backend: train (or reuse a state when
// the knob only affects inference), evaluate, and append rows for
// Recall@K, NDCG@K and the sparsity ratio. When `flush_prefix` is nonempty the
// report is rewritten to <prefix>.csv/.json after every cell, so a failure
// leaves a partial report behind.
ExperimentReport run_sweep(SweepKind kind, std::span<const double> values, const RunConfig& base,
                           const DatasetBundle& dataset, std::span<const Backend> backends,
                           const std::string& flush_prefix = "");

// Objective after every iteration 0..k_max.
std::vector<std::pair<int, double>> convergence_log(const Matrix& e_in, const IncidenceOperator& op,
                                                    FilterConfig cfg, int k_max);
void write_convergence_csv(const std::vector<std::pair<int, double>>& series,
                           const std::string& path);

struct SparsityResult {
  Backend backend;
  double ratio = 0.0;
  std::uint64_t state_hash = 0;
};

// Sparsity ratio of Delta~ E_final for every trained state.
std::vector<SparsityResult> sparsity_analysis(std::span<const ModelState> states,
                                              const InteractionGraph& graph,
                                              const IncidenceOperator& op, double threshold = 0.2);

}  // namespace gtn
