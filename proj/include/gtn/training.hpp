#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gtn/graph.hpp"
#include "gtn/incidence.hpp"
#include "gtn/propagation.hpp"
#include "gtn/trend_filter.hpp"
#include "gtn/types.hpp"

namespace gtn {

// Which embedding filter sits between E_in and the scores.
enum class Backend : std::uint32_t {
  kGtn = 0,               // graph trend filtering (gtcf_filter), output E^K
  kLaplacianBaseline = 1  // linear propagation with A~ (LightGCN-style)
};

std::string to_string(Backend backend);
Backend parse_backend(const std::string& name);

struct TrainConfig {
  int embed_dim = 64;
  double learning_rate = 0.001;
  int batch_size = 2048;
  double l2_alpha = 1e-4;
  int epochs = 100;
  std::uint64_t seed = 2022;
  Backend backend = Backend::kGtn;
  LayerCombine combine = LayerCombine::kMean;  // baseline only
  FilterConfig filter;

  void validate() const;
};

// The filter applied to E_in by a trained model. Stored in checkpoints so a
// model can be evaluated without repeating its training flags.
struct ModelSpec {
  Backend backend = Backend::kGtn;
  int num_layers = 3;
  double lambda = 2.0;
  LayerCombine combine = LayerCombine::kMean;

  static ModelSpec from(const TrainConfig& cfg);
  FilterConfig filter_config() const;
};

struct ModelState {
  Index num_users = 0;
  Index num_items = 0;
  Matrix e_in;      // (n + m) x d, the only trainable parameters
  Matrix adam_m;    // first moments
  Matrix adam_v;    // second moments
  std::int64_t adam_step = 0;
  std::uint64_t seed = 0;
  std::int64_t epoch = 0;  // completed epochs; epoch e samples from rng(seed, e)
  ModelSpec spec;

  Index embed_dim() const { return e_in.cols(); }
};

struct Triple {
  Index user;
  Index pos_item;
  Index neg_item;
};

struct TripleBatch {
  std::vector<Triple> triples;
};

// Operators derived from one graph, built once and shared read-only.
struct GraphOperators {
  IncidenceOperator incidence;
  PropagationOperator propagation;

  static GraphOperators build(const InteractionGraph& graph);
};

// i.i.d. N(0, 0.1^2) entries, deterministic given the seed.
Matrix init_embeddings(Index num_users, Index num_items, int embed_dim, std::uint64_t seed);

ModelState init_model(Index num_users, Index num_items, const TrainConfig& cfg);

// Positives uniform over edges; each negative uniform over the items the
// user has not interacted with. Users with no unobserved item are skipped
// (their draw is repeated). Throws GraphError when every user is saturated.
TripleBatch sample_triples(const InteractionGraph& graph, int batch_size, std::mt19937_64& rng);

// mean over the batch of -ln sigmoid(pos - neg), plus alpha ||E_in||_F^2.
double bpr_loss(std::span<const double> pos_scores, std::span<const double> neg_scores,
                const Matrix& e_in, double alpha);

// Vector-Jacobian product of gtcf_filter: gradient w.r.t. E_in given the
// gradient w.r.t. E^K. Needs a trace recorded with record_masks.
Matrix backward_gtcf(const FilterTrace& trace, const IncidenceOperator& op,
                     const Matrix& grad_output);

// E^K for the configured backend. Fills `trace` (with masks) for kGtn when
// non-null.
Matrix forward_embeddings(const ModelSpec& spec, const Matrix& e_in, const GraphOperators& ops,
                          FilterTrace* trace = nullptr);

struct LossAndGradient {
  double loss = 0.0;
  Matrix grad;  // d loss / d E_in
};

// Full mini-batch objective: BPR over the batch on filtered embeddings plus
// the regularizer, and its exact gradient with respect to E_in.
LossAndGradient loss_and_gradient(const Matrix& e_in, const TripleBatch& batch,
                                  const GraphOperators& ops, const ModelSpec& spec,
                                  double alpha);

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One bias-corrected Adam update of state.e_in. Throws NumericError on
// non-finite gradients and ShapeError on a shape mismatch.
void adam_step(ModelState& state, const Matrix& grads, double learning_rate,
               const AdamParams& params = {});

struct EpochStats {
  std::int64_t epoch = 0;
  int batches = 0;
  double mean_loss = 0.0;
  double seconds = 0.0;
};

// ceil(|E| / batch_size) steps of sample -> filter -> score -> BPR -> backward
// -> Adam. Randomness comes from rng(state.seed, state.epoch) only.
EpochStats train_epoch(ModelState& state, const InteractionGraph& graph,
                       const GraphOperators& ops, const TrainConfig& cfg);

// Per-epoch generator: seeded from (seed, epoch) so resumed runs match.
std::mt19937_64 epoch_rng(std::uint64_t seed, std::int64_t epoch);

// 64-bit FNV-1a of the E_in bytes; identifies a trained state in reports.
std::uint64_t state_hash(const ModelState& state);

}  // namespace gtn
