#include "gtn/training.hpp"

#include <chrono>
#include <cmath>
#include <string>

namespace gtn {

std::string to_string(Backend backend) {
  return backend == Backend::kGtn ? "gtn" : "laplacian-baseline";
}

Backend parse_backend(const std::string& name) {
  if (name == "gtn") return Backend::kGtn;
  if (name == "laplacian-baseline" || name == "laplacian" || name == "lightgcn") {
    return Backend::kLaplacianBaseline;
  }
  throw ConfigError("unknown backend '" + name + "' (expected gtn|laplacian-baseline)");
}

void TrainConfig::validate() const {
  if (embed_dim < 1) throw ConfigError("embed_dim must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be nonnegative");
  if (!(l2_alpha >= 0.0)) throw ConfigError("l2_alpha must be nonnegative");
  filter.validate();
}

ModelSpec ModelSpec::from(const TrainConfig& cfg) {
  ModelSpec spec;
  spec.backend = cfg.backend;
  spec.num_layers = cfg.filter.num_layers;
  spec.lambda = cfg.filter.lambda;
  spec.combine = cfg.combine;
  return spec;
}

FilterConfig ModelSpec::filter_config() const {
  FilterConfig cfg;
  cfg.lambda = lambda;
  cfg.num_layers = num_layers;
  return cfg;
}

GraphOperators GraphOperators::build(const InteractionGraph& graph) {
  return GraphOperators{build_incidence(graph), build_propagation(graph)};
}

Matrix init_embeddings(Index num_users, Index num_items, int embed_dim, std::uint64_t seed) {
  if (embed_dim < 1) throw ConfigError("embed_dim must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.1);
  Matrix e(num_users + num_items, embed_dim);
  double* p = e.data();
  for (Index i = 0; i < e.size(); ++i) p[i] = normal(rng);
  return e;
}

ModelState init_model(Index num_users, Index num_items, const TrainConfig& cfg) {
  cfg.validate();
  ModelState state;
  state.num_users = num_users;
  state.num_items = num_items;
  state.e_in = init_embeddings(num_users, num_items, cfg.embed_dim, cfg.seed);
  state.adam_m = Matrix::Zero(state.e_in.rows(), state.e_in.cols());
  state.adam_v = Matrix::Zero(state.e_in.rows(), state.e_in.cols());
  state.seed = cfg.seed;
  state.spec = ModelSpec::from(cfg);
  return state;
}

namespace {

Index sample_negative(const InteractionGraph& graph, Index user, std::mt19937_64& rng) {
  const Index m = graph.num_items();
  std::uniform_int_distribution<Index> any_item(0, m - 1);
  for (int attempt = 0; attempt < 64; ++attempt) {
    const Index j = any_item(rng);
    if (!graph.has_edge(user, j)) return j;
  }
  // Dense user: pick the r-th unobserved item directly.
  const auto row = graph.user_edges(user);
  std::uniform_int_distribution<Index> pick(0, m - static_cast<Index>(row.size()) - 1);
  Index r = pick(rng);
  Index item = 0;
  for (const auto& e : row) {
    if (item + r < e.item) break;
    r -= e.item - item;
    item = e.item + 1;
  }
  return item + r;
}

}  // namespace

TripleBatch sample_triples(const InteractionGraph& graph, int batch_size, std::mt19937_64& rng) {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  bool any_unsaturated = false;
  for (Index u = 0; u < graph.num_users() && !any_unsaturated; ++u) {
    const Index deg = graph.user_degree()[u];
    any_unsaturated = deg > 0 && deg < graph.num_items();
  }
  if (!any_unsaturated) {
    throw GraphError("every user has interacted with every item; no negatives to sample");
  }

  const auto& edges = graph.edges();
  std::uniform_int_distribution<std::size_t> any_edge(0, edges.size() - 1);
  TripleBatch batch;
  batch.triples.reserve(batch_size);
  while (static_cast<int>(batch.triples.size()) < batch_size) {
    const Interaction pos = edges[any_edge(rng)];
    if (graph.user_degree()[pos.user] >= graph.num_items()) continue;
    batch.triples.push_back({pos.user, pos.item, sample_negative(graph, pos.user, rng)});
  }
  return batch;
}

namespace {

// -ln sigmoid(x), stable for large |x|.
double neg_log_sigmoid(double x) {
  return x >= 0.0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double z = std::exp(x);
  return z / (1.0 + z);
}

}  // namespace

double bpr_loss(std::span<const double> pos_scores, std::span<const double> neg_scores,
                const Matrix& e_in, double alpha) {
  if (pos_scores.size() != neg_scores.size()) {
    throw ShapeError("positive and negative score vectors differ in length");
  }
  double sum = 0.0;
  for (std::size_t t = 0; t < pos_scores.size(); ++t) {
    sum += neg_log_sigmoid(pos_scores[t] - neg_scores[t]);
  }
  const double mean = pos_scores.empty() ? 0.0 : sum / static_cast<double>(pos_scores.size());
  return mean + alpha * e_in.squaredNorm();
}

Matrix backward_gtcf(const FilterTrace& trace, const IncidenceOperator& op,
                     const Matrix& grad_output) {
  if (grad_output.rows() != op.cols() || grad_output.rows() != trace.output.rows() ||
      grad_output.cols() != trace.output.cols()) {
    throw ShapeError("gradient shape does not match the filter output");
  }
  if (trace.num_layers == 0 || trace.lambda == 0.0) {
    // Y stays at zero, the filter is the identity.
    return grad_output;
  }
  if (!trace.has_masks) throw Error("backward_gtcf needs a trace recorded with clip masks");
  if (static_cast<int>(trace.masks.size()) != trace.num_layers) {
    throw Error("trace holds " + std::to_string(trace.masks.size()) + " masks for " +
                std::to_string(trace.num_layers) + " iterations");
  }

  const double gamma = trace.gamma;
  const double beta = trace.beta;
  const bool unit_gamma = gamma == 1.0;

  Matrix grad_in = Matrix::Zero(grad_output.rows(), grad_output.cols());
  Matrix grad_e = grad_output;                                   // adjoint of E^{k+1}
  Matrix grad_y = Matrix::Zero(op.rows(), grad_output.cols());  // adjoint of Y^{k+1}
  Matrix tmp_edges;
  Matrix grad_e_bar;

  for (int k = trace.num_layers - 1; k >= 0; --k) {
    // E^{k+1} = (1 - gamma) E^k + gamma E_in - gamma Delta~^T Y^{k+1}
    grad_in += gamma * grad_e;
    apply_incidence(op, grad_e, Direction::kForward, tmp_edges);
    grad_y -= gamma * tmp_edges;
    Matrix grad_e_prev;
    if (!unit_gamma) grad_e_prev = (1.0 - gamma) * grad_e;

    // Y^{k+1} = clip(Ybar^{k+1})
    const ClipMask& mask = trace.masks[k];
    double* gy = grad_y.data();
    for (std::size_t i = 0; i < mask.size(); ++i) {
      if (!mask[i]) gy[i] = 0.0;
    }

    // Ybar^{k+1} = Y^k + beta Delta~ Ebar^{k+1}
    apply_incidence(op, grad_y, Direction::kTranspose, grad_e_bar);
    grad_e_bar *= beta;

    // Ebar^{k+1} = (1 - gamma) E^k + gamma E_in - gamma Delta~^T Y^k
    grad_in += gamma * grad_e_bar;
    apply_incidence(op, grad_e_bar, Direction::kForward, tmp_edges);
    grad_y -= gamma * tmp_edges;
    if (unit_gamma) {
      grad_e.setZero();
    } else {
      grad_e = grad_e_prev + (1.0 - gamma) * grad_e_bar;
    }
  }
  // E^0 = E_in.
  grad_in += grad_e;
  return grad_in;
}

Matrix forward_embeddings(const ModelSpec& spec, const Matrix& e_in, const GraphOperators& ops,
                          FilterTrace* trace) {
  if (spec.backend == Backend::kLaplacianBaseline) {
    return laplacian_propagate(e_in, ops.propagation, spec.num_layers, spec.combine);
  }
  FilterConfig cfg = spec.filter_config();
  cfg.record_masks = trace != nullptr;
  FilterTrace result = gtcf_filter(e_in, ops.incidence, cfg);
  if (trace == nullptr) return std::move(result.output);
  *trace = std::move(result);
  return trace->output;
}

LossAndGradient loss_and_gradient(const Matrix& e_in, const TripleBatch& batch,
                                  const GraphOperators& ops, const ModelSpec& spec,
                                  double alpha) {
  FilterTrace trace;
  const Matrix e_out = forward_embeddings(spec, e_in, ops, &trace);
  const Index n = ops.incidence.num_users();
  const double inv_batch = batch.triples.empty() ? 0.0 : 1.0 / batch.triples.size();

  Matrix grad_out = Matrix::Zero(e_out.rows(), e_out.cols());
  double sum = 0.0;
  for (const auto& t : batch.triples) {
    const auto eu = e_out.row(t.user);
    const auto ei = e_out.row(n + t.pos_item);
    const auto ej = e_out.row(n + t.neg_item);
    const double margin = eu.dot(ei) - eu.dot(ej);
    sum += neg_log_sigmoid(margin);
    // d/dmargin of -ln sigmoid(margin) = -sigmoid(-margin)
    const double g = -sigmoid(-margin) * inv_batch;
    grad_out.row(t.user) += g * (ei - ej);
    grad_out.row(n + t.pos_item) += g * eu;
    grad_out.row(n + t.neg_item) -= g * eu;
  }

  LossAndGradient result;
  result.loss = sum * inv_batch + alpha * e_in.squaredNorm();
  if (spec.backend == Backend::kLaplacianBaseline) {
    result.grad = backward_laplacian(ops.propagation, grad_out, spec.num_layers, spec.combine);
  } else {
    result.grad = backward_gtcf(trace, ops.incidence, grad_out);
  }
  result.grad += 2.0 * alpha * e_in;
  return result;
}

void adam_step(ModelState& state, const Matrix& grads, double learning_rate,
               const AdamParams& params) {
  if (grads.rows() != state.e_in.rows() || grads.cols() != state.e_in.cols()) {
    throw ShapeError("gradient shape does not match the embeddings");
  }
  if (!grads.allFinite()) throw NumericError("non-finite gradient passed to Adam");
  if (state.adam_m.size() == 0) state.adam_m = Matrix::Zero(grads.rows(), grads.cols());
  if (state.adam_v.size() == 0) state.adam_v = Matrix::Zero(grads.rows(), grads.cols());

  ++state.adam_step;
  const double t = static_cast<double>(state.adam_step);
  state.adam_m = params.beta1 * state.adam_m + (1.0 - params.beta1) * grads;
  state.adam_v = params.beta2 * state.adam_v + (1.0 - params.beta2) * grads.cwiseAbs2();
  const double c1 = 1.0 - std::pow(params.beta1, t);
  const double c2 = 1.0 - std::pow(params.beta2, t);
  state.e_in.array() -= learning_rate * (state.adam_m.array() / c1) /
                        ((state.adam_v.array() / c2).sqrt() + params.epsilon);
}

std::mt19937_64 epoch_rng(std::uint64_t seed, std::int64_t epoch) {
  const auto e = static_cast<std::uint64_t>(epoch);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(e), static_cast<std::uint32_t>(e >> 32)};
  return std::mt19937_64(seq);
}

EpochStats train_epoch(ModelState& state, const InteractionGraph& graph,
                       const GraphOperators& ops, const TrainConfig& cfg) {
  cfg.validate();
  if (state.e_in.rows() != graph.num_nodes()) {
    throw ShapeError("model has " + std::to_string(state.e_in.rows()) + " rows, graph has " +
                     std::to_string(graph.num_nodes()) + " nodes");
  }
  const auto start = std::chrono::steady_clock::now();
  auto rng = epoch_rng(state.seed, state.epoch);
  const Index num_batches = (graph.num_edges() + cfg.batch_size - 1) / cfg.batch_size;

  EpochStats stats;
  stats.epoch = state.epoch;
  double loss_sum = 0.0;
  for (Index b = 0; b < num_batches; ++b) {
    const TripleBatch batch = sample_triples(graph, cfg.batch_size, rng);
    const LossAndGradient lg = loss_and_gradient(state.e_in, batch, ops, state.spec, cfg.l2_alpha);
    loss_sum += lg.loss;
    adam_step(state, lg.grad, cfg.learning_rate);
  }
  ++state.epoch;
  stats.batches = static_cast<int>(num_batches);
  stats.mean_loss = num_batches > 0 ? loss_sum / num_batches : 0.0;
  stats.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return stats;
}

std::uint64_t state_hash(const ModelState& state) {
  std::uint64_t h = 1469598103934665603ULL;
  const auto* bytes = reinterpret_cast<const unsigned char*>(state.e_in.data());
  const std::size_t len = static_cast<std::size_t>(state.e_in.size()) * sizeof(double);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace gtn
