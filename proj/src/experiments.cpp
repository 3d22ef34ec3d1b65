#include "gtn/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <unordered_set>

#include <json.hpp>
#include <spdlog/spdlog.h>

namespace gtn {

std::string to_string(SweepKind kind) {
  switch (kind) {
    case SweepKind::kLambda: return "lambda";
    case SweepKind::kLayers: return "layers";
    case SweepKind::kNoise: return "noise";
    case SweepKind::kEpochs: return "epochs";
  }
  return "unknown";
}

SweepKind parse_sweep_kind(const std::string& name) {
  if (name == "lambda") return SweepKind::kLambda;
  if (name == "layers") return SweepKind::kLayers;
  if (name == "noise") return SweepKind::kNoise;
  if (name == "epochs") return SweepKind::kEpochs;
  throw ConfigError("unknown sweep kind '" + name + "' (expected lambda|layers|noise|epochs)");
}

std::vector<ReportRow> ExperimentReport::select(const std::string& backend,
                                                const std::string& metric) const {
  std::vector<ReportRow> out;
  std::copy_if(rows.begin(), rows.end(), std::back_inserter(out), [&](const ReportRow& r) {
    return r.backend == backend && r.metric == metric;
  });
  return out;
}

void ExperimentReport::write_csv(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "kind,coordinate,backend,seed,metric,K,value,state_hash\n" << std::setprecision(17);
  for (const auto& r : rows) {
    out << r.kind << ',' << r.coordinate << ',' << r.backend << ',' << r.seed << ',' << r.metric
        << ',' << r.k << ',' << r.value << ',' << std::hex << std::setw(16) << std::setfill('0')
        << r.state_hash << std::dec << std::setfill(' ') << '\n';
  }
}

void ExperimentReport::write_json(const std::string& path) const {
  nlohmann::ordered_json doc;
  doc["kind"] = kind;
  doc["started_at"] = started_at;
  doc["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    std::ostringstream hash;
    hash << std::hex << std::setw(16) << std::setfill('0') << r.state_hash;
    doc["rows"].push_back({{"kind", r.kind},
                           {"coordinate", r.coordinate},
                           {"backend", r.backend},
                           {"seed", r.seed},
                           {"metric", r.metric},
                           {"K", r.k},
                           {"value", r.value},
                           {"state_hash", hash.str()}});
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << doc.dump(2) << '\n';
}

InteractionGraph inject_noise(const InteractionGraph& graph, double rate, std::mt19937_64& rng,
                              std::span<const Interaction> forbidden) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ConfigError("noise rate must lie in [0, 1]");
  const Index n = graph.num_users();
  const Index m = graph.num_items();
  const auto count = static_cast<Index>(std::floor(rate * static_cast<double>(graph.num_edges())));

  const auto blocked = [&](Index u, Index i) {
    return graph.has_edge(u, i) ||
           std::binary_search(forbidden.begin(), forbidden.end(), Interaction{u, i});
  };
  Index forbidden_absent = 0;
  for (const auto& p : forbidden) {
    if (p.user >= 0 && p.user < n && !graph.has_edge(p.user, p.item)) ++forbidden_absent;
  }
  const Index absent = n * m - graph.num_edges() - forbidden_absent;
  if (count > absent) {
    throw GraphError("cannot inject " + std::to_string(count) + " edges: only " +
                     std::to_string(absent) + " absent pairs");
  }

  std::vector<Interaction> edges = graph.edges();
  edges.reserve(edges.size() + count);
  if (count > 0 && count * 2 <= absent) {
    std::uniform_int_distribution<Index> any_user(0, n - 1);
    std::uniform_int_distribution<Index> any_item(0, m - 1);
    std::unordered_set<Index> chosen;
    while (static_cast<Index>(chosen.size()) < count) {
      const Index u = any_user(rng);
      const Index i = any_item(rng);
      if (blocked(u, i) || !chosen.insert(u * m + i).second) continue;
      edges.push_back({u, i});
    }
  } else if (count > 0) {
    std::vector<Interaction> pool;
    pool.reserve(absent);
    for (Index u = 0; u < n; ++u) {
      for (Index i = 0; i < m; ++i) {
        if (!blocked(u, i)) pool.push_back({u, i});
      }
    }
    for (Index t = 0; t < count; ++t) {
      std::uniform_int_distribution<Index> pick(t, static_cast<Index>(pool.size()) - 1);
      std::swap(pool[t], pool[pick(rng)]);
      edges.push_back(pool[t]);
    }
  }
  return build_graph(std::move(edges), n, m);
}

ModelState train_model(const InteractionGraph& graph, const TrainConfig& cfg,
                       const std::function<void(const ModelState&, const EpochStats&)>& on_epoch) {
  const GraphOperators ops = GraphOperators::build(graph);
  ModelState state = init_model(graph.num_users(), graph.num_items(), cfg);
  for (int e = 0; e < cfg.epochs; ++e) {
    const EpochStats stats = train_epoch(state, graph, ops, cfg);
    if (on_epoch) on_epoch(state, stats);
  }
  return state;
}

Matrix final_embeddings(const ModelState& state, const InteractionGraph& graph) {
  const GraphOperators ops = GraphOperators::build(graph);
  return forward_embeddings(state.spec, state.e_in, ops);
}

namespace {

std::string now_iso8601() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Evaluates one trained state on `graph` and appends metric rows.
void append_cell(ExperimentReport& report, const std::string& kind, double coordinate,
                 const ModelState& state, const InteractionGraph& graph, const DatasetBundle& data,
                 const RunConfig& base) {
  const GraphOperators ops = GraphOperators::build(graph);
  const Matrix e_final = forward_embeddings(state.spec, state.e_in, ops);
  const auto metrics = evaluate_embeddings(e_final, graph.num_users(), data.truth, base.eval_k);
  const std::string backend = to_string(state.spec.backend);
  const std::uint64_t hash = state_hash(state);
  for (const auto& m : metrics) {
    report.append({kind, coordinate, backend, state.seed, m.metric, m.k, m.value, hash});
  }
  const Matrix diffs = apply_incidence(ops.incidence, e_final, Direction::kForward);
  report.append({kind, coordinate, backend, state.seed, "sparsity", 0,
                 sparsity_ratio(diffs, base.sparsity_threshold), hash});
}

void flush(const ExperimentReport& report, const std::string& prefix) {
  if (prefix.empty()) return;
  report.write_csv(prefix + ".csv");
  report.write_json(prefix + ".json");
}

}  // namespace

ExperimentReport run_sweep(SweepKind kind, std::span<const double> values, const RunConfig& base,
                           const DatasetBundle& dataset, std::span<const Backend> backends,
                           const std::string& flush_prefix) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  if (backends.empty()) throw ConfigError("sweep needs at least one backend");
  ExperimentReport report;
  report.kind = to_string(kind);
  report.started_at = now_iso8601();

  try {
    if (kind == SweepKind::kLambda || kind == SweepKind::kLayers) {
      // Knobs that change training: one state per distinct effective spec.
      std::map<std::string, ModelState> cache;
      for (double v : values) {
        for (Backend b : backends) {
          TrainConfig cfg = base.train;
          cfg.backend = b;
          if (kind == SweepKind::kLambda) {
            cfg.filter.lambda = v;
          } else {
            cfg.filter.num_layers = static_cast<int>(v);
          }
          std::string key = to_string(b) + "/" + std::to_string(cfg.filter.num_layers);
          if (b == Backend::kGtn) key += "/" + std::to_string(cfg.filter.lambda);
          auto it = cache.find(key);
          if (it == cache.end()) {
            spdlog::info("sweep {}={} backend={}: training", report.kind, v, to_string(b));
            it = cache.emplace(key, train_model(dataset.train, cfg)).first;
          }
          append_cell(report, report.kind, v, it->second, dataset.train, dataset, base);
          flush(report, flush_prefix);
        }
      }
    } else if (kind == SweepKind::kNoise) {
      // Inference-only knob: train once per backend on clean data.
      std::vector<ModelState> states;
      for (Backend b : backends) {
        TrainConfig cfg = base.train;
        cfg.backend = b;
        spdlog::info("sweep noise backend={}: training on clean data", to_string(b));
        states.push_back(train_model(dataset.train, cfg));
      }
      for (std::size_t idx = 0; idx < values.size(); ++idx) {
        std::mt19937_64 rng(base.train.seed * 1000003ULL + idx);
        const InteractionGraph noisy = inject_noise(dataset.train, values[idx], rng, dataset.test);
        for (const auto& state : states) {
          append_cell(report, report.kind, values[idx], state, noisy, dataset, base);
        }
        flush(report, flush_prefix);
      }
    } else {
      std::vector<int> checkpoints;
      for (double v : values) checkpoints.push_back(static_cast<int>(v));
      std::sort(checkpoints.begin(), checkpoints.end());
      for (Backend b : backends) {
        TrainConfig cfg = base.train;
        cfg.backend = b;
        cfg.epochs = checkpoints.back();
        const GraphOperators ops = GraphOperators::build(dataset.train);
        ModelState state = init_model(dataset.train.num_users(), dataset.train.num_items(), cfg);
        std::size_t next = 0;
        while (next < checkpoints.size() && checkpoints[next] <= 0) {
          append_cell(report, report.kind, checkpoints[next++], state, dataset.train, dataset, base);
        }
        for (int e = 1; e <= cfg.epochs; ++e) {
          train_epoch(state, dataset.train, ops, cfg);
          while (next < checkpoints.size() && checkpoints[next] == e) {
            append_cell(report, report.kind, e, state, dataset.train, dataset, base);
            ++next;
          }
        }
        flush(report, flush_prefix);
      }
    }
  } catch (...) {
    flush(report, flush_prefix);
    throw;
  }
  flush(report, flush_prefix);
  return report;
}

std::vector<std::pair<int, double>> convergence_log(const Matrix& e_in, const IncidenceOperator& op,
                                                    FilterConfig cfg, int k_max) {
  if (k_max < 1) throw ConfigError("k_max must be >= 1");
  cfg.num_layers = k_max;
  cfg.record_trace = true;
  cfg.record_masks = false;
  cfg.record_iterates = false;
  const FilterTrace trace = gtcf_filter(e_in, op, cfg);
  std::vector<std::pair<int, double>> series;
  series.reserve(trace.objective.size());
  for (std::size_t k = 0; k < trace.objective.size(); ++k) {
    series.emplace_back(static_cast<int>(k), trace.objective[k]);
  }
  return series;
}

void write_convergence_csv(const std::vector<std::pair<int, double>>& series,
                           const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "iteration,objective\n" << std::setprecision(17);
  for (const auto& [k, v] : series) out << k << ',' << v << '\n';
}

std::vector<SparsityResult> sparsity_analysis(std::span<const ModelState> states,
                                              const InteractionGraph& graph,
                                              const IncidenceOperator& op, double threshold) {
  std::vector<SparsityResult> results;
  for (const auto& state : states) {
    const Matrix e_final = final_embeddings(state, graph);
    const Matrix diffs = apply_incidence(op, e_final, Direction::kForward);
    results.push_back({state.spec.backend, sparsity_ratio(diffs, threshold), state_hash(state)});
  }
  return results;
}

}  // namespace gtn
