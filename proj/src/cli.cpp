#include "gtn/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "gtn/checkpoint.hpp"
#include "gtn/config.hpp"
#include "gtn/dataset.hpp"
#include "gtn/evaluation.hpp"
#include "gtn/experiments.hpp"
#include "gtn/training.hpp"

namespace fs = std::filesystem;

namespace gtn {

Matrix read_matrix_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open matrix file " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream tokens(line);
    std::vector<double> row;
    std::string token;
    while (tokens >> token) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(token, &used));
        if (used != token.size()) throw std::invalid_argument(token);
      } catch (const std::exception&) {
        throw ParseError(path + ":" + std::to_string(line_no) + ": invalid number '" + token + "'");
      }
    }
    if (row.empty()) continue;
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": ragged row");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path + ": empty matrix");
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

void write_matrix_text(const Matrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << std::setprecision(17);
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) out << (c ? " " : "") << m(r, c);
    out << '\n';
  }
}

namespace {

// Flag values collected as strings and applied on top of file and
// environment values.
struct FlagSet {
  std::map<std::string, std::string> values;
  std::string config_path;
  std::string data_dir;

  void bind(CLI::App* app, const std::string& flag, const std::string& key,
            const std::string& help) {
    app->add_option_function<std::string>(
        flag, [this, key](const std::string& v) { values[key] = v; }, help);
  }
};

void add_common(CLI::App* app, FlagSet& flags, const std::string& seed_key = "seed") {
  app->add_option("--config", flags.config_path, "flat key = value config file");
  flags.bind(app, "--seed", seed_key, "random seed");
  flags.bind(app, "--out", "out", "output directory");
}

void add_data(CLI::App* app, FlagSet& flags) {
  app->add_option("--data", flags.data_dir, "directory holding train.txt and test.txt");
  flags.bind(app, "--train", "train_path", "training interactions file");
  flags.bind(app, "--test", "test_path", "test interactions file");
}

void add_synthetic(CLI::App* app, FlagSet& flags) {
  flags.bind(app, "--users", "users", "synthetic: number of users");
  flags.bind(app, "--items", "items", "synthetic: number of items");
  flags.bind(app, "--interactions", "interactions", "synthetic: number of interactions");
  flags.bind(app, "--blocks", "blocks", "synthetic: number of preference blocks");
  flags.bind(app, "--noise", "noise", "synthetic: fraction of out-of-block interactions");
}

void add_model(CLI::App* app, FlagSet& flags) {
  flags.bind(app, "--backend", "backend", "gtn | laplacian-baseline");
  flags.bind(app, "--lambda", "lambda", "smoothness strength");
  flags.bind(app, "--layers", "layers", "filter iterations / propagation layers");
  flags.bind(app, "--combine", "combine", "baseline layer combination: last | mean");
}

void add_training(CLI::App* app, FlagSet& flags) {
  add_model(app, flags);
  flags.bind(app, "--dim", "embed_dim", "embedding dimension");
  flags.bind(app, "--lr", "learning_rate", "Adam learning rate");
  flags.bind(app, "--batch", "batch_size", "triples per mini-batch");
  flags.bind(app, "--alpha", "l2_alpha", "L2 regularization strength");
  flags.bind(app, "--epochs", "epochs", "training epochs");
}

RunConfig resolve(const FlagSet& flags) {
  RunConfig cfg;
  apply_config_file(cfg, flags.config_path);
  apply_environment(cfg);
  if (!flags.data_dir.empty()) {
    cfg.train_path = (fs::path(flags.data_dir) / "train.txt").string();
    cfg.test_path = (fs::path(flags.data_dir) / "test.txt").string();
  }
  for (const auto& [key, value] : flags.values) cfg.set(key, value);
  return cfg;
}

void prepare_out(const RunConfig& cfg, const std::string& command) {
  fs::create_directories(cfg.out_dir);
  std::ofstream out(fs::path(cfg.out_dir) / (command + ".config.txt"));
  out << cfg.to_text();
}

DatasetBundle load_data(const RunConfig& cfg) {
  if (cfg.train_path.empty() != cfg.test_path.empty()) {
    throw ConfigError("--train and --test must be given together");
  }
  if (cfg.train_path.empty()) {
    spdlog::info("no dataset files given; generating synthetic data");
    return generate_synthetic(cfg.synthetic);
  }
  return parse_dataset(cfg.train_path, cfg.test_path);
}

std::string out_file(const RunConfig& cfg, const std::string& name) {
  return (fs::path(cfg.out_dir) / name).string();
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part.empty()) continue;
    try {
      values.push_back(std::stod(part));
    } catch (const std::exception&) {
      throw ConfigError("invalid sweep value '" + part + "'");
    }
  }
  return values;
}

int run_gen(const RunConfig& cfg) {
  prepare_out(cfg, "gen");
  const DatasetBundle bundle = generate_synthetic(cfg.synthetic);
  write_dataset(bundle, out_file(cfg, "train.txt"), out_file(cfg, "test.txt"));
  std::cout << "wrote " << bundle.train.num_edges() << " train / " << bundle.test.size()
            << " test interactions to " << cfg.out_dir << "\n";
  return 0;
}

int run_train(const RunConfig& cfg) {
  const DatasetBundle data = load_data(cfg);
  prepare_out(cfg, "train");
  std::ofstream log(out_file(cfg, "train_log.csv"));
  log << "epoch,mean_loss,seconds\n" << std::setprecision(17);
  const ModelState state = train_model(data.train, cfg.train, [&](const ModelState& s,
                                                                   const EpochStats& st) {
    log << st.epoch + 1 << ',' << st.mean_loss << ',' << st.seconds << '\n';
    if (cfg.eval_every > 0 && s.epoch % cfg.eval_every == 0) {
      const Matrix e = final_embeddings(s, data.train);
      const auto rows = evaluate_embeddings(e, data.train.num_users(), data.truth, cfg.eval_k);
      spdlog::info("epoch {} loss {:.6f} recall@{} {:.4f}", s.epoch, st.mean_loss, rows[0].k,
                   rows[0].value);
    }
  });
  const std::string path =
      cfg.checkpoint_path.empty() ? out_file(cfg, "model.ckpt") : cfg.checkpoint_path;
  save_checkpoint(state, path);
  std::cout << "saved checkpoint " << path << "\n";
  return 0;
}

ModelState load_checkpoint_for(const RunConfig& cfg, const DatasetBundle& data) {
  const std::string path =
      cfg.checkpoint_path.empty() ? out_file(cfg, "model.ckpt") : cfg.checkpoint_path;
  if (!fs::exists(path)) throw CheckpointError("checkpoint not found: " + path);
  ModelState state = load_checkpoint(path);
  check_checkpoint_shape(state, data.train.num_users(), data.train.num_items(),
                         state.embed_dim());
  return state;
}

int run_evaluate(const RunConfig& cfg) {
  const DatasetBundle data = load_data(cfg);
  const ModelState state = load_checkpoint_for(cfg, data);
  prepare_out(cfg, "evaluate");
  const Matrix e = final_embeddings(state, data.train);
  const auto rows = evaluate_embeddings(e, data.train.num_users(), data.truth, cfg.eval_k);
  write_metrics_json(rows, out_file(cfg, "metrics.json"));
  std::cout << metrics_to_json(rows) << "\n";
  return 0;
}

int run_filter(const RunConfig& cfg, const std::string& embeddings_path) {
  if (cfg.train_path.empty()) throw ConfigError("filter needs --train or --data for the graph");
  if (embeddings_path.empty()) throw ConfigError("filter needs --embeddings");
  const DatasetBundle data = parse_dataset(
      cfg.train_path, cfg.test_path.empty() ? cfg.train_path : cfg.test_path);
  const Matrix e_in = read_matrix_text(embeddings_path);
  prepare_out(cfg, "filter");
  const IncidenceOperator op = build_incidence(data.train);
  FilterConfig fc = cfg.train.filter;
  fc.record_trace = true;
  const FilterTrace trace = gtcf_filter(e_in, op, fc);
  write_matrix_text(trace.output, out_file(cfg, "filtered.txt"));
  write_trace_csv(trace, out_file(cfg, "convergence.csv"));
  std::cout << "objective " << std::setprecision(10) << trace.objective.front() << " -> "
            << trace.objective.back() << " after " << fc.num_layers << " iterations\n";
  return 0;
}

int run_sweep_cmd(const RunConfig& cfg, const std::string& kind_name, const std::string& values) {
  const SweepKind kind = parse_sweep_kind(kind_name);
  std::vector<double> grid = parse_values(values);
  if (grid.empty() && kind == SweepKind::kNoise) grid.assign(std::begin(kNoiseGrid), std::end(kNoiseGrid));
  if (grid.empty()) throw ConfigError("--values is required for this sweep kind");
  const DatasetBundle data = load_data(cfg);
  prepare_out(cfg, "sweep");
  const ExperimentReport report =
      run_sweep(kind, grid, cfg, data, cfg.backends, out_file(cfg, "sweep_" + kind_name));
  std::cout << "wrote " << report.rows.size() << " rows to "
            << out_file(cfg, "sweep_" + kind_name) << ".{csv,json}\n";
  return 0;
}

int run_analyze(const RunConfig& cfg, const std::vector<std::string>& checkpoints) {
  const DatasetBundle data = load_data(cfg);
  std::vector<ModelState> states;
  if (checkpoints.empty()) {
    states.push_back(load_checkpoint_for(cfg, data));
  } else {
    for (const auto& path : checkpoints) {
      RunConfig c = cfg;
      c.checkpoint_path = path;
      states.push_back(load_checkpoint_for(c, data));
    }
  }
  prepare_out(cfg, "analyze");
  const IncidenceOperator op = build_incidence(data.train);
  const auto results = sparsity_analysis(states, data.train, op, cfg.sparsity_threshold);
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& r : results) {
    doc.push_back({{"metric", "sparsity_ratio"},
                   {"backend", to_string(r.backend)},
                   {"threshold", cfg.sparsity_threshold},
                   {"value", r.ratio}});
  }
  std::ofstream(out_file(cfg, "sparsity.json")) << doc.dump(2) << '\n';
  std::cout << doc.dump(2) << "\n";
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Graph trend filtering recommender"};
  app.require_subcommand(1);

  FlagSet gen_flags, train_flags, eval_flags, filter_flags, sweep_flags, analyze_flags;

  auto* gen = app.add_subcommand("gen", "generate a synthetic block dataset");
  add_common(gen, gen_flags, "data_seed");
  add_synthetic(gen, gen_flags);

  auto* train = app.add_subcommand("train", "train a model and write a checkpoint");
  add_common(train, train_flags);
  add_data(train, train_flags);
  add_synthetic(train, train_flags);
  add_training(train, train_flags);
  train_flags.bind(train, "--checkpoint", "checkpoint", "checkpoint output path");
  train_flags.bind(train, "--eval-every", "eval_every", "log Recall@K every N epochs");

  auto* evaluate = app.add_subcommand("evaluate", "Recall@K / NDCG@K of a checkpoint");
  add_common(evaluate, eval_flags);
  add_data(evaluate, eval_flags);
  add_synthetic(evaluate, eval_flags);
  eval_flags.bind(evaluate, "--checkpoint", "checkpoint", "checkpoint to evaluate");
  eval_flags.bind(evaluate, "--k", "eval_k", "comma-separated cutoffs");

  std::string embeddings_path;
  auto* filter = app.add_subcommand("filter", "run graph trend filtering on an embedding file");
  add_common(filter, filter_flags);
  add_data(filter, filter_flags);
  filter->add_option("--embeddings", embeddings_path, "(n+m) x d text matrix")->required();
  filter_flags.bind(filter, "--lambda", "lambda", "smoothness strength");
  filter_flags.bind(filter, "--layers", "layers", "iterations");
  filter_flags.bind(filter, "--gamma", "gamma", "primal stepsize");
  filter_flags.bind(filter, "--beta", "beta", "dual stepsize");

  std::string sweep_kind;
  std::string sweep_values;
  auto* sweep = app.add_subcommand("sweep", "lambda | layers | noise | epochs study");
  add_common(sweep, sweep_flags);
  add_data(sweep, sweep_flags);
  add_synthetic(sweep, sweep_flags);
  add_training(sweep, sweep_flags);
  sweep->add_option("--kind", sweep_kind, "lambda|layers|noise|epochs")->required();
  sweep->add_option("--values", sweep_values, "comma-separated sweep coordinates");
  sweep_flags.bind(sweep, "--backends", "backends", "comma-separated backends");
  sweep_flags.bind(sweep, "--k", "eval_k", "comma-separated cutoffs");

  std::vector<std::string> analyze_checkpoints;
  auto* analyze = app.add_subcommand("analyze", "sparsity ratio of embedding differences");
  add_common(analyze, analyze_flags);
  add_data(analyze, analyze_flags);
  add_synthetic(analyze, analyze_flags);
  analyze->add_option("--checkpoint", analyze_checkpoints, "checkpoint(s) to analyze");
  analyze_flags.bind(analyze, "--threshold", "sparsity_threshold", "magnitude threshold");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }

  try {
    if (*gen) return run_gen(resolve(gen_flags));
    if (*train) return run_train(resolve(train_flags));
    if (*evaluate) return run_evaluate(resolve(eval_flags));
    if (*filter) return run_filter(resolve(filter_flags), embeddings_path);
    if (*sweep) return run_sweep_cmd(resolve(sweep_flags), sweep_kind, sweep_values);
    if (*analyze) return run_analyze(resolve(analyze_flags), analyze_checkpoints);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace gtn
