#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>
#include <spdlog/sinks/ringbuffer_sink.h>
#include <spdlog/spdlog.h>

#include "gtn/checkpoint.hpp"
#include "gtn/cli.hpp"
#include "gtn/config.hpp"
#include "gtn/dataset.hpp"

namespace gtn {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("gtn_dataio_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "gtn");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

class CapturedLog {
 public:
  CapturedLog() : sink_(std::make_shared<spdlog::sinks::ringbuffer_sink_mt>(64)) {
    spdlog::default_logger()->sinks().push_back(sink_);
  }
  ~CapturedLog() { spdlog::default_logger()->sinks().pop_back(); }
  std::string text() const {
    std::string all;
    for (const auto& line : sink_->last_formatted()) all += line;
    return all;
  }

 private:
  std::shared_ptr<spdlog::sinks::ringbuffer_sink_mt> sink_;
};

TEST(ParseDataset, LineFormat) {
  const auto dir = scratch_dir("format");
  write_file(dir / "train.txt", "0 12 7\n1 3\n");
  write_file(dir / "test.txt", "1 4\n");
  const auto bundle = parse_dataset((dir / "train.txt").string(), (dir / "test.txt").string());
  EXPECT_TRUE(bundle.train.has_edge(0, 12));
  EXPECT_TRUE(bundle.train.has_edge(0, 7));
  EXPECT_EQ(bundle.train.num_edges(), 3);
  EXPECT_EQ(bundle.train.num_users(), 2);
  EXPECT_EQ(bundle.train.num_items(), 13);
  EXPECT_EQ(bundle.test, (std::vector<Interaction>{{1, 4}}));
}

TEST(ParseDataset, ItemlessLineWarns) {
  const auto dir = scratch_dir("itemless");
  write_file(dir / "train.txt", "0 1\n3\n");
  write_file(dir / "test.txt", "0 2\n");
  CapturedLog log;
  const auto bundle = parse_dataset((dir / "train.txt").string(), (dir / "test.txt").string());
  EXPECT_EQ(bundle.train.num_edges(), 1);
  EXPECT_EQ(bundle.train.num_users(), 4);
  EXPECT_EQ(bundle.train.user_degree()[3], 0);
  EXPECT_NE(log.text().find("without items"), std::string::npos) << log.text();
}

TEST(ParseDataset, InvalidTokenNamesLine) {
  const auto dir = scratch_dir("invalid");
  write_file(dir / "train.txt", "0 1\n1 x2\n");
  write_file(dir / "test.txt", "0 2\n");
  try {
    parse_dataset((dir / "train.txt").string(), (dir / "test.txt").string());
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("train.txt:2"), std::string::npos) << e.what();
  }
}

TEST(ParseDataset, EmptyAndMissingFiles) {
  const auto dir = scratch_dir("empty");
  write_file(dir / "train.txt", "");
  write_file(dir / "test.txt", "0 1\n");
  EXPECT_THROW(parse_dataset((dir / "train.txt").string(), (dir / "test.txt").string()),
               ParseError);
  EXPECT_THROW(parse_dataset((dir / "nope.txt").string(), (dir / "test.txt").string()),
               ParseError);
}

TEST(ParseDataset, DropsTestPairsSeenInTraining) {
  const auto dir = scratch_dir("overlap");
  write_file(dir / "train.txt", "0 1 2\n1 0\n");
  write_file(dir / "test.txt", "0 2 3\n1 0 1\n");
  CapturedLog log;
  const auto bundle = parse_dataset((dir / "train.txt").string(), (dir / "test.txt").string());
  EXPECT_EQ(bundle.dropped_test_pairs, 2);
  EXPECT_EQ(bundle.test, (std::vector<Interaction>{{0, 3}, {1, 1}}));
  EXPECT_EQ(bundle.train.num_items(), 4);
  EXPECT_NE(log.text().find("dropped"), std::string::npos) << log.text();
}

TEST(ParseDataset, SizeOverrides) {
  const auto dir = scratch_dir("override");
  write_file(dir / "train.txt", "0 1\n");
  write_file(dir / "test.txt", "0 0\n");
  ParseOptions options;
  options.num_users = 3;
  options.num_items = 9;
  const auto bundle =
      parse_dataset((dir / "train.txt").string(), (dir / "test.txt").string(), options);
  EXPECT_EQ(bundle.train.num_users(), 3);
  EXPECT_EQ(bundle.train.num_items(), 9);
  options.num_items = 1;
  EXPECT_THROW(parse_dataset((dir / "train.txt").string(), (dir / "test.txt").string(), options),
               ParseError);
}

// Needs the public Gowalla split (train.txt / test.txt) in $GTN_GOWALLA_DIR.
TEST(ParseDataset, GowallaShape) {
  const char* dir = std::getenv("GTN_GOWALLA_DIR");
  if (dir == nullptr) GTEST_SKIP() << "GTN_GOWALLA_DIR not set";
  const auto bundle = parse_dataset((fs::path(dir) / "train.txt").string(),
                                    (fs::path(dir) / "test.txt").string());
  EXPECT_EQ(bundle.train.num_users(), 29858);
  EXPECT_EQ(bundle.train.num_items(), 40981);
  EXPECT_EQ(bundle.train.num_edges(), 1027370);
}

TEST(WriteDataset, RoundTrip) {
  const auto original = generate_synthetic(tiny_synthetic_spec());
  const auto dir = scratch_dir("roundtrip");
  write_dataset(original, (dir / "train.txt").string(), (dir / "test.txt").string());
  const auto again = parse_dataset((dir / "train.txt").string(), (dir / "test.txt").string());
  EXPECT_TRUE(std::ranges::equal(again.train.edges(), original.train.edges()));
  EXPECT_EQ(again.test, original.test);
}

TEST(Synthetic, NoNoiseStaysInBlock) {
  SyntheticSpec spec = tiny_synthetic_spec();
  spec.noise_frac = 0.0;
  const auto bundle = generate_synthetic(spec);
  for (const auto& e : bundle.train.edges()) {
    EXPECT_EQ(user_block(spec, e.user), item_block(spec, e.item));
  }
  for (const auto& e : bundle.test) EXPECT_EQ(user_block(spec, e.user), item_block(spec, e.item));
}

TEST(Synthetic, Deterministic) {
  const auto a = generate_synthetic(tiny_synthetic_spec());
  const auto b = generate_synthetic(tiny_synthetic_spec());
  EXPECT_TRUE(std::ranges::equal(a.train.edges(), b.train.edges()));
  EXPECT_EQ(a.test, b.test);
  SyntheticSpec other = tiny_synthetic_spec();
  other.seed += 1;
  EXPECT_FALSE(std::ranges::equal(generate_synthetic(other).train.edges(), a.train.edges()));
}

TEST(Synthetic, DefaultShapeAndBlockFraction) {
  const SyntheticSpec spec;
  const auto bundle = generate_synthetic(spec);
  const Index total = bundle.train.num_edges() + static_cast<Index>(bundle.test.size());
  EXPECT_EQ(total, 20000);
  EXPECT_EQ(bundle.train.num_users(), 500);
  EXPECT_EQ(bundle.train.num_items(), 800);
  Index within = 0;
  for (const auto& e : bundle.train.edges()) within += user_block(spec, e.user) == item_block(spec, e.item);
  for (const auto& e : bundle.test) within += user_block(spec, e.user) == item_block(spec, e.item);
  EXPECT_NEAR(static_cast<double>(within) / total, 0.9, 0.02);
  const double test_share = static_cast<double>(bundle.test.size()) / total;
  EXPECT_NEAR(test_share, 0.2, 0.01);
  for (const auto& e : bundle.test) EXPECT_FALSE(bundle.train.has_edge(e.user, e.item));
}

TEST(Synthetic, Infeasible) {
  SyntheticSpec spec;
  spec.num_users = 2;
  spec.num_items = 3;
  spec.num_blocks = 1;
  spec.interactions = 7;
  EXPECT_THROW(generate_synthetic(spec), ConfigError);
  spec.interactions = 4;
  spec.noise_frac = 1.5;
  EXPECT_THROW(generate_synthetic(spec), ConfigError);
}

ModelState sample_state(int dim) {
  TrainConfig cfg;
  cfg.embed_dim = dim;
  cfg.backend = Backend::kLaplacianBaseline;
  cfg.filter.num_layers = 4;
  cfg.filter.lambda = 0.75;
  auto state = init_model(7, 9, cfg);
  adam_step(state, Matrix::Constant(16, dim, 0.3), 0.01);
  state.epoch = 12;
  return state;
}

TEST(Checkpoint, RoundTripBitExact) {
  const auto dir = scratch_dir("ckpt");
  const auto state = sample_state(5);
  save_checkpoint(state, (dir / "m.ckpt").string());
  const auto loaded = load_checkpoint((dir / "m.ckpt").string());
  EXPECT_EQ(loaded.e_in, state.e_in);
  EXPECT_EQ(loaded.adam_m, state.adam_m);
  EXPECT_EQ(loaded.adam_v, state.adam_v);
  EXPECT_EQ(loaded.adam_step, 1);
  EXPECT_EQ(loaded.epoch, 12);
  EXPECT_EQ(loaded.seed, state.seed);
  EXPECT_EQ(loaded.num_users, 7);
  EXPECT_EQ(loaded.spec.backend, Backend::kLaplacianBaseline);
  EXPECT_EQ(loaded.spec.num_layers, 4);
  EXPECT_EQ(loaded.spec.lambda, 0.75);
  EXPECT_EQ(state_hash(loaded), state_hash(state));
  EXPECT_EQ(read_file(dir / "m.ckpt").substr(0, 8), "GTNCKPT1");
}

TEST(Checkpoint, CorruptHeader) {
  const auto dir = scratch_dir("ckpt_header");
  save_checkpoint(sample_state(3), (dir / "m.ckpt").string());
  std::string bytes = read_file(dir / "m.ckpt");
  bytes[3] = 'X';
  write_file(dir / "m.ckpt", bytes);
  try {
    load_checkpoint((dir / "m.ckpt").string());
    FAIL() << "expected CheckpointError";
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("GTNCKPT1"), std::string::npos);
  }
}

TEST(Checkpoint, TruncatedAndFlipped) {
  const auto dir = scratch_dir("ckpt_trunc");
  save_checkpoint(sample_state(3), (dir / "m.ckpt").string());
  const std::string bytes = read_file(dir / "m.ckpt");
  write_file(dir / "t.ckpt", bytes.substr(0, bytes.size() - 20));
  EXPECT_THROW(load_checkpoint((dir / "t.ckpt").string()), CheckpointError);
  std::string flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x10;
  write_file(dir / "f.ckpt", flipped);
  EXPECT_THROW(load_checkpoint((dir / "f.ckpt").string()), CheckpointError);
  EXPECT_THROW(load_checkpoint((dir / "missing.ckpt").string()), CheckpointError);
}

TEST(Checkpoint, ShapeMismatch) {
  const auto state = sample_state(64);
  EXPECT_NO_THROW(check_checkpoint_shape(state, 7, 9, 64));
  EXPECT_THROW(check_checkpoint_shape(state, 7, 9, 32), ShapeError);
  EXPECT_THROW(check_checkpoint_shape(state, 8, 9, 64), ShapeError);
}

TEST(Config, FlatParsing) {
  const auto kv = parse_flat_config("# comment\nlambda = 0.5\n\n  layers=4  # trailing\n");
  EXPECT_EQ(kv.at("lambda"), "0.5");
  EXPECT_EQ(kv.at("layers"), "4");
  EXPECT_THROW(parse_flat_config("lambda 0.5\n"), ConfigError);
}

TEST(Config, TypedSetters) {
  RunConfig cfg;
  cfg.set("eval_k", "10,20,40");
  cfg.set("backends", "gtn");
  cfg.set("combine", "last");
  EXPECT_EQ(cfg.eval_k, (std::vector<int>{10, 20, 40}));
  EXPECT_EQ(cfg.backends, (std::vector<Backend>{Backend::kGtn}));
  EXPECT_EQ(cfg.train.combine, LayerCombine::kLast);
  EXPECT_THROW(cfg.set("lambda", "abc"), ConfigError);
  EXPECT_THROW(cfg.set("unknown_key", "1"), ConfigError);
  for (const auto& key : RunConfig::keys()) EXPECT_TRUE(cfg.to_map().contains(key)) << key;
}

TEST(Config, LayeringFileEnvFlags) {
  const auto dir = scratch_dir("layering");
  write_file(dir / "run.cfg", "lambda = 0.5\nlayers = 4\nepochs = 3\nembed_dim = 8\n");
  ::setenv("GTN_LAYERS", "6", 1);
  ::setenv("GTN_EPOCHS", "2", 1);
  RunConfig cfg;
  apply_config_file(cfg, (dir / "run.cfg").string());
  apply_environment(cfg);
  EXPECT_EQ(cfg.train.filter.lambda, 0.5);
  EXPECT_EQ(cfg.train.filter.num_layers, 6);
  EXPECT_EQ(cfg.train.epochs, 2);

  // Flags win over both, seen through the echoed config.
  const auto out = dir / "out";
  const int code = run_cli({"gen", "--config", (dir / "run.cfg").string(), "--out", out.string(),
                            "--users", "30", "--items", "40", "--interactions", "300",
                            "--blocks", "3"});
  ::unsetenv("GTN_LAYERS");
  ::unsetenv("GTN_EPOCHS");
  ASSERT_EQ(code, 0);
  const auto echoed = parse_flat_config(read_file(out / "gen.config.txt"));
  EXPECT_EQ(echoed.at("lambda"), "0.5");
  EXPECT_EQ(echoed.at("layers"), "6");
  EXPECT_EQ(echoed.at("users"), "30");
}

TEST(MatrixText, RoundTrip) {
  const auto dir = scratch_dir("matrix");
  Matrix m(2, 3);
  m << 0.1, -2.5e-17, 3.0, 1.0 / 3.0, 7.0, -0.0;
  write_matrix_text(m, (dir / "m.txt").string());
  EXPECT_EQ(read_matrix_text((dir / "m.txt").string()), m);
  write_file(dir / "ragged.txt", "1 2\n3\n");
  EXPECT_THROW(read_matrix_text((dir / "ragged.txt").string()), ParseError);
}

TEST(Cli, GenTrainEvaluatePipeline) {
  const auto dir = scratch_dir("pipeline");
  const std::string data = (dir / "data").string();
  ASSERT_EQ(run_cli({"gen", "--users", "120", "--items", "150", "--interactions", "1500",
                     "--blocks", "4", "--seed", "3", "--out", data}),
            0);
  ASSERT_TRUE(fs::exists(dir / "data" / "train.txt"));
  const std::string run = (dir / "run").string();
  ASSERT_EQ(run_cli({"train", "--data", data, "--epochs", "3", "--dim", "8", "--out", run}), 0);
  ASSERT_TRUE(fs::exists(dir / "run" / "model.ckpt"));
  ASSERT_TRUE(fs::exists(dir / "run" / "train_log.csv"));
  ASSERT_EQ(run_cli({"evaluate", "--data", data, "--checkpoint", run + "/model.ckpt", "--out", run}),
            0);
  const auto metrics = nlohmann::json::parse(read_file(dir / "run" / "metrics.json"));
  bool recall = false, ndcg = false;
  for (const auto& row : metrics) {
    if (row["K"] != 20) continue;
    recall |= row["metric"] == "recall";
    ndcg |= row["metric"] == "ndcg";
  }
  EXPECT_TRUE(recall);
  EXPECT_TRUE(ndcg);
  EXPECT_TRUE(fs::exists(dir / "run" / "train.config.txt"));
}

TEST(Cli, SweepLambdaCoordinates) {
  const auto dir = scratch_dir("sweep");
  ASSERT_EQ(run_cli({"sweep", "--kind", "lambda", "--values", "0,0.5,1,2,4,9", "--backends",
                     "gtn", "--users", "60", "--items", "80", "--interactions", "600",
                     "--blocks", "3", "--epochs", "1", "--dim", "4", "--out", dir.string()}),
            0);
  const auto report = nlohmann::json::parse(read_file(dir / "sweep_lambda.json"));
  std::set<double> coords;
  for (const auto& row : report["rows"]) coords.insert(row["coordinate"].get<double>());
  EXPECT_EQ(coords, (std::set<double>{0, 0.5, 1, 2, 4, 9}));
  EXPECT_TRUE(fs::exists(dir / "sweep_lambda.csv"));
}

TEST(Cli, FilterAndAnalyze) {
  const auto dir = scratch_dir("filter");
  const std::string data = (dir / "data").string();
  ASSERT_EQ(run_cli({"gen", "--users", "20", "--items", "30", "--interactions", "150", "--blocks",
                     "2", "--out", data}),
            0);
  Matrix e = Matrix::Random(50, 3);
  write_matrix_text(e, (dir / "e.txt").string());
  const std::string out = (dir / "out").string();
  ASSERT_EQ(run_cli({"filter", "--data", data, "--embeddings", (dir / "e.txt").string(),
                     "--lambda", "0.5", "--layers", "20", "--out", out}),
            0);
  EXPECT_EQ(read_matrix_text(out + "/filtered.txt").rows(), 50);
  EXPECT_TRUE(fs::exists(dir / "out" / "convergence.csv"));

  ASSERT_EQ(run_cli({"train", "--data", data, "--epochs", "1", "--dim", "3", "--out", out}), 0);
  ASSERT_EQ(run_cli({"analyze", "--data", data, "--checkpoint", out + "/model.ckpt", "--out", out}),
            0);
  const auto sparsity = nlohmann::json::parse(read_file(dir / "out" / "sparsity.json"));
  ASSERT_FALSE(sparsity.empty());
}

TEST(Cli, MissingCheckpointNamesPath) {
  const auto dir = scratch_dir("missing");
  const std::string ckpt = (dir / "absent.ckpt").string();
  testing::internal::CaptureStderr();
  const int code = run_cli({"evaluate", "--users", "20", "--items", "30", "--interactions", "150",
                            "--blocks", "2", "--checkpoint", ckpt, "--out", dir.string()});
  const std::string err = testing::internal::GetCapturedStderr();
  EXPECT_NE(code, 0);
  EXPECT_NE(err.find(ckpt), std::string::npos) << err;
}

TEST(Cli, UsageErrors) {
  testing::internal::CaptureStdout();
  testing::internal::CaptureStderr();
  EXPECT_EQ(run_cli({"frobnicate"}), 2);
  EXPECT_EQ(run_cli({"train", "--no-such-flag"}), 2);
  EXPECT_EQ(run_cli({"train", "--lambda", "oops", "--out", "/tmp/gtn_dataio_usage"}), 2);
  testing::internal::GetCapturedStdout();
  testing::internal::GetCapturedStderr();
}

TEST(Cli, InputsNotMutated) {
  const auto dir = scratch_dir("immutable");
  const std::string data = (dir / "data").string();
  ASSERT_EQ(run_cli({"gen", "--users", "20", "--items", "30", "--interactions", "150", "--blocks",
                     "2", "--out", data}),
            0);
  const std::string before = read_file(dir / "data" / "train.txt");
  ASSERT_EQ(run_cli({"train", "--data", data, "--epochs", "1", "--dim", "3", "--out",
                     (dir / "run").string()}),
            0);
  EXPECT_EQ(read_file(dir / "data" / "train.txt"), before);
}

}  // namespace
}  // namespace gtn
