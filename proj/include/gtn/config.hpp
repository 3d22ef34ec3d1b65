#pragma once

#include <map>
#include <string>
#include <vector>

#include "gtn/dataset.hpp"
#include "gtn/training.hpp"

namespace gtn {

// Everything a CLI run needs. Every field has a default; values are layered
// as defaults < config file < GTN_* environment variables < command line.
struct RunConfig {
  std::string train_path;
  std::string test_path;
  std::string checkpoint_path;
  std::string out_dir = "out";
  SyntheticSpec synthetic;
  TrainConfig train;
  std::vector<int> eval_k{20};
  std::vector<Backend> backends{Backend::kGtn, Backend::kLaplacianBaseline};
  double sparsity_threshold = 0.2;
  int eval_every = 0;  // 0 = only at the end

  // Typed assignment of one key. Throws ConfigError on an unknown key or a
  // value that does not parse.
  void set(const std::string& key, const std::string& value);

  // Resolved "key = value" lines, sorted by key.
  std::string to_text() const;
  std::map<std::string, std::string> to_map() const;

  static const std::vector<std::string>& keys();
};

// Parses "key = value" lines ('#' starts a comment).
std::map<std::string, std::string> parse_flat_config(const std::string& text);

// Applies file values (if path nonempty) and then GTN_<KEY> variables.
void apply_config_file(RunConfig& cfg, const std::string& path);
void apply_environment(RunConfig& cfg);

}  // namespace gtn
