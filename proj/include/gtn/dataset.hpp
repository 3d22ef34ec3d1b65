#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gtn/evaluation.hpp"
#include "gtn/graph.hpp"

namespace gtn {

struct DatasetBundle {
  std::string name;
  std::string provenance;
  InteractionGraph train;
  std::vector<Interaction> test;  // sorted, disjoint from train
  GroundTruth truth;
  // Test pairs dropped because they duplicated a training pair.
  Index dropped_test_pairs = 0;
};

struct ParseOptions {
  // Override the inferred universe sizes (must not be smaller than the data).
  std::optional<Index> num_users;
  std::optional<Index> num_items;
};

// Reads the "user item item ..." line format. Sizes are 1 + max id seen in
// either file unless overridden. Throws ParseError with the line number on a
// malformed token and on an empty train file.
DatasetBundle parse_dataset(const std::string& train_path, const std::string& test_path,
                            const ParseOptions& options = {});

// Writes train and test files in the same line format (users without items
// are omitted).
void write_dataset(const DatasetBundle& bundle, const std::string& train_path,
                   const std::string& test_path);

struct SyntheticSpec {
  Index num_users = 500;
  Index num_items = 800;
  Index interactions = 20000;
  int num_blocks = 5;
  double noise_frac = 0.1;
  std::uint64_t seed = 7;
  double test_frac = 0.2;
};

// Block-preference generator. Users and items are split into num_blocks
// contiguous groups; each of a user's interactions comes from the user's own
// block with probability 1 - noise_frac and from the whole catalog otherwise.
// Interactions are spread evenly over users, then split per user into train
// and test. Throws ConfigError on infeasible sizes.
DatasetBundle generate_synthetic(const SyntheticSpec& spec);

// Block of a user / item under the generator's partition.
int user_block(const SyntheticSpec& spec, Index user);
int item_block(const SyntheticSpec& spec, Index item);

// Small block dataset used by the learning-sanity tests.
SyntheticSpec tiny_synthetic_spec();

}  // namespace gtn
