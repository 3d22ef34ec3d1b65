#include "gtn/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <spdlog/spdlog.h>

namespace gtn {

namespace {

struct RawFile {
  std::vector<Interaction> pairs;
  Index max_user = -1;
  Index max_item = -1;
  Index lines = 0;
};

RawFile read_lines(const std::string& path, bool require_nonempty) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset file " + path);
  RawFile raw;
  std::string line;
  Index line_no = 0;
  Index empty_users = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream tokens(line);
    std::string token;
    std::vector<Index> ids;
    while (tokens >> token) {
      Index value = 0;
      const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
      if (ec != std::errc() || end != token.data() + token.size() || value < 0) {
        throw ParseError(path + ":" + std::to_string(line_no) + ": invalid id '" + token + "'");
      }
      ids.push_back(value);
    }
    if (ids.empty()) continue;
    ++raw.lines;
    const Index user = ids.front();
    raw.max_user = std::max(raw.max_user, user);
    if (ids.size() == 1) {
      ++empty_users;
      continue;
    }
    for (std::size_t t = 1; t < ids.size(); ++t) {
      raw.pairs.push_back({user, ids[t]});
      raw.max_item = std::max(raw.max_item, ids[t]);
    }
  }
  if (empty_users > 0) {
    spdlog::warn("{}: {} user line(s) without items", path, empty_users);
  }
  if (require_nonempty && raw.pairs.empty()) {
    throw ParseError(path + ": no interactions found");
  }
  return raw;
}

}  // namespace

DatasetBundle parse_dataset(const std::string& train_path, const std::string& test_path,
                            const ParseOptions& options) {
  RawFile train = read_lines(train_path, true);
  RawFile test = read_lines(test_path, false);

  Index n = 1 + std::max(train.max_user, test.max_user);
  Index m = 1 + std::max(train.max_item, test.max_item);
  if (options.num_users) {
    if (*options.num_users < n) throw ParseError("num_users override smaller than the data");
    n = *options.num_users;
  }
  if (options.num_items) {
    if (*options.num_items < m) throw ParseError("num_items override smaller than the data");
    m = *options.num_items;
  }

  DatasetBundle bundle;
  bundle.name = std::filesystem::path(train_path).parent_path().filename().string();
  if (bundle.name.empty()) bundle.name = std::filesystem::path(train_path).stem().string();
  bundle.provenance = "files:" + train_path + "," + test_path;
  bundle.train = build_graph(std::move(train.pairs), n, m);

  std::sort(test.pairs.begin(), test.pairs.end());
  test.pairs.erase(std::unique(test.pairs.begin(), test.pairs.end()), test.pairs.end());
  for (const auto& p : test.pairs) {
    if (bundle.train.has_edge(p.user, p.item)) {
      ++bundle.dropped_test_pairs;
    } else {
      bundle.test.push_back(p);
    }
  }
  if (bundle.dropped_test_pairs > 0) {
    spdlog::warn("dropped {} test pair(s) that also appear in training", bundle.dropped_test_pairs);
  }
  bundle.truth = GroundTruth::from(bundle.train, bundle.test);
  return bundle;
}

void write_dataset(const DatasetBundle& bundle, const std::string& train_path,
                   const std::string& test_path) {
  const auto write = [](const std::string& path, const std::vector<std::vector<Index>>& items) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path);
    for (std::size_t u = 0; u < items.size(); ++u) {
      if (items[u].empty()) continue;
      out << u;
      for (Index i : items[u]) out << ' ' << i;
      out << '\n';
    }
  };
  write(train_path, bundle.truth.train_items);
  write(test_path, bundle.truth.test_items);
}

int user_block(const SyntheticSpec& spec, Index user) {
  return static_cast<int>(user * spec.num_blocks / spec.num_users);
}

int item_block(const SyntheticSpec& spec, Index item) {
  return static_cast<int>(item * spec.num_blocks / spec.num_items);
}

namespace {

// First item of block b: smallest i with i * B / m >= b.
Index block_begin(const SyntheticSpec& spec, int b) {
  return (static_cast<Index>(b) * spec.num_items + spec.num_blocks - 1) / spec.num_blocks;
}

}  // namespace

DatasetBundle generate_synthetic(const SyntheticSpec& spec) {
  if (spec.num_users < 1 || spec.num_items < 1) throw ConfigError("need at least 1 user and item");
  if (spec.num_blocks < 1 || spec.num_blocks > std::min(spec.num_users, spec.num_items)) {
    throw ConfigError("num_blocks must lie in [1, min(users, items)]");
  }
  if (spec.interactions < 1 || spec.interactions > spec.num_users * spec.num_items) {
    throw ConfigError("interactions must lie in [1, users * items]");
  }
  if (!(spec.noise_frac >= 0.0 && spec.noise_frac <= 1.0)) {
    throw ConfigError("noise_frac must lie in [0, 1]");
  }
  if (!(spec.test_frac >= 0.0 && spec.test_frac < 1.0)) {
    throw ConfigError("test_frac must lie in [0, 1)");
  }
  const Index per_user_max = (spec.interactions + spec.num_users - 1) / spec.num_users;
  Index smallest_block = spec.num_items;
  for (int b = 0; b < spec.num_blocks; ++b) {
    smallest_block = std::min(smallest_block, block_begin(spec, b + 1) - block_begin(spec, b));
  }
  if (per_user_max > smallest_block) {
    throw ConfigError("up to " + std::to_string(per_user_max) +
                      " interactions per user do not fit in a block of " +
                      std::to_string(smallest_block) + " items");
  }
  if (spec.noise_frac > 0.0 && spec.num_blocks > 1 &&
      per_user_max > spec.num_items - smallest_block) {
    throw ConfigError("not enough out-of-block items for noisy interactions");
  }

  std::mt19937_64 rng(spec.seed);
  std::bernoulli_distribution noisy(spec.noise_frac);
  std::vector<Interaction> train;
  std::vector<Interaction> test;

  for (Index u = 0; u < spec.num_users; ++u) {
    const Index count = spec.interactions / spec.num_users + (u < spec.interactions % spec.num_users);
    const int b = user_block(spec, u);
    const Index lo = block_begin(spec, b);
    const Index hi = block_begin(spec, b + 1);
    std::uniform_int_distribution<Index> in_block(lo, hi - 1);
    std::uniform_int_distribution<Index> out_block(0, spec.num_items - (hi - lo) - 1);

    std::vector<Index> items;
    items.reserve(count);
    while (static_cast<Index>(items.size()) < count) {
      // Decide the category once, then redraw inside it until the item is new,
      // so duplicates do not skew the within-block fraction.
      const bool outside = spec.num_blocks > 1 && noisy(rng);
      Index item = 0;
      do {
        if (outside) {
          item = out_block(rng);
          if (item >= lo) item += hi - lo;
        } else {
          item = in_block(rng);
        }
      } while (std::find(items.begin(), items.end(), item) != items.end());
      items.push_back(item);
    }

    std::shuffle(items.begin(), items.end(), rng);
    Index n_test = static_cast<Index>(std::floor(spec.test_frac * static_cast<double>(count)));
    if (spec.test_frac > 0.0 && count >= 2 && n_test == 0) n_test = 1;
    if (n_test >= count) n_test = count - 1;
    for (Index t = 0; t < count; ++t) {
      (t < n_test ? test : train).push_back({u, items[t]});
    }
  }

  DatasetBundle bundle;
  bundle.name = "synthetic";
  std::ostringstream prov;
  prov << "synthetic:users=" << spec.num_users << ",items=" << spec.num_items
       << ",interactions=" << spec.interactions << ",blocks=" << spec.num_blocks
       << ",noise=" << spec.noise_frac << ",seed=" << spec.seed;
  bundle.provenance = prov.str();
  bundle.train = build_graph(std::move(train), spec.num_users, spec.num_items);
  std::sort(test.begin(), test.end());
  bundle.test = std::move(test);
  bundle.truth = GroundTruth::from(bundle.train, bundle.test);
  return bundle;
}

SyntheticSpec tiny_synthetic_spec() {
  SyntheticSpec spec;
  spec.num_users = 200;
  spec.num_items = 400;
  spec.interactions = 2000;
  spec.num_blocks = 20;
  spec.noise_frac = 0.1;
  spec.seed = 11;
  return spec;
}

}  // namespace gtn
