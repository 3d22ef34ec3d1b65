#include "gtn/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace gtn {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const std::string v = trim(value);
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size() || v.empty()) {
    throw ConfigError("config key '" + key + "': cannot parse '" + value + "'");
  }
  return out;
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> parts;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) parts.push_back(item);
  }
  return parts;
}

std::string format_double(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

template <typename T, typename F>
std::string join(const std::vector<T>& items, F f) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += f(items[i]);
  }
  return out;
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> kKeys = {
      "backend",     "backends",      "batch_size",  "beta",
      "blocks",      "checkpoint",    "combine",     "data_seed",
      "embed_dim",   "epochs",        "eval_every",  "eval_k",
      "gamma",       "interactions",  "items",       "l2_alpha",
      "lambda",      "layers",        "learning_rate", "noise",
      "out",         "seed",          "sparsity_threshold", "test_path",
      "train_path",  "users"};
  return kKeys;
}

void RunConfig::set(const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  if (key == "train_path") {
    train_path = value;
  } else if (key == "test_path") {
    test_path = value;
  } else if (key == "checkpoint") {
    checkpoint_path = value;
  } else if (key == "out") {
    out_dir = value;
  } else if (key == "users") {
    synthetic.num_users = parse_number<Index>(key, value);
  } else if (key == "items") {
    synthetic.num_items = parse_number<Index>(key, value);
  } else if (key == "interactions") {
    synthetic.interactions = parse_number<Index>(key, value);
  } else if (key == "blocks") {
    synthetic.num_blocks = parse_number<int>(key, value);
  } else if (key == "noise") {
    synthetic.noise_frac = parse_number<double>(key, value);
  } else if (key == "data_seed") {
    synthetic.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "embed_dim") {
    train.embed_dim = parse_number<int>(key, value);
  } else if (key == "learning_rate") {
    train.learning_rate = parse_number<double>(key, value);
  } else if (key == "batch_size") {
    train.batch_size = parse_number<int>(key, value);
  } else if (key == "l2_alpha") {
    train.l2_alpha = parse_number<double>(key, value);
  } else if (key == "epochs") {
    train.epochs = parse_number<int>(key, value);
  } else if (key == "seed") {
    train.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "backend") {
    train.backend = parse_backend(value);
  } else if (key == "combine") {
    train.combine = parse_layer_combine(value);
  } else if (key == "lambda") {
    train.filter.lambda = parse_number<double>(key, value);
  } else if (key == "layers") {
    train.filter.num_layers = parse_number<int>(key, value);
  } else if (key == "gamma") {
    train.filter.gamma = parse_number<double>(key, value);
  } else if (key == "beta") {
    train.filter.beta = parse_number<double>(key, value);
  } else if (key == "eval_k") {
    eval_k.clear();
    for (const auto& part : split_list(value)) eval_k.push_back(parse_number<int>(key, part));
    if (eval_k.empty()) throw ConfigError("eval_k must list at least one cutoff");
  } else if (key == "backends") {
    backends.clear();
    for (const auto& part : split_list(value)) backends.push_back(parse_backend(part));
    if (backends.empty()) throw ConfigError("backends must list at least one backend");
  } else if (key == "sparsity_threshold") {
    sparsity_threshold = parse_number<double>(key, value);
  } else if (key == "eval_every") {
    eval_every = parse_number<int>(key, value);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

std::map<std::string, std::string> RunConfig::to_map() const {
  return {
      {"backend", to_string(train.backend)},
      {"backends", join(backends, [](Backend b) { return to_string(b); })},
      {"batch_size", std::to_string(train.batch_size)},
      {"beta", format_double(train.filter.beta)},
      {"blocks", std::to_string(synthetic.num_blocks)},
      {"checkpoint", checkpoint_path},
      {"combine", to_string(train.combine)},
      {"data_seed", std::to_string(synthetic.seed)},
      {"embed_dim", std::to_string(train.embed_dim)},
      {"epochs", std::to_string(train.epochs)},
      {"eval_every", std::to_string(eval_every)},
      {"eval_k", join(eval_k, [](int k) { return std::to_string(k); })},
      {"gamma", format_double(train.filter.gamma)},
      {"interactions", std::to_string(synthetic.interactions)},
      {"items", std::to_string(synthetic.num_items)},
      {"l2_alpha", format_double(train.l2_alpha)},
      {"lambda", format_double(train.filter.lambda)},
      {"layers", std::to_string(train.filter.num_layers)},
      {"learning_rate", format_double(train.learning_rate)},
      {"noise", format_double(synthetic.noise_frac)},
      {"out", out_dir},
      {"seed", std::to_string(train.seed)},
      {"sparsity_threshold", format_double(sparsity_threshold)},
      {"test_path", test_path},
      {"train_path", train_path},
      {"users", std::to_string(synthetic.num_users)},
  };
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& [key, value] : to_map()) out += key + " = " + value + "\n";
  return out;
}

std::map<std::string, std::string> parse_flat_config(const std::string& text) {
  std::map<std::string, std::string> values;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
    values[key] = trim(line.substr(eq + 1));
  }
  return values;
}

void apply_config_file(RunConfig& cfg, const std::string& path) {
  if (path.empty()) return;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  for (const auto& [key, value] : parse_flat_config(buffer.str())) cfg.set(key, value);
}

void apply_environment(RunConfig& cfg) {
  for (const auto& key : RunConfig::keys()) {
    std::string name = "GTN_" + key;
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (const char* value = std::getenv(name.c_str())) cfg.set(key, value);
  }
}

}  // namespace gtn
