#include "gtn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include <json.hpp>

#include "gtn/kernels.hpp"

namespace gtn {

Index GroundTruth::num_eval_users() const {
  return std::count_if(test_items.begin(), test_items.end(),
                       [](const auto& items) { return !items.empty(); });
}

GroundTruth GroundTruth::from(const InteractionGraph& train, std::span<const Interaction> test) {
  GroundTruth truth;
  truth.train_items.resize(train.num_users());
  truth.test_items.resize(train.num_users());
  for (const auto& e : train.edges()) truth.train_items[e.user].push_back(e.item);
  for (const auto& [u, i] : test) {
    if (u < 0 || u >= train.num_users() || i < 0 || i >= train.num_items()) {
      throw GraphError("test pair (" + std::to_string(u) + ", " + std::to_string(i) +
                       ") out of range");
    }
    truth.test_items[u].push_back(i);
  }
  for (Index u = 0; u < train.num_users(); ++u) {
    auto& items = truth.test_items[u];
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
    for (Index i : items) {
      if (std::binary_search(truth.train_items[u].begin(), truth.train_items[u].end(), i)) {
        throw GraphError("user " + std::to_string(u) + " has item " + std::to_string(i) +
                         " in both train and test");
      }
    }
  }
  return truth;
}

Matrix score_users(const Matrix& e_final, Index num_users, std::span<const Index> users) {
  if (num_users < 0 || num_users > e_final.rows()) throw ShapeError("bad user block size");
  for (Index u : users) {
    if (u < 0 || u >= num_users) throw GraphError("unknown user index " + std::to_string(u));
  }
  Matrix scores;
  parallel::inner_products(e_final, num_users, users, scores);
  return scores;
}

std::vector<Index> top_k(std::span<const double> scores, std::span<const Index> exclude_sorted,
                         int k) {
  if (k < 1) throw ConfigError("K must be >= 1");
  std::vector<Index> candidates;
  candidates.reserve(scores.size());
  auto ex = exclude_sorted.begin();
  for (Index j = 0; j < static_cast<Index>(scores.size()); ++j) {
    while (ex != exclude_sorted.end() && *ex < j) ++ex;
    if (ex != exclude_sorted.end() && *ex == j) continue;
    candidates.push_back(j);
  }
  const auto key = [&](Index j) {
    const double s = scores[j];
    return std::isnan(s) ? -std::numeric_limits<double>::infinity() : s;
  };
  const auto better = [&](Index a, Index b) {
    const double sa = key(a);
    const double sb = key(b);
    return sa != sb ? sa > sb : a < b;
  };
  const std::size_t take = std::min<std::size_t>(k, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + take, candidates.end(), better);
  candidates.resize(take);
  return candidates;
}

RankedList rank_users(const Matrix& e_final, Index num_users, const GroundTruth& truth, int k) {
  if (truth.num_users() != num_users) throw ShapeError("ground truth covers a different user set");
  std::vector<Index> users;
  for (Index u = 0; u < num_users; ++u) {
    if (!truth.test_items[u].empty()) users.push_back(u);
  }
  RankedList ranked(num_users);
  constexpr Index kChunk = 256;
  Matrix scores;
  for (Index start = 0; start < static_cast<Index>(users.size()); start += kChunk) {
    const Index count = std::min<Index>(kChunk, static_cast<Index>(users.size()) - start);
    const std::span<const Index> chunk(users.data() + start, count);
    parallel::inner_products(e_final, num_users, chunk, scores);
#pragma omp parallel for schedule(dynamic, 8)
    for (Index r = 0; r < count; ++r) {
      const Index u = chunk[r];
      const std::span<const double> row(scores.data() + r * scores.cols(), scores.cols());
      ranked[u] = top_k(row, truth.train_items[u], k);
    }
  }
  return ranked;
}

namespace {

template <typename PerUser>
double average_over_test_users(const RankedList& ranked, const GroundTruth& truth, int k,
                               PerUser per_user) {
  if (k < 1) throw ConfigError("K must be >= 1");
  double sum = 0.0;
  Index users = 0;
  for (Index u = 0; u < truth.num_users(); ++u) {
    const auto& test = truth.test_items[u];
    if (test.empty()) continue;
    const auto& list = u < static_cast<Index>(ranked.size()) ? ranked[u] : std::vector<Index>{};
    const std::size_t depth = std::min<std::size_t>(k, list.size());
    sum += per_user(std::span<const Index>(list.data(), depth), test);
    ++users;
  }
  return users == 0 ? 0.0 : sum / static_cast<double>(users);
}

bool contains(const std::vector<Index>& sorted, Index item) {
  return std::binary_search(sorted.begin(), sorted.end(), item);
}

}  // namespace

double recall_at_k(const RankedList& ranked, const GroundTruth& truth, int k) {
  return average_over_test_users(
      ranked, truth, k, [](std::span<const Index> top, const std::vector<Index>& test) {
        const auto hits = std::count_if(top.begin(), top.end(),
                                        [&](Index i) { return contains(test, i); });
        return static_cast<double>(hits) / static_cast<double>(test.size());
      });
}

double ndcg_at_k(const RankedList& ranked, const GroundTruth& truth, int k) {
  return average_over_test_users(
      ranked, truth, k, [k](std::span<const Index> top, const std::vector<Index>& test) {
        double dcg = 0.0;
        for (std::size_t r = 0; r < top.size(); ++r) {
          if (contains(test, top[r])) dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
        }
        double idcg = 0.0;
        const std::size_t ideal = std::min<std::size_t>(k, test.size());
        for (std::size_t r = 0; r < ideal; ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
        return dcg / idcg;
      });
}

double sparsity_ratio(const Matrix& edge_diffs, double threshold) {
  if (!(threshold > 0.0)) throw ConfigError("sparsity threshold must be positive");
  if (edge_diffs.size() == 0) throw ShapeError("sparsity ratio of an empty matrix");
  const auto small = (edge_diffs.array().abs() < threshold).count();
  return static_cast<double>(small) / static_cast<double>(edge_diffs.size());
}

std::vector<MetricRow> evaluate_embeddings(const Matrix& e_final, Index num_users,
                                           const GroundTruth& truth, std::span<const int> ks) {
  if (ks.empty()) return {};
  const int k_max = *std::max_element(ks.begin(), ks.end());
  const RankedList ranked = rank_users(e_final, num_users, truth, k_max);
  const Index n_users = truth.num_eval_users();
  std::vector<MetricRow> rows;
  for (int k : ks) {
    rows.push_back({"recall", k, recall_at_k(ranked, truth, k), n_users});
    rows.push_back({"ndcg", k, ndcg_at_k(ranked, truth, k), n_users});
  }
  return rows;
}

std::string metrics_to_json(const std::vector<MetricRow>& rows) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& row : rows) {
    out.push_back({{"metric", row.metric}, {"K", row.k}, {"value", row.value},
                   {"n_users", row.n_users}});
  }
  return out.dump(2);
}

void write_metrics_json(const std::vector<MetricRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << metrics_to_json(rows) << '\n';
}

}  // namespace gtn
