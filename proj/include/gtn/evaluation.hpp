#pragma once

#include <span>
#include <string>
#include <vector>

#include "gtn/graph.hpp"
#include "gtn/types.hpp"

namespace gtn {

// Per-user held-out and training items, each list sorted ascending.
struct GroundTruth {
  std::vector<std::vector<Index>> test_items;
  std::vector<std::vector<Index>> train_items;

  Index num_users() const { return static_cast<Index>(test_items.size()); }
  // Users with at least one test item.
  Index num_eval_users() const;

  // Throws GraphError if a user's train and test sets intersect.
  static GroundTruth from(const InteractionGraph& train, std::span<const Interaction> test);
};

// Per user, the top-K item ids in rank order. Users that are not evaluated
// hold an empty list.
using RankedList = std::vector<std::vector<Index>>;

// scores(r, j) = <e_{users[r]}, e_{n + j}> over all m items.
Matrix score_users(const Matrix& e_final, Index num_users, std::span<const Index> users);

// Highest-scoring K items not in `exclude_sorted`; ties go to the lower
// item id.
std::vector<Index> top_k(std::span<const double> scores, std::span<const Index> exclude_sorted,
                         int k);

// Ranks every user with a nonempty test set.
RankedList rank_users(const Matrix& e_final, Index num_users, const GroundTruth& truth, int k);

double recall_at_k(const RankedList& ranked, const GroundTruth& truth, int k);

// Binary relevance, ideal DCG over min(K, |test|) hits.
double ndcg_at_k(const RankedList& ranked, const GroundTruth& truth, int k);

// Fraction of entries with |x| < threshold (strict). Throws ShapeError on an
// empty matrix and ConfigError on threshold <= 0.
double sparsity_ratio(const Matrix& edge_diffs, double threshold = 0.2);

struct MetricRow {
  std::string metric;
  int k = 0;
  double value = 0.0;
  Index n_users = 0;
};

std::vector<MetricRow> evaluate_embeddings(const Matrix& e_final, Index num_users,
                                           const GroundTruth& truth, std::span<const int> ks);

// [{"metric": ..., "K": ..., "value": ..., "n_users": ...}, ...]
std::string metrics_to_json(const std::vector<MetricRow>& rows);
void write_metrics_json(const std::vector<MetricRow>& rows, const std::string& path);

}  // namespace gtn
