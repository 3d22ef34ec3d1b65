#pragma once

#include <span>
#include <utility>
#include <vector>

#include "gtn/types.hpp"

namespace gtn {

struct Interaction {
  Index user;
  Index item;

  friend bool operator==(const Interaction&, const Interaction&) = default;
  friend auto operator<=>(const Interaction&, const Interaction&) = default;
};

// Deduplicated user-item bipartite graph. Users occupy global node ids
// [0, n) and items [n, n + m). Immutable after construction.
class InteractionGraph {
 public:
  InteractionGraph() = default;

  Index num_users() const { return num_users_; }
  Index num_items() const { return num_items_; }
  Index num_nodes() const { return num_users_ + num_items_; }
  Index num_edges() const { return static_cast<Index>(edges_.size()); }

  // Sorted by (user, item).
  const std::vector<Interaction>& edges() const { return edges_; }
  const std::vector<Index>& user_degree() const { return user_degree_; }
  const std::vector<Index>& item_degree() const { return item_degree_; }

  // Degree of a global node id (no self-loop).
  Index node_degree(Index node) const;

  // Items of user u, ascending. Backed by the sorted edge list.
  std::span<const Interaction> user_edges(Index user) const;
  bool has_edge(Index user, Index item) const;

  friend InteractionGraph build_graph(std::vector<Interaction> interactions, Index num_users,
                                      Index num_items);

 private:
  Index num_users_ = 0;
  Index num_items_ = 0;
  std::vector<Interaction> edges_;
  std::vector<Index> user_degree_;
  std::vector<Index> item_degree_;
  std::vector<Index> user_offset_;  // n + 1 offsets into edges_
};

// Builds the graph from raw (user, item) pairs. Duplicates collapse to one edge.
// Throws GraphError on out-of-range indices or an empty interaction list.
InteractionGraph build_graph(std::vector<Interaction> interactions, Index num_users,
                             Index num_items);

}  // namespace gtn
