#include "gtn/graph.hpp"

#include <algorithm>
#include <string>

namespace gtn {

Index InteractionGraph::node_degree(Index node) const {
  if (node < 0 || node >= num_nodes()) {
    throw GraphError("node id " + std::to_string(node) + " out of range");
  }
  return node < num_users_ ? user_degree_[node] : item_degree_[node - num_users_];
}

std::span<const Interaction> InteractionGraph::user_edges(Index user) const {
  if (user < 0 || user >= num_users_) {
    throw GraphError("user id " + std::to_string(user) + " out of range");
  }
  const auto begin = static_cast<std::size_t>(user_offset_[user]);
  const auto end = static_cast<std::size_t>(user_offset_[user + 1]);
  return std::span<const Interaction>(edges_).subspan(begin, end - begin);
}

bool InteractionGraph::has_edge(Index user, Index item) const {
  const auto row = user_edges(user);
  return std::binary_search(row.begin(), row.end(), Interaction{user, item});
}

InteractionGraph build_graph(std::vector<Interaction> interactions, Index num_users,
                             Index num_items) {
  if (num_users < 1 || num_items < 1) {
    throw GraphError("graph needs at least one user and one item");
  }
  if (interactions.empty()) {
    throw GraphError("empty interaction list: nothing to train on");
  }
  for (const auto& [u, i] : interactions) {
    if (u < 0 || u >= num_users || i < 0 || i >= num_items) {
      throw GraphError("interaction (" + std::to_string(u) + ", " + std::to_string(i) +
                       ") out of range for " + std::to_string(num_users) + " users x " +
                       std::to_string(num_items) + " items");
    }
  }
  std::sort(interactions.begin(), interactions.end());
  interactions.erase(std::unique(interactions.begin(), interactions.end()), interactions.end());

  InteractionGraph g;
  g.num_users_ = num_users;
  g.num_items_ = num_items;
  g.user_degree_.assign(num_users, 0);
  g.item_degree_.assign(num_items, 0);
  for (const auto& [u, i] : interactions) {
    ++g.user_degree_[u];
    ++g.item_degree_[i];
  }
  g.user_offset_.assign(num_users + 1, 0);
  for (Index u = 0; u < num_users; ++u) {
    g.user_offset_[u + 1] = g.user_offset_[u] + g.user_degree_[u];
  }
  g.edges_ = std::move(interactions);
  return g;
}

}  // namespace gtn
