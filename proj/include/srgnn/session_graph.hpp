#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace srgnn {

using ItemId = std::uint32_t;

// Click sequence ordered by time, with the next click when known.
struct Session {
  std::vector<ItemId> items;
  std::optional<ItemId> label;
};

// Directed graph over the unique items of a session.
//
// nodes are in first-occurrence order and alias maps each sequence position
// to its node. a_out(u, v) = count(u->v) / outdegree(u) and
// a_in(u, v) = count(v->u) / indegree(u); rows of isolated directions are 0.
struct SessionGraph {
  std::vector<ItemId> nodes;
  std::vector<Eigen::Index> alias;
  Eigen::MatrixXd a_out;
  Eigen::MatrixXd a_in;

  Eigen::Index size() const { return static_cast<Eigen::Index>(nodes.size()); }
  Eigen::Index last_node() const { return alias.back(); }
};

SessionGraph build_session_graph(std::span<const ItemId> items);
inline SessionGraph build_session_graph(const Session& session) {
  return build_session_graph(std::span<const ItemId>(session.items));
}

// Transition counts aggregated over many sessions.
class GlobalGraph {
 public:
  using Edge = std::pair<ItemId, ItemId>;

  void add_session(std::span<const ItemId> items);
  void add_edge(ItemId from, ItemId to, std::uint64_t count);

  std::uint64_t edge_count(ItemId from, ItemId to) const;
  std::uint64_t out_degree(ItemId item) const;
  std::uint64_t in_degree(ItemId item) const;

  const std::map<Edge, std::uint64_t>& edges() const noexcept { return edges_; }
  bool empty() const noexcept { return edges_.empty(); }

  friend bool operator==(const GlobalGraph&, const GlobalGraph&) = default;

 private:
  std::map<Edge, std::uint64_t> edges_;
  std::map<ItemId, std::uint64_t> out_;
  std::map<ItemId, std::uint64_t> in_;
};

GlobalGraph build_global_graph(std::span<const std::vector<ItemId>> sessions);

enum class ConnectionScheme { Standard, NGC, FC };

std::string_view to_string(ConnectionScheme scheme);
ConnectionScheme parse_connection_scheme(std::string_view text);

// Number of n x n adjacency blocks the propagation step consumes.
inline std::size_t adjacency_blocks(ConnectionScheme scheme) {
  return scheme == ConnectionScheme::FC ? 4 : 2;
}

struct ConnectionMatrices {
  // {out, in} for Standard and NGC; {out, in, reach_out, reach_in} for FC
  std::vector<Eigen::MatrixXd> blocks;
  // NGC rows that had no global evidence and kept their session weights
  std::size_t fallback_rows = 0;
};

// Builds the adjacency blocks for `sequence`, whose graph is `graph`.
// NGC needs `global`; FC ignores it.
ConnectionMatrices connection_matrix(const SessionGraph& graph, std::span<const ItemId> sequence,
                                     ConnectionScheme scheme, const GlobalGraph* global = nullptr);

// Boolean "occurs later" relation: (i, j) = 1 iff some occurrence of node j
// follows some occurrence of node i.
Eigen::MatrixXd forward_reachability(const SessionGraph& graph, std::span<const ItemId> sequence);

}  // namespace srgnn
