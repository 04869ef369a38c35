#include "srgnn/session_graph.hpp"

#include <string>
#include <unordered_map>

#include "srgnn/errors.hpp"

namespace srgnn {

namespace {

void normalize_rows(Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double total = m.row(r).sum();
    if (total > 0) m.row(r) /= total;
  }
}

}  // namespace

SessionGraph build_session_graph(std::span<const ItemId> items) {
  if (items.empty()) throw ContractError("build_session_graph: empty session");

  SessionGraph g;
  std::unordered_map<ItemId, Eigen::Index> index;
  g.alias.reserve(items.size());
  for (ItemId item : items) {
    auto [it, inserted] = index.try_emplace(item, static_cast<Eigen::Index>(g.nodes.size()));
    if (inserted) g.nodes.push_back(item);
    g.alias.push_back(it->second);
  }

  const Eigen::Index n = g.size();
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 1; i < g.alias.size(); ++i) counts(g.alias[i - 1], g.alias[i]) += 1.0;

  g.a_out = counts;
  normalize_rows(g.a_out);
  g.a_in = counts.transpose();
  normalize_rows(g.a_in);
  return g;
}

void GlobalGraph::add_edge(ItemId from, ItemId to, std::uint64_t count) {
  if (count == 0) return;
  edges_[{from, to}] += count;
  out_[from] += count;
  in_[to] += count;
}

void GlobalGraph::add_session(std::span<const ItemId> items) {
  for (std::size_t i = 1; i < items.size(); ++i) add_edge(items[i - 1], items[i], 1);
}

std::uint64_t GlobalGraph::edge_count(ItemId from, ItemId to) const {
  auto it = edges_.find({from, to});
  return it == edges_.end() ? 0 : it->second;
}

std::uint64_t GlobalGraph::out_degree(ItemId item) const {
  auto it = out_.find(item);
  return it == out_.end() ? 0 : it->second;
}

std::uint64_t GlobalGraph::in_degree(ItemId item) const {
  auto it = in_.find(item);
  return it == in_.end() ? 0 : it->second;
}

GlobalGraph build_global_graph(std::span<const std::vector<ItemId>> sessions) {
  GlobalGraph g;
  for (const auto& s : sessions) g.add_session(s);
  return g;
}

std::string_view to_string(ConnectionScheme scheme) {
  switch (scheme) {
    case ConnectionScheme::Standard: return "standard";
    case ConnectionScheme::NGC: return "ngc";
    case ConnectionScheme::FC: return "fc";
  }
  return "standard";
}

ConnectionScheme parse_connection_scheme(std::string_view text) {
  if (text == "standard") return ConnectionScheme::Standard;
  if (text == "ngc") return ConnectionScheme::NGC;
  if (text == "fc") return ConnectionScheme::FC;
  throw ContractError("unknown connection scheme '" + std::string(text) + "'");
}

Eigen::MatrixXd forward_reachability(const SessionGraph& graph, std::span<const ItemId> sequence) {
  const Eigen::Index n = graph.size();
  if (sequence.size() != graph.alias.size()) {
    throw ContractError("forward_reachability: sequence does not match graph");
  }
  std::vector<std::size_t> first(n, sequence.size());
  std::vector<std::size_t> last(n, 0);
  for (std::size_t p = 0; p < graph.alias.size(); ++p) {
    const auto node = graph.alias[p];
    if (first[node] == sequence.size()) first[node] = p;
    last[node] = p;
  }
  Eigen::MatrixXd reach = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (first[i] < last[j]) reach(i, j) = 1.0;
    }
  }
  return reach;
}

ConnectionMatrices connection_matrix(const SessionGraph& graph, std::span<const ItemId> sequence,
                                     ConnectionScheme scheme, const GlobalGraph* global) {
  ConnectionMatrices out;
  switch (scheme) {
    case ConnectionScheme::Standard:
      out.blocks = {graph.a_out, graph.a_in};
      break;

    case ConnectionScheme::FC: {
      Eigen::MatrixXd reach = forward_reachability(graph, sequence);
      Eigen::MatrixXd reach_in = reach.transpose();
      out.blocks = {graph.a_out, graph.a_in, std::move(reach), std::move(reach_in)};
      break;
    }

    case ConnectionScheme::NGC: {
      if (global == nullptr) throw ContractError("connection_matrix: NGC needs a global graph");
      const Eigen::Index n = graph.size();
      Eigen::MatrixXd w_out = Eigen::MatrixXd::Zero(n, n);
      Eigen::MatrixXd w_in = Eigen::MatrixXd::Zero(n, n);
      std::vector<bool> missing_out(n, false);
      std::vector<bool> missing_in(n, false);
      for (Eigen::Index u = 0; u < n; ++u) {
        const ItemId iu = graph.nodes[u];
        for (Eigen::Index v = 0; v < n; ++v) {
          const ItemId iv = graph.nodes[v];
          // only edges that exist in this session are reweighted
          if (graph.a_out(u, v) > 0) {
            const auto count = global->edge_count(iu, iv);
            if (count == 0) missing_out[u] = true;
            else w_out(u, v) = double(count) / double(global->out_degree(iu));
          }
          if (graph.a_in(u, v) > 0) {
            const auto count = global->edge_count(iv, iu);
            if (count == 0) missing_in[u] = true;
            else w_in(u, v) = double(count) / double(global->in_degree(iu));
          }
        }
      }
      auto finish = [&](Eigen::MatrixXd& w, const Eigen::MatrixXd& session,
                        const std::vector<bool>& missing) {
        for (Eigen::Index r = 0; r < n; ++r) {
          if (missing[r]) {
            w.row(r) = session.row(r);
            ++out.fallback_rows;
          } else if (const double total = w.row(r).sum(); total > 0) {
            w.row(r) /= total;
          }
        }
      };
      finish(w_out, graph.a_out, missing_out);
      finish(w_in, graph.a_in, missing_in);
      out.blocks = {std::move(w_out), std::move(w_in)};
      break;
    }
  }
  return out;
}

}  // namespace srgnn
