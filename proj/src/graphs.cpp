#include "sgivens/graphs.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace sgivens {

std::vector<RotatorPair> UndirectedGraph::edges() const {
  std::vector<RotatorPair> out;
  for (int i = 1; i <= q_; ++i)
    for (int j = i + 1; j <= q_; ++j)
      if (adj_[idx(i, j)]) out.push_back({i, j});
  return out;
}

std::size_t UndirectedGraph::edge_count() const {
  std::size_t n = 0;
  for (auto a : adj_) n += a;
  return n / 2;
}

std::vector<int> UndirectedGraph::neighbors(int v) const {
  if (v < 1 || v > q_) throw std::out_of_range("invalid vertex");
  std::vector<int> out;
  for (int u = 1; u <= q_; ++u)
    if (u != v && adj_[idx(v, u)]) out.push_back(u);
  return out;
}

UndirectedGraph propagate_rotator_edges(const UndirectedGraph& g0, RotatorPair pair) {
  check_pair(pair, g0.vertex_count());
  UndirectedGraph g1 = g0;
  g1.add_edge(pair.i, pair.j);
  for (int k : g0.neighbors(pair.i))
    if (k != pair.j) g1.add_edge(pair.j, k);
  for (int k : g0.neighbors(pair.j))
    if (k != pair.i) g1.add_edge(pair.i, k);
  return g1;
}

UndirectedGraph predicted_graph(const Model& model) {
  UndirectedGraph g(model.dim());
  const auto& rot = model.rotators();
  for (auto it = rot.rbegin(); it != rot.rend(); ++it) {
    // pi/2 only swaps rows and columns i, j.
    if (it->angle == half_pi<double>) {
      UndirectedGraph swapped(model.dim());
      auto map = [&](int v) { return v == it->pair.i ? it->pair.j : v == it->pair.j ? it->pair.i : v; };
      for (auto e : g.edges()) swapped.add_edge(map(e.i), map(e.j));
      g = std::move(swapped);
    } else {
      g = propagate_rotator_edges(g, it->pair);
    }
  }
  return g;
}

DecomposabilityResult is_decomposable(const UndirectedGraph& g) {
  const int q = g.vertex_count();
  std::vector<int> weight(static_cast<std::size_t>(q) + 1, 0);
  std::vector<bool> numbered(static_cast<std::size_t>(q) + 1, false);
  std::vector<int> visit;  // maximum-cardinality search order
  visit.reserve(static_cast<std::size_t>(q));
  for (int step = 0; step < q; ++step) {
    int best = -1;
    for (int v = 1; v <= q; ++v) {
      if (!numbered[v] && (best < 0 || weight[v] > weight[best])) best = v;
    }
    numbered[best] = true;
    visit.push_back(best);
    for (int u : g.neighbors(best))
      if (!numbered[u]) ++weight[u];
  }
  DecomposabilityResult out;
  out.elimination_order.assign(visit.rbegin(), visit.rend());
  out.decomposable = is_perfect_elimination_order(g, out.elimination_order);
  if (!out.decomposable) out.elimination_order.clear();
  return out;
}

bool is_perfect_elimination_order(const UndirectedGraph& g, const std::vector<int>& order) {
  const int q = g.vertex_count();
  if (static_cast<int>(order.size()) != q) return false;
  std::vector<int> pos(static_cast<std::size_t>(q) + 1, -1);
  for (int k = 0; k < q; ++k) {
    const int v = order[static_cast<std::size_t>(k)];
    if (v < 1 || v > q || pos[v] >= 0) return false;
    pos[v] = k;
  }
  // For each v, its earliest later neighbour must be adjacent to all other later neighbours.
  for (int v = 1; v <= q; ++v) {
    std::vector<int> later;
    for (int u : g.neighbors(v))
      if (pos[u] > pos[v]) later.push_back(u);
    if (later.size() < 2) continue;
    int parent = later.front();
    for (int u : later)
      if (pos[u] < pos[parent]) parent = u;
    for (int u : later)
      if (u != parent && !g.has_edge(parent, u)) return false;
  }
  return true;
}

void write_edge_list(std::ostream& os, const UndirectedGraph& g) {
  for (auto e : g.edges()) os << e.i << ',' << e.j << '\n';
}

UndirectedGraph read_edge_list(std::istream& is, int q) {
  UndirectedGraph g(q);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::istringstream ls(line);
    int i = 0, j = 0;
    char comma = 0;
    if (!(ls >> i >> comma >> j) || comma != ',') {
      throw std::runtime_error("edge list line " + std::to_string(lineno) + ": expected \"i,j\"");
    }
    g.add_edge(i, j);
  }
  return g;
}

}  // namespace sgivens
