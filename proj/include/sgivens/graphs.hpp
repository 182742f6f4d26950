// Conditional-independence graphs of sparse precision matrices.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sgivens/givens.hpp"

namespace sgivens {

/// Simple undirected graph on vertices 1..q (no self-loops).
class UndirectedGraph {
 public:
  UndirectedGraph() = default;
  explicit UndirectedGraph(int q) : q_(q), adj_(static_cast<std::size_t>(q) * q, 0) {
    if (q < 0) throw std::domain_error("vertex count must be nonnegative");
  }

  int vertex_count() const { return q_; }

  void add_edge(int i, int j) {
    check(i, j);
    adj_[idx(i, j)] = 1;
    adj_[idx(j, i)] = 1;
  }
  bool has_edge(int i, int j) const {
    check(i, j);
    return adj_[idx(i, j)] != 0;
  }

  /// Sorted list of (i, j) with i < j.
  std::vector<RotatorPair> edges() const;
  std::size_t edge_count() const;
  /// Sorted neighbors of v.
  std::vector<int> neighbors(int v) const;

  friend bool operator==(const UndirectedGraph&, const UndirectedGraph&) = default;

 private:
  void check(int i, int j) const {
    if (i < 1 || j < 1 || i > q_ || j > q_ || i == j) throw std::out_of_range("invalid edge");
  }
  std::size_t idx(int i, int j) const {
    return static_cast<std::size_t>(i - 1) * static_cast<std::size_t>(q_) + static_cast<std::size_t>(j - 1);
  }

  int q_ = 0;
  std::vector<std::uint8_t> adj_;
};

/// Edge (i,j) present iff |K(i,j)| > tol.
template <typename Derived>
UndirectedGraph graph_from_precision(const Eigen::MatrixBase<Derived>& k, double tol) {
  if (k.rows() != k.cols()) throw std::domain_error("precision matrix must be square");
  if (tol < 0) throw std::domain_error("threshold must be nonnegative");
  const int q = static_cast<int>(k.rows());
  UndirectedGraph g(q);
  for (int i = 0; i < q; ++i) {
    for (int j = i + 1; j < q; ++j) {
      const double a = static_cast<double>(k(i, j));
      const double b = static_cast<double>(k(j, i));
      if (std::abs(a - b) > 1e-8) throw std::domain_error("precision matrix is not symmetric");
      if (std::abs(a) > tol) g.add_edge(i + 1, j + 1);
    }
  }
  return g;
}

/// rel_tol * max|M|, the default numeric-zero cut for pattern extraction.
template <typename Derived>
double relative_threshold(const Eigen::MatrixBase<Derived>& m, double rel_tol = 1e-9) {
  return m.size() == 0 ? 0.0 : rel_tol * static_cast<double>(m.cwiseAbs().maxCoeff());
}

/// Graph of K with the zero cut taken relative to the largest |entry|.
template <typename Derived>
UndirectedGraph sparsity_graph(const Eigen::MatrixBase<Derived>& k, double rel_tol = 1e-9) {
  return graph_from_precision(k, relative_threshold(k, rel_tol));
}

/// Predicted graph after conjugating by one more rotator on `pair` with a
/// generic angle: connect i and j and union their neighborhoods.
UndirectedGraph propagate_rotator_edges(const UndirectedGraph& g0, RotatorPair pair);

/// Symbolic graph of a model's precision, propagating from the innermost rotator out.
UndirectedGraph predicted_graph(const Model& model);

struct DecomposabilityResult {
  bool decomposable = false;
  std::vector<int> elimination_order;  // perfect elimination ordering when decomposable
};

/// Chordality test by maximum-cardinality search and perfect-elimination check.
DecomposabilityResult is_decomposable(const UndirectedGraph& g);

/// True iff each vertex's later neighbors in `order` form a clique.
bool is_perfect_elimination_order(const UndirectedGraph& g, const std::vector<int>& order);

/// Off-diagonal zero patterns of V and K agree, each cut at rel_tol * max|entry|.
template <typename DV, typename DK>
bool sparsity_pattern_match(const Eigen::MatrixBase<DV>& v, const Eigen::MatrixBase<DK>& k,
                            double rel_tol = 1e-9) {
  if (v.rows() != k.rows() || v.cols() != k.cols()) throw std::domain_error("dimension mismatch");
  return sparsity_graph(v, rel_tol) == sparsity_graph(k, rel_tol);
}

/// One "i,j" row per edge, 1-based, sorted.
void write_edge_list(std::ostream& os, const UndirectedGraph& g);
UndirectedGraph read_edge_list(std::istream& is, int q);

}  // namespace sgivens
