// Sparse Givens parametrization of orthogonal eigenmatrices.
//
// An orthogonal q x q matrix is written as the ordered product
//
//   R = O(1,2) O(1,3) ... O(1,q) O(2,3) ... O(q-1,q) Q
//
// of plane rotations (lexicographic pair order) times a +-1 diagonal Q. A
// sparse model keeps only the rotators with nonzero angle. All pair indices
// in the public API are 1-based, matching the usual (i, j) notation.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sgivens {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar = double>
inline constexpr Scalar half_pi = std::numbers::pi_v<Scalar> / 2;

/// Unordered coordinate pair (i, j) with 1 <= i < j <= q.
struct RotatorPair {
  int i = 1;
  int j = 2;

  friend constexpr auto operator<=>(const RotatorPair&, const RotatorPair&) = default;
};

/// m = q(q-1)/2, the number of rotators in a full representation.
constexpr std::size_t pair_count(int q) {
  return q < 2 ? 0 : static_cast<std::size_t>(q) * static_cast<std::size_t>(q - 1) / 2;
}

inline void check_pair(RotatorPair p, int q) {
  if (p.i < 1 || p.j > q || p.i >= p.j) {
    throw std::out_of_range("rotator pair (" + std::to_string(p.i) + "," +
                            std::to_string(p.j) + ") invalid for dimension " +
                            std::to_string(q));
  }
}

/// Zero-based position of a pair in lexicographic order.
inline std::size_t pair_index(RotatorPair p, int q) {
  check_pair(p, q);
  const auto i = static_cast<std::size_t>(p.i - 1);
  const auto qq = static_cast<std::size_t>(q);
  return i * (2 * qq - i - 1) / 2 + static_cast<std::size_t>(p.j - p.i - 1);
}

inline RotatorPair pair_at(std::size_t k, int q) {
  if (k >= pair_count(q)) throw std::out_of_range("pair index out of range");
  int i = 1;
  std::size_t row = static_cast<std::size_t>(q - 1);
  while (k >= row) {
    k -= row;
    --row;
    ++i;
  }
  return {i, i + 1 + static_cast<int>(k)};
}

/// All pairs of dimension q in lexicographic order.
inline std::vector<RotatorPair> all_pairs(int q) {
  std::vector<RotatorPair> out;
  out.reserve(pair_count(q));
  for (int i = 1; i < q; ++i)
    for (int j = i + 1; j <= q; ++j) out.push_back({i, j});
  return out;
}

/// Maps an angle onto the half-open interval (-pi/2, pi/2].
template <typename Scalar>
Scalar canonical_angle(Scalar angle) {
  if (!(angle >= -half_pi<Scalar> && angle <= half_pi<Scalar>)) {
    throw std::domain_error("angle outside [-pi/2, pi/2]");
  }
  return angle == -half_pi<Scalar> ? half_pi<Scalar> : angle;
}

template <typename Scalar>
struct RotationCoefficients {
  Scalar c;
  Scalar s;
};

/// cos/sin of an angle, exact at 0 and at the permutation angle pi/2.
template <typename Scalar>
RotationCoefficients<Scalar> rotation_coefficients(Scalar angle) {
  if (angle == Scalar(0)) return {Scalar(1), Scalar(0)};
  if (angle == half_pi<Scalar>) return {Scalar(0), Scalar(1)};
  if (angle == -half_pi<Scalar>) return {Scalar(0), Scalar(-1)};
  using std::cos;
  using std::sin;
  return {cos(angle), sin(angle)};
}

template <typename Scalar>
struct Rotator {
  RotatorPair pair;
  Scalar angle;
};

/// Covariance parametrization V = R D R' with R a sparse rotator product.
///
/// Rotators are kept in lexicographic pair order, each pair at most once and
/// every stored angle nonzero. Eigenvalues are strictly decreasing and positive.
template <typename Scalar>
class GivensModel {
 public:
  using Vector = VectorX<Scalar>;

  GivensModel() = default;

  GivensModel(int q, std::vector<Rotator<Scalar>> rotators, Vector eigenvalues)
      : q_(q), rotators_(std::move(rotators)) {
    if (q < 1) throw std::domain_error("dimension must be positive");
    for (std::size_t k = 0; k < rotators_.size(); ++k) {
      check_pair(rotators_[k].pair, q_);
      rotators_[k].angle = canonical_angle(rotators_[k].angle);
      if (rotators_[k].angle == Scalar(0)) {
        throw std::domain_error("stored rotator angles must be nonzero");
      }
      if (k > 0 && !(rotators_[k - 1].pair < rotators_[k].pair)) {
        throw std::domain_error("rotators must be unique and in lexicographic order");
      }
    }
    set_eigenvalues(std::move(eigenvalues));
  }

  /// Builds a model from a dense lexicographic angle vector (length m),
  /// dropping the zero angles.
  static GivensModel from_angles(int q, const std::vector<Scalar>& angles, Vector eigenvalues) {
    if (angles.size() != pair_count(q)) throw std::domain_error("angle vector length must be q(q-1)/2");
    std::vector<Rotator<Scalar>> rot;
    for (std::size_t k = 0; k < angles.size(); ++k) {
      if (angles[k] != Scalar(0)) rot.push_back({pair_at(k, q), angles[k]});
    }
    return GivensModel(q, std::move(rot), std::move(eigenvalues));
  }

  /// Rotator-free model with the given eigenvalues.
  static GivensModel diagonal(Vector eigenvalues) {
    const int q = static_cast<int>(eigenvalues.size());
    return GivensModel(q, {}, std::move(eigenvalues));
  }

  int dim() const { return q_; }
  std::size_t rotator_count() const { return rotators_.size(); }
  const std::vector<Rotator<Scalar>>& rotators() const { return rotators_; }
  const Rotator<Scalar>& rotator(std::size_t k) const { return rotators_.at(k); }
  const Vector& eigenvalues() const { return d_; }
  Vector inverse_eigenvalues() const { return d_.cwiseInverse(); }

  /// Position of `pair` in the rotator sequence, if present.
  std::optional<std::size_t> find(RotatorPair pair) const {
    auto it = lower_bound(pair);
    if (it != rotators_.end() && it->pair == pair) {
      return static_cast<std::size_t>(it - rotators_.begin());
    }
    return std::nullopt;
  }

  /// Index at which a rotator on `pair` sits or would be inserted.
  std::size_t insertion_index(RotatorPair pair) const {
    return static_cast<std::size_t>(lower_bound(pair) - rotators_.begin());
  }

  /// Dense angle vector over all m pairs (zeros for absent pairs).
  std::vector<Scalar> dense_angles() const {
    std::vector<Scalar> out(pair_count(q_), Scalar(0));
    for (const auto& r : rotators_) out[pair_index(r.pair, q_)] = r.angle;
    return out;
  }

  void set_angle(std::size_t k, Scalar angle) {
    angle = canonical_angle(angle);
    if (angle == Scalar(0)) throw std::domain_error("use erase() to remove a rotator");
    rotators_.at(k).angle = angle;
  }

  std::size_t insert(RotatorPair pair, Scalar angle) {
    check_pair(pair, q_);
    angle = canonical_angle(angle);
    if (angle == Scalar(0)) throw std::domain_error("stored rotator angles must be nonzero");
    auto it = lower_bound(pair);
    if (it != rotators_.end() && it->pair == pair) throw std::domain_error("pair already present");
    it = rotators_.insert(it, Rotator<Scalar>{pair, angle});
    return static_cast<std::size_t>(it - rotators_.begin());
  }

  void erase(std::size_t k) {
    if (k >= rotators_.size()) throw std::out_of_range("rotator index out of range");
    rotators_.erase(rotators_.begin() + static_cast<std::ptrdiff_t>(k));
  }

  void set_eigenvalues(Vector d) {
    if (d.size() != q_) throw std::domain_error("eigenvalue vector must have length q");
    for (Eigen::Index k = 0; k < d.size(); ++k) {
      if (!(d(k) > Scalar(0)) || !std::isfinite(static_cast<double>(d(k)))) {
        throw std::domain_error("eigenvalues must be positive and finite");
      }
      if (k > 0 && !(d(k - 1) > d(k))) {
        throw std::domain_error("eigenvalues must be strictly decreasing");
      }
    }
    d_ = std::move(d);
  }

 private:
  auto lower_bound(RotatorPair pair) const {
    return std::lower_bound(rotators_.begin(), rotators_.end(), pair,
                            [](const Rotator<Scalar>& r, RotatorPair p) { return r.pair < p; });
  }

  int q_ = 0;
  std::vector<Rotator<Scalar>> rotators_;
  Vector d_;
};

/// Dense O_{i,j}(angle): identity except (i,i)=(j,j)=cos, (i,j)=sin, (j,i)=-sin.
template <typename Scalar>
MatrixX<Scalar> rotator_matrix(RotatorPair pair, Scalar angle, int q) {
  check_pair(pair, q);
  const auto [c, s] = rotation_coefficients(angle);
  MatrixX<Scalar> o = MatrixX<Scalar>::Identity(q, q);
  const int i = pair.i - 1;
  const int j = pair.j - 1;
  o(i, i) = c;
  o(j, j) = c;
  o(i, j) = s;
  o(j, i) = -s;
  return o;
}

/// M <- O M, or M <- O' M when `transpose` is set. Touches rows i and j only.
template <typename Derived>
void apply_rotation_left(Eigen::MatrixBase<Derived>& m, RotatorPair pair,
                         RotationCoefficients<typename Derived::Scalar> cs, bool transpose = false) {
  using Scalar = typename Derived::Scalar;
  check_pair(pair, static_cast<int>(m.rows()));
  const Scalar c = cs.c;
  const Scalar s = transpose ? -cs.s : cs.s;
  const Eigen::Index i = pair.i - 1;
  const Eigen::Index j = pair.j - 1;
  for (Eigen::Index col = 0; col < m.cols(); ++col) {
    const Scalar a = m(i, col);
    const Scalar b = m(j, col);
    m(i, col) = c * a + s * b;
    m(j, col) = c * b - s * a;
  }
}

template <typename Derived>
void apply_rotation_left(Eigen::MatrixBase<Derived>& m, RotatorPair pair,
                         typename Derived::Scalar angle, bool transpose = false) {
  if (angle == typename Derived::Scalar(0)) return check_pair(pair, static_cast<int>(m.rows()));
  apply_rotation_left(m, pair, rotation_coefficients(angle), transpose);
}

/// M <- M O, or M <- M O' when `transpose` is set. Touches columns i and j only.
template <typename Derived>
void apply_rotation_right(Eigen::MatrixBase<Derived>& m, RotatorPair pair,
                          RotationCoefficients<typename Derived::Scalar> cs, bool transpose = false) {
  using Scalar = typename Derived::Scalar;
  check_pair(pair, static_cast<int>(m.cols()));
  const Scalar c = cs.c;
  const Scalar s = transpose ? -cs.s : cs.s;
  auto ci = m.col(pair.i - 1);
  auto cj = m.col(pair.j - 1);
  for (Eigen::Index row = 0; row < m.rows(); ++row) {
    const Scalar a = ci(row);
    const Scalar b = cj(row);
    ci(row) = c * a - s * b;
    cj(row) = s * a + c * b;
  }
}

template <typename Derived>
void apply_rotation_right(Eigen::MatrixBase<Derived>& m, RotatorPair pair,
                          typename Derived::Scalar angle, bool transpose = false) {
  if (angle == typename Derived::Scalar(0)) return check_pair(pair, static_cast<int>(m.cols()));
  apply_rotation_right(m, pair, rotation_coefficients(angle), transpose);
}

/// M <- O M O' (or O' M O when `transpose` is set).
template <typename Derived>
void conjugate(Eigen::MatrixBase<Derived>& m, RotatorPair pair,
               RotationCoefficients<typename Derived::Scalar> cs, bool transpose = false) {
  apply_rotation_left(m, pair, cs, transpose);
  apply_rotation_right(m, pair, cs, !transpose);
}

template <typename Derived>
void conjugate(Eigen::MatrixBase<Derived>& m, RotatorPair pair,
               typename Derived::Scalar angle, bool transpose = false) {
  if (angle == typename Derived::Scalar(0)) return check_pair(pair, static_cast<int>(m.rows()));
  conjugate(m, pair, rotation_coefficients(angle), transpose);
}

/// Symmetric M <- O M O' (or O' M O): rotates columns i and j, fixes their
/// 2x2 block, then mirrors them into rows i and j.
template <typename Derived>
void conjugate_symmetric(Eigen::MatrixBase<Derived>& m, RotatorPair pair,
                         RotationCoefficients<typename Derived::Scalar> cs, bool transpose = false) {
  using Scalar = typename Derived::Scalar;
  apply_rotation_right(m, pair, cs, !transpose);
  const Scalar c = cs.c;
  const Scalar s = transpose ? -cs.s : cs.s;
  const Eigen::Index i = pair.i - 1;
  const Eigen::Index j = pair.j - 1;
  for (const Eigen::Index col : {i, j}) {
    const Scalar a = m(i, col);
    const Scalar b = m(j, col);
    m(i, col) = c * a + s * b;
    m(j, col) = c * b - s * a;
  }
  m(i, j) = m(j, i) = Scalar(0.5) * (m(i, j) + m(j, i));
  m.row(i) = m.col(i).transpose();
  m.row(j) = m.col(j).transpose();
}

template <typename Derived>
void conjugate_symmetric(Eigen::MatrixBase<Derived>& m, RotatorPair pair,
                         typename Derived::Scalar angle, bool transpose = false) {
  if (angle == typename Derived::Scalar(0)) return check_pair(pair, static_cast<int>(m.rows()));
  conjugate_symmetric(m, pair, rotation_coefficients(angle), transpose);
}

/// R as the left-to-right product of the stored rotators.
template <typename Scalar>
MatrixX<Scalar> compose_eigenmatrix(const GivensModel<Scalar>& model) {
  MatrixX<Scalar> r = MatrixX<Scalar>::Identity(model.dim(), model.dim());
  for (const auto& rot : model.rotators()) apply_rotation_right(r, rot.pair, rot.angle);
  return r;
}

namespace detail {

// R diag(values) R' built by conjugating the diagonal from the innermost rotator outwards.
template <typename Scalar>
MatrixX<Scalar> conjugated_diagonal(const GivensModel<Scalar>& model, const VectorX<Scalar>& values) {
  MatrixX<Scalar> m = values.asDiagonal();
  const auto& rot = model.rotators();
  for (auto it = rot.rbegin(); it != rot.rend(); ++it) conjugate(m, it->pair, it->angle);
  MatrixX<Scalar> sym = (m + m.transpose()) / Scalar(2);
  return sym;
}

}  // namespace detail

/// V = R D R'.
template <typename Scalar>
MatrixX<Scalar> build_covariance(const GivensModel<Scalar>& model) {
  if (!(model.eigenvalues().array() > Scalar(0)).all()) throw std::domain_error("non-positive eigenvalue");
  return detail::conjugated_diagonal(model, model.eigenvalues());
}

/// K = R A R' with A = D^{-1}.
template <typename Scalar>
MatrixX<Scalar> build_precision(const GivensModel<Scalar>& model) {
  if (!(model.eigenvalues().array() > Scalar(0)).all()) throw std::domain_error("non-positive eigenvalue");
  return detail::conjugated_diagonal(model, model.inverse_eigenvalues());
}

/// Scaled eigenmatrix R D^{1/2}; column k carries the k-th loading vector.
template <typename Scalar>
MatrixX<Scalar> scaled_eigenmatrix(const GivensModel<Scalar>& model) {
  return compose_eigenmatrix(model) * model.eigenvalues().cwiseSqrt().asDiagonal();
}

template <typename Scalar>
struct AngleDecomposition {
  std::vector<Scalar> angles;  // lexicographic, length q(q-1)/2
  VectorX<Scalar> signs;       // diagonal of Q
};

/// Recovers the full angle set of an orthogonal R, with R = prod O(angles) * diag(signs).
///
/// Column k is reduced to +-e_k by O(k,k+1)', ..., O(k,q)' in turn; each angle
/// zeroes one subdiagonal entry. Recovered magnitudes below `snap_tolerance`
/// are returned as exact zeros.
template <typename Derived>
AngleDecomposition<typename Derived::Scalar> decompose_eigenmatrix(
    const Eigen::MatrixBase<Derived>& r, typename Derived::Scalar snap_tolerance = 1e-12) {
  using Scalar = typename Derived::Scalar;
  using std::abs;
  using std::atan;
  if (r.rows() != r.cols()) throw std::domain_error("eigenmatrix must be square");
  const int q = static_cast<int>(r.rows());
  const MatrixX<Scalar> gram = r.transpose() * r - MatrixX<Scalar>::Identity(q, q);
  if (q > 0 && gram.cwiseAbs().maxCoeff() > Scalar(1e-8)) {
    throw std::domain_error("matrix is not orthogonal");
  }

  AngleDecomposition<Scalar> out;
  out.angles.reserve(pair_count(q));
  MatrixX<Scalar> w = r;
  for (int i = 1; i < q; ++i) {
    for (int j = i + 1; j <= q; ++j) {
      const Scalar x1 = w(i - 1, i - 1);
      const Scalar x2 = w(j - 1, i - 1);
      Scalar angle;
      if (x2 == Scalar(0)) {
        angle = Scalar(0);
      } else if (x1 == Scalar(0)) {
        angle = half_pi<Scalar>;
      } else {
        angle = atan(-x2 / x1);
        if (abs(angle) < snap_tolerance) angle = Scalar(0);
        if (angle <= -half_pi<Scalar>) angle = half_pi<Scalar>;
      }
      apply_rotation_left(w, RotatorPair{i, j}, angle, /*transpose=*/true);
      out.angles.push_back(angle);
    }
  }
  out.signs.resize(q);
  for (int k = 0; k < q; ++k) out.signs(k) = w(k, k) < Scalar(0) ? Scalar(-1) : Scalar(1);
  return out;
}

/// Largest |R'R - I| entry.
template <typename Derived>
typename Derived::Scalar orthogonality_error(const Eigen::MatrixBase<Derived>& r) {
  using Scalar = typename Derived::Scalar;
  const auto n = r.cols();
  return (r.transpose() * r - MatrixX<Scalar>::Identity(n, n)).cwiseAbs().maxCoeff();
}

using Model = GivensModel<double>;
using Matrix = MatrixX<double>;
using Vector = VectorX<double>;

}  // namespace sgivens
