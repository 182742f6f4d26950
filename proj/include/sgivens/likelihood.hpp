// Gaussian likelihood in the (angles, inverse eigenvalues) parametrization.
#pragma once

#include <Eigen/Dense>

#include <vector>

#include "sgivens/errors.hpp"
#include "sgivens/givens.hpp"

namespace sgivens {

/// S = sum of x x' over (already centered) observations, with n the count.
struct SumOfSquares {
  Matrix s;
  double n = 0;

  SumOfSquares() = default;
  SumOfSquares(Matrix s_, double n_);
  int dim() const { return static_cast<int>(s.rows()); }
};

/// X'X of the rows of X, taken as zero-mean observations.
SumOfSquares sum_of_squares(const Matrix& x);
/// X with column means subtracted.
Matrix center_columns(const Matrix& x);

/// (n/2) sum log a_k - tr(R A R' S)/2, a_k = 1/d_k, data-only constants dropped.
double full_log_likelihood(const Model& model, const SumOfSquares& ss);

/// 2x2 blocks entering the likelihood as a function of one angle.
struct ConditionalTerms {
  Eigen::Matrix2d phi;    // S* block on rows/cols (i, j)
  Eigen::Matrix2d psi;    // A* block on rows/cols (i, j)
  Eigen::Matrix2d gamma;  // (A* S*) block minus psi * phi
};

/// Angle-dependent part of the log-likelihood, f(w) = -[tr(G Psi G' Phi) + 2 tr(G Gamma)]/2
/// with G = [[cos, sin], [-sin, cos]], stored as a trigonometric polynomial
///
///   f(w) = a0 + a1 cos 2w + a2 sin 2w + b1 cos w + b2 sin w.
struct AngleProfile {
  double a0 = 0, a1 = 0, a2 = 0, b1 = 0, b2 = 0;

  double value(double w) const;
  double derivative(double w) const;
  double second_derivative(double w) const;

  /// Adds kappa cos^2 w, the continuous prior's log kernel.
  AngleProfile with_prior_kernel(double kappa) const;
};

AngleProfile angle_profile(const ConditionalTerms& terms);

/// f(w) from the terms (same value as angle_profile(terms).value(w)).
double conditional_log_likelihood(double angle, const ConditionalTerms& terms);

/// Partially rotated statistics around one position of the rotator sequence.
///
/// Positioned on rotator k: S* = P' S P with P the product of rotators before k
/// and A* = T A T' with T the product of rotators after k. A full sweep ends
/// with S* = R' S R.
class DecorrelationState {
 public:
  DecorrelationState(const Model& model, const Matrix& s);

  std::size_t cursor() const { return cursor_; }
  bool at_end() const { return cursor_ == pairs_.size(); }
  RotatorPair current_pair() const;

  const Matrix& s_star() const { return s_star_; }
  const Matrix& a_star() const { return a_star_; }

  /// Terms for the rotator at the cursor; `pair` must match it.
  ConditionalTerms conditional_terms(RotatorPair pair) const;

  /// Moves past rotator k using the (possibly updated) angle stored in `model`.
  /// The model must hold the same rotator pairs as at construction.
  void advance(const Model& model);

 private:
  std::vector<RotatorPair> pairs_;
  std::size_t cursor_ = 0;
  Matrix s_star_;
  Matrix a_star_;
};

/// Selector extraction of the (i, j) blocks of S* and A*.
ConditionalTerms extract_terms(const Matrix& s_star, const Matrix& a_star, RotatorPair pair);

/// Terms for rotator k of `model`, with every other rotator at its current angle.
ConditionalTerms rotator_terms(const Model& model, const Matrix& s, std::size_t k);

/// Terms for a rotator on `pair` not in the model, inserted at its canonical position.
ConditionalTerms insertion_terms(const Model& model, const Matrix& s, RotatorPair pair);

/// S* and A* checkpoints along a fixed rotator sequence.
///
/// Checkpoints sit every ~sqrt(z) positions, so building costs one pass and a
/// query replays at most that many rotators. Values match the free
/// rotator_terms / insertion_terms exactly. Invalid once the model changes.
class PositionCache {
 public:
  PositionCache(const Model& model, const Matrix& s);

  ConditionalTerms rotator_terms(std::size_t k) const;
  ConditionalTerms insertion_terms(RotatorPair pair) const;

 private:
  // S* after rotators 0..p-1 and A* from rotators p..z-1 (suffix from position `suffix`).
  ConditionalTerms terms_at(std::size_t prefix, std::size_t suffix, RotatorPair pair) const;

  std::vector<Rotator<double>> rot_;
  std::vector<RotationCoefficients<double>> coef_;
  std::size_t stride_ = 1;
  std::vector<Matrix> prefix_s_;  // [c]: S after rotators 0..c*stride-1
  std::vector<Matrix> suffix_a_;  // [c]: A from rotators min(c*stride, z)..z-1
};

/// Closed-form angle and inverse-eigenvalue estimates for a last rotator.
struct LastRotatorMle {
  double angle = 0;
  double scaled_variance_i = 0;  // n / a_i, the i-th diagonal of O' s O
  double scaled_variance_j = 0;  // n / a_j
};

/// Angle that diagonalizes the 2x2 block `s` by O' s O, in (-pi/2, pi/2];
/// zero when s has no off-diagonal.
LastRotatorMle conditional_mle_last(const Eigen::Matrix2d& s);

}  // namespace sgivens
