#include "sgivens/likelihood.hpp"

#include <algorithm>
#include <cmath>

namespace sgivens {

SumOfSquares::SumOfSquares(Matrix s_, double n_) : s(std::move(s_)), n(n_) {
  if (s.rows() != s.cols()) throw std::domain_error("sum-of-squares matrix must be square");
  if (!(n >= 0)) throw std::domain_error("sample count must be nonnegative");
  if (s.size() > 0 && (s - s.transpose()).cwiseAbs().maxCoeff() > 1e-8 * (1.0 + s.cwiseAbs().maxCoeff())) {
    throw std::domain_error("sum-of-squares matrix must be symmetric");
  }
}

SumOfSquares sum_of_squares(const Matrix& x) {
  Matrix s = x.transpose() * x;
  s = (s + s.transpose()) / 2;
  return SumOfSquares(std::move(s), static_cast<double>(x.rows()));
}

Matrix center_columns(const Matrix& x) {
  if (x.rows() == 0) return x;
  return x.rowwise() - x.colwise().mean();
}

double full_log_likelihood(const Model& model, const SumOfSquares& ss) {
  if (ss.dim() != model.dim()) throw std::domain_error("model and data dimensions differ");
  const Matrix k = build_precision(model);
  const double log_det_a = -model.eigenvalues().array().log().sum();
  return 0.5 * ss.n * log_det_a - 0.5 * k.cwiseProduct(ss.s).sum();
}

double AngleProfile::value(double w) const {
  return a0 + a1 * std::cos(2 * w) + a2 * std::sin(2 * w) + b1 * std::cos(w) + b2 * std::sin(w);
}

double AngleProfile::derivative(double w) const {
  return -2 * a1 * std::sin(2 * w) + 2 * a2 * std::cos(2 * w) - b1 * std::sin(w) + b2 * std::cos(w);
}

double AngleProfile::second_derivative(double w) const {
  return -4 * a1 * std::cos(2 * w) - 4 * a2 * std::sin(2 * w) - b1 * std::cos(w) - b2 * std::sin(w);
}

AngleProfile AngleProfile::with_prior_kernel(double kappa) const {
  AngleProfile p = *this;
  p.a0 += kappa / 2;
  p.a1 += kappa / 2;
  return p;
}

AngleProfile angle_profile(const ConditionalTerms& t) {
  Eigen::Matrix2d j;
  j << 0, 1, -1, 0;
  // tr(G Psi G' Phi) = kcc c^2 + 2 kcs cs + kss s^2 for G = c I + s J
  const double kcc = (t.psi * t.phi).trace();
  const double kss = (j * t.psi * j.transpose() * t.phi).trace();
  const double kcs = 0.5 * ((j * t.psi * t.phi).trace() + (t.psi * j.transpose() * t.phi).trace());
  const double lc = t.gamma.trace();
  const double ls = (j * t.gamma).trace();
  AngleProfile p;
  p.a0 = -(kcc + kss) / 4;
  p.a1 = -(kcc - kss) / 4;
  p.a2 = -kcs / 2;
  p.b1 = -lc;
  p.b2 = -ls;
  return p;
}

double conditional_log_likelihood(double angle, const ConditionalTerms& terms) {
  return angle_profile(terms).value(angle);
}

ConditionalTerms extract_terms(const Matrix& s_star, const Matrix& a_star, RotatorPair pair) {
  const int q = static_cast<int>(s_star.rows());
  check_pair(pair, q);
  const Eigen::Index i = pair.i - 1;
  const Eigen::Index j = pair.j - 1;
  auto block = [&](const Matrix& m) {
    Eigen::Matrix2d b;
    b << m(i, i), m(i, j), m(j, i), m(j, j);
    return b;
  };
  ConditionalTerms t;
  t.phi = block(s_star);
  t.psi = block(a_star);
  // rows i, j of A* times columns i, j of S*
  Eigen::Matrix2d as;
  const Eigen::Index idx[2] = {i, j};
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) as(r, c) = a_star.row(idx[r]).dot(s_star.col(idx[c]));
  t.gamma = as - t.psi * t.phi;
  return t;
}

namespace {

// S* after the first `prefix` rotators, A* from rotators [suffix, z).
std::pair<Matrix, Matrix> partial_statistics(const Model& model, const Matrix& s, std::size_t prefix,
                                             std::size_t suffix) {
  if (s.rows() != model.dim() || s.cols() != model.dim()) throw std::domain_error("dimension mismatch");
  const auto& rot = model.rotators();
  Matrix s_star = s;
  for (std::size_t k = 0; k < prefix; ++k) conjugate_symmetric(s_star, rot[k].pair, rot[k].angle, /*transpose=*/true);
  Matrix a_star = model.inverse_eigenvalues().asDiagonal();
  for (std::size_t k = rot.size(); k-- > suffix;) conjugate_symmetric(a_star, rot[k].pair, rot[k].angle);
  return {std::move(s_star), std::move(a_star)};
}

}  // namespace

ConditionalTerms rotator_terms(const Model& model, const Matrix& s, std::size_t k) {
  if (k >= model.rotator_count()) throw std::out_of_range("rotator index out of range");
  const auto [s_star, a_star] = partial_statistics(model, s, k, k + 1);
  return extract_terms(s_star, a_star, model.rotator(k).pair);
}

ConditionalTerms insertion_terms(const Model& model, const Matrix& s, RotatorPair pair) {
  check_pair(pair, model.dim());
  if (model.find(pair)) throw std::domain_error("pair already present in the model");
  const std::size_t p = model.insertion_index(pair);
  const auto [s_star, a_star] = partial_statistics(model, s, p, p);
  return extract_terms(s_star, a_star, pair);
}

PositionCache::PositionCache(const Model& model, const Matrix& s) : rot_(model.rotators()) {
  if (s.rows() != model.dim() || s.cols() != model.dim()) throw std::domain_error("dimension mismatch");
  const std::size_t z = rot_.size();
  for (const auto& r : rot_) coef_.push_back(rotation_coefficients(r.angle));
  stride_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(z)))));
  const std::size_t checkpoints = z / stride_ + 2;

  prefix_s_.reserve(checkpoints);
  Matrix m = s;
  for (std::size_t k = 0; k <= z; ++k) {
    if (k % stride_ == 0) prefix_s_.push_back(m);
    if (k < z) conjugate_symmetric(m, rot_[k].pair, coef_[k], /*transpose=*/true);
  }
  // suffix checkpoints at positions c * stride, plus z
  suffix_a_.resize(z / stride_ + 1 + (z % stride_ != 0));
  m = model.inverse_eigenvalues().asDiagonal();
  suffix_a_.back() = m;
  for (std::size_t k = z; k-- > 0;) {
    conjugate_symmetric(m, rot_[k].pair, coef_[k]);
    if (k % stride_ == 0) suffix_a_[k / stride_] = m;
  }
}

ConditionalTerms PositionCache::terms_at(std::size_t prefix, std::size_t suffix, RotatorPair pair) const {
  const std::size_t z = rot_.size();
  Matrix s_star = prefix_s_[prefix / stride_];
  for (std::size_t k = (prefix / stride_) * stride_; k < prefix; ++k) {
    conjugate_symmetric(s_star, rot_[k].pair, coef_[k], /*transpose=*/true);
  }
  const std::size_t c = (suffix + stride_ - 1) / stride_;
  const std::size_t start = std::min(c * stride_, z);
  Matrix a_star = suffix_a_[std::min(c, suffix_a_.size() - 1)];
  for (std::size_t k = start; k-- > suffix;) conjugate_symmetric(a_star, rot_[k].pair, coef_[k]);
  return extract_terms(s_star, a_star, pair);
}

ConditionalTerms PositionCache::rotator_terms(std::size_t k) const {
  if (k >= rot_.size()) throw std::out_of_range("rotator index out of range");
  return terms_at(k, k + 1, rot_[k].pair);
}

ConditionalTerms PositionCache::insertion_terms(RotatorPair pair) const {
  const auto it = std::lower_bound(rot_.begin(), rot_.end(), pair,
                                   [](const Rotator<double>& r, RotatorPair p) { return r.pair < p; });
  if (it != rot_.end() && it->pair == pair) throw std::domain_error("pair already present in the model");
  const auto p = static_cast<std::size_t>(it - rot_.begin());
  return terms_at(p, p, pair);
}

DecorrelationState::DecorrelationState(const Model& model, const Matrix& s) {
  for (const auto& r : model.rotators()) pairs_.push_back(r.pair);
  auto [s0, a0] = partial_statistics(model, s, 0, std::min<std::size_t>(1, pairs_.size()));
  s_star_ = std::move(s0);
  a_star_ = std::move(a0);
}

RotatorPair DecorrelationState::current_pair() const {
  if (at_end()) throw state_error("decorrelation state is past the last rotator");
  return pairs_[cursor_];
}

ConditionalTerms DecorrelationState::conditional_terms(RotatorPair pair) const {
  if (at_end() || !(pairs_[cursor_] == pair)) throw state_error("decorrelation state is not positioned at this pair");
  return extract_terms(s_star_, a_star_, pair);
}

void DecorrelationState::advance(const Model& model) {
  if (at_end()) throw state_error("cannot advance past the last rotator");
  if (model.rotator_count() != pairs_.size() || !(model.rotator(cursor_).pair == pairs_[cursor_])) {
    throw state_error("model rotators do not match the decorrelation state");
  }
  const auto& cur = model.rotator(cursor_);
  conjugate_symmetric(s_star_, cur.pair, cur.angle, /*transpose=*/true);
  ++cursor_;
  if (!at_end()) {
    const auto& next = model.rotator(cursor_);
    if (!(next.pair == pairs_[cursor_])) throw state_error("model rotators do not match the decorrelation state");
    conjugate_symmetric(a_star_, next.pair, next.angle, /*transpose=*/true);
  }
}

LastRotatorMle conditional_mle_last(const Eigen::Matrix2d& s) {
  const double sii = s(0, 0), sij = 0.5 * (s(0, 1) + s(1, 0)), sjj = s(1, 1);
  LastRotatorMle out;
  if (sij == 0.0) {
    out.angle = 0.0;
  } else {
    double w = 0.5 * std::atan2(2 * sij, sjj - sii);
    if (w <= -half_pi<double>) w = half_pi<double>;
    out.angle = w;
  }
  const auto [c, sn] = rotation_coefficients(out.angle);
  out.scaled_variance_i = sii * c * c - 2 * sij * c * sn + sjj * sn * sn;
  out.scaled_variance_j = sii * sn * sn + 2 * sij * c * sn + sjj * c * c;
  return out;
}

}  // namespace sgivens
