#include "sgivens/explore.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sgivens/priors.hpp"

namespace sgivens {

ExploreResult exploratory_fit(const SumOfSquares& ss, const ExploreConfig& cfg) {
  if (!(cfg.rho > 0 && cfg.rho < 1)) throw std::domain_error("rho must lie in (0, 1)");
  if (cfg.max_passes < 1) throw std::domain_error("max_passes must be at least 1");
  if (!(ss.n > 0)) throw std::domain_error("exploratory fit needs at least one observation");
  const int q = ss.dim();
  if (q < 1) throw std::domain_error("empty sum-of-squares matrix");
  Eigen::LLT<Matrix> llt(ss.s);
  if (llt.info() != Eigen::Success) throw std::domain_error("sum-of-squares matrix is not positive definite");

  ExploreResult out;
  out.underdetermined = ss.n <= q;
  Matrix s_star = ss.s;
  Matrix r_star = Matrix::Identity(q, q);
  for (int pass = 1; pass <= cfg.max_passes; ++pass) {
    std::size_t added_this_pass = 0;
    for (const RotatorPair pair : all_pairs(q)) {
      const Eigen::Index i = pair.i - 1, j = pair.j - 1;
      ExploreStep step;
      step.pass = pass;
      step.pair = pair;
      step.correlation = s_star(i, j) / std::sqrt(s_star(i, i) * s_star(j, j));
      if (std::abs(step.correlation) > cfg.rho) {
        Eigen::Matrix2d block;
        block << s_star(i, i), s_star(i, j), s_star(j, i), s_star(j, j);
        step.angle = conditional_mle_last(block).angle;
        if (step.angle != 0.0) {
          step.added = true;
          conjugate(s_star, pair, step.angle, /*transpose=*/true);
          apply_rotation_right(r_star, pair, step.angle);
          ++added_this_pass;
        }
      }
      out.trace.push_back(step);
    }
    out.added_count += added_this_pass;
    if (added_this_pass == 0) break;
  }

  // Diagonal MLE, reordered decreasing; columns of R* follow the eigenvalues.
  Vector d = s_star.diagonal() / ss.n;
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(q));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::stable_sort(perm.begin(), perm.end(), [&](Eigen::Index a, Eigen::Index b) { return d(a) > d(b); });
  Vector d_sorted(q);
  Matrix rp(q, q);
  for (int k = 0; k < q; ++k) {
    d_sorted(k) = d(perm[static_cast<std::size_t>(k)]);
    rp.col(k) = r_star.col(perm[static_cast<std::size_t>(k)]);
  }
  // exact ties cannot be represented with strict ordering; separate them by a relative ulp-scale step
  for (int k = 1; k < q; ++k) {
    if (!(d_sorted(k) < d_sorted(k - 1))) d_sorted(k) = d_sorted(k - 1) * (1.0 - 1e-12);
  }
  out.applied_eigenmatrix = rp;
  const auto dec = decompose_eigenmatrix(rp);
  out.model = Model::from_angles(q, dec.angles, d_sorted);
  return out;
}

std::vector<ThresholdRow> threshold_trace(const SumOfSquares& ss, const std::vector<double>& rho_grid,
                                          int max_passes) {
  if (rho_grid.empty()) throw std::domain_error("threshold grid is empty");
  std::vector<ThresholdRow> rows;
  const Matrix target = ss.s / ss.n;
  for (double rho : rho_grid) {
    const ExploreResult fit = exploratory_fit(ss, {rho, max_passes});
    ThresholdRow row;
    row.rho = rho;
    row.added_count = fit.added_count;
    row.rotator_count = fit.model.rotator_count();
    row.k_sparsity = upper_zero_fraction(build_precision(fit.model));
    row.r_sparsity = offdiagonal_zero_fraction(compose_eigenmatrix(fit.model));
    row.covariance_error = (build_covariance(fit.model) - target).norm();
    rows.push_back(row);
  }
  return rows;
}

}  // namespace sgivens
