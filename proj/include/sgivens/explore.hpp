// Forward-selection exploratory fit of a sparse Givens model.
#pragma once

#include <vector>

#include "sgivens/givens.hpp"
#include "sgivens/likelihood.hpp"

namespace sgivens {

struct ExploreConfig {
  double rho = 0.5;    // include a rotator when |residual correlation| > rho
  int max_passes = 1;  // extra passes repeat the sweep while rotators are still being added
};

struct ExploreStep {
  int pass = 1;
  RotatorPair pair;
  double correlation = 0;  // residual correlation from S* when the pair was visited
  double angle = 0;        // closed-form angle applied (0 when skipped)
  bool added = false;
};

struct ExploreResult {
  Model model;                     // canonical angles, eigenvalues decreasing
  std::vector<ExploreStep> trace;  // one entry per visited pair
  std::size_t added_count = 0;     // rotators applied during the sweep(s)
  Matrix applied_eigenmatrix;      // R* P before re-deriving canonical angles
  bool underdetermined = false;    // n <= q
};

/// Sweeps pairs in lexicographic order, applying the closed-form decorrelating
/// rotator whenever the residual correlation exceeds rho, then takes the
/// eigenvalues from the decorrelated diagonal and re-expresses R* P canonically.
ExploreResult exploratory_fit(const SumOfSquares& ss, const ExploreConfig& cfg = {});

struct ThresholdRow {
  double rho = 0;
  std::size_t added_count = 0;
  std::size_t rotator_count = 0;  // rotators in the canonical model
  double k_sparsity = 0;          // zero fraction of the upper triangle of K
  double r_sparsity = 0;          // zero fraction of the off-diagonal of R
  double covariance_error = 0;    // Frobenius distance of V to S/n
};

/// One exploratory fit per threshold; a single pass is one cyclic sweep, so V approaches S/n
/// as rho -> 0 only when max_passes allows repeated sweeps.
std::vector<ThresholdRow> threshold_trace(const SumOfSquares& ss, const std::vector<double>& rho_grid,
                                          int max_passes = 1);

}  // namespace sgivens
