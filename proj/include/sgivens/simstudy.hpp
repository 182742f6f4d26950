// Synthetic evaluation: random sparse precisions, Gaussian data, KL scoring.
#pragma once

#include <cstdint>
#include <vector>

#include "sgivens/mcmc.hpp"

namespace sgivens {

struct PrecisionOptions {
  bool include_first_row = false;  // also draw off-diagonals of U's first row
  double max_condition = 1e8;      // redraw above this condition number
};

/// K = U'U with U upper triangular: U_ii = sqrt(nu_i), nu_i ~ chi^2_{p-i+1},
/// U_ij = u I(|u| > 1) with u ~ N(0, 1) for rows 2..p-1 (and row 1 if requested).
Matrix generate_true_precision(int p, Rng& rng, const PrecisionOptions& options = {});

/// The upper-triangular factor used by generate_true_precision (one draw, no conditioning check).
Matrix draw_precision_factor(int p, Rng& rng, bool include_first_row = false);

/// n draws from N(0, K^{-1}), one per row.
Matrix sample_gaussian(const Matrix& precision, int n, Rng& rng);

/// KL(N(0, K_true^{-1}) || N(0, K_model^{-1})).
double gaussian_kl(const Matrix& k_true, const Matrix& k_model);

struct StudyConfig {
  std::vector<int> dims{10, 20, 30};
  int n = 150;
  int reps = 10;
  int iterations = 15000;
  int burn_in = 10000;
  int thin = 1;
  std::uint64_t seed = 0;
  PrecisionOptions precision;
  double beta_half = 0.0;
  double kappa = 0.0;
  EigenPrior eigen_prior{0.001, 0.001};
  // chain start: exploratory fit at this threshold and pass count
  double start_rho = 0.1;
  int start_passes = 5;
  int threads = 1;
};

/// Angle prior used by the study: beta_zero = 1 - 2/(p - 1), no pi/2 atom.
AnglePrior study_angle_prior(int p, double beta_half = 0.0, double kappa = 0.0);

struct ReplicateResult {
  int p = 0;
  int rep = 0;
  std::vector<double> draw_kl;  // one per stored posterior draw
  double median_kl = 0;
  double plugin_kl = 0;         // KL of n S^{-1}
};

struct StudyRow {
  int p = 0;
  double log_kl_p10 = 0, log_kl_p50 = 0, log_kl_p90 = 0;  // pooled over replicates
  double plugin_log_kl_median = 0;
  int replicates_beating_plugin = 0;
  int replicates = 0;
};

struct StudyResult {
  std::vector<ReplicateResult> replicates;
  std::vector<StudyRow> summary;
};

ReplicateResult run_replicate(int p, int rep, const StudyConfig& cfg);
StudyResult run_study(const StudyConfig& cfg);

}  // namespace sgivens
