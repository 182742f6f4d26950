// Mixtures of sparse Givens factor analyzers with diagonal measurement error:
//
//   y_i = x_i + e_i,  e_i ~ N(0, diag(psi)),  x_i | gamma_i = c ~ N(mu_c, Sigma_c),
//   mu_c | Sigma_c ~ N(0, tau Sigma_c),  w ~ Dirichlet(alpha),  1/psi_j ~ Ga(psi_shape, psi_rate).
#pragma once

#include <cstdint>
#include <vector>

#include "sgivens/mcmc.hpp"

namespace sgivens {

struct MixtureConfig {
  int components = 4;
  double tau = 1000;
  double psi_shape = 3.1;
  double psi_rate = 0.17;
  double dirichlet_alpha = 0;  // 0 means 1/C
  McmcConfig kernel;           // priors, RJ schedule, iterations/burn_in/thin, seed
  double init_rho = 0.5;
  int kmeans_restarts = 10;
  int kmeans_iterations = 100;
  bool relabel = true;
  bool fix_latent = false;  // keep X = Y
  bool fix_psi = false;     // keep psi at its initial value
  double initial_psi = 0;   // > 0 overrides the prior draw for the starting psi
  int threads = 1;
  bool initialize_from_prior = false;

  void validate() const;
  double alpha() const { return dirichlet_alpha > 0 ? dirichlet_alpha : 1.0 / components; }
};

struct MixtureState {
  Vector w;                       // C weights
  std::vector<Vector> mu;         // C means
  std::vector<ChainState> chains; // C component models with likelihood caches
  Vector psi;                     // q measurement-error variances
  std::vector<int> labels;        // n labels in 0..C-1
  Matrix x;                       // n x q latent signals

  int components() const { return static_cast<int>(w.size()); }
  std::vector<int> counts() const;
};

struct KMeansResult {
  std::vector<int> labels;
  Matrix centers;  // C x q
  double inertia = 0;
  bool reassigned = false;  // an empty cluster was refilled
};

/// k-means++ seeding, Lloyd iterations, best of `restarts`.
KMeansResult kmeans(const Matrix& y, int clusters, int restarts, int iterations, Rng& rng);

/// Starting state: k-means classification, group means and proportions,
/// per-group exploratory fits, X = Y, psi from its prior.
MixtureState init_kmeans(const Matrix& y, const MixtureConfig& cfg, Rng& rng);

/// Component sufficient statistics for Sigma_c: sum (x - mu)(x - mu)' + mu mu'/tau, count n_c + 1.
SumOfSquares component_statistics(const MixtureState& state, int c, double tau);

/// Per-component quantities reused by the label and latent updates.
/// Eigen form of a component precision, K = R diag(a) R'.
struct ComponentCache {
  Matrix rotation;
  Vector inverse_eigenvalues;
  double log_det_covariance = 0;
};
std::vector<ComponentCache> component_caches(const MixtureState& state);

void sample_labels(MixtureState& state, const std::vector<ComponentCache>& caches, Rng& rng);
void sample_weights(MixtureState& state, const MixtureConfig& cfg, Rng& rng);
void sample_means(MixtureState& state, const MixtureConfig& cfg, Rng& rng);
void sample_latent(const Matrix& y, MixtureState& state, const std::vector<ComponentCache>& caches, Rng& rng);
void sample_psi(const Matrix& y, MixtureState& state, const MixtureConfig& cfg, Rng& rng);

/// One RJ-MCMC kernel iteration per component, component c drawing from rngs[c].
void update_component_models(MixtureState& state, const MixtureConfig& cfg, std::vector<Rng>& rngs,
                             MoveCounters& counters);

/// Minimum-cost assignment; result[r] is the column assigned to row r.
std::vector<int> hungarian_assignment(const Matrix& cost);

/// Permutation p with new component r = old component p[r], minimizing
/// sum_r weight_{p[r]} |mu_{p[r]} - reference_r|^2 (unit weights when empty).
std::vector<int> relabel_permutation(const std::vector<Vector>& mu, const std::vector<Vector>& reference,
                                     const std::vector<double>& weight = {});
void apply_permutation(MixtureState& state, const std::vector<int>& perm);

/// One full iteration: labels, weights, means, component models, latent X, psi, relabel.
void mixture_iteration(const Matrix& y, MixtureState& state, const MixtureConfig& cfg, Rng& rng,
                       std::vector<Rng>& component_rngs, MoveCounters& counters);

struct MixtureDraw {
  Vector w;
  std::vector<Vector> mu;
  std::vector<Model> models;
  Vector psi;
};

struct MixtureSamples {
  std::vector<MixtureDraw> draws;
  Matrix label_counts;  // n x C counts over kept draws
  MoveCounters counters;
  int components = 0;

  /// Pr(gamma_i = c | Y) estimated by label frequencies.
  Matrix classification_probabilities() const;
  Vector mean_weights() const;
};

MixtureSamples run_mixture_chain(const Matrix& y, const MixtureConfig& cfg);
/// As above, from a given starting state.
MixtureSamples run_mixture_chain(const Matrix& y, const MixtureConfig& cfg, MixtureState start);

/// Full draw of (w, mu, models, psi, labels, X) from the prior for n observations
/// of dimension q, and data Y from the observation model.
MixtureState sample_mixture_prior(int q, int n, const MixtureConfig& cfg, Rng& rng);
Matrix sample_observations(const MixtureState& state, Rng& rng);

}  // namespace sgivens
