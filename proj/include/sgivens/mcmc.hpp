// Reversible-jump MCMC over sparse Givens models for one Gaussian sample.
#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sgivens/graphs.hpp"
#include "sgivens/likelihood.hpp"
#include "sgivens/priors.hpp"
#include "sgivens/proposal.hpp"
#include "sgivens/random.hpp"

namespace sgivens {

struct McmcConfig {
  int iterations = 15000;
  int burn_in = 10000;
  int thin = 1;
  double p_birth = 0.5;
  double p_death = 0.5;
  int rj_proposals = 0;  // per iteration; 0 means max(10, current rotator count)
  AnglePrior angle_prior{0.25, 0.99, 0.0};
  EigenPrior eigen_prior{0.001, 0.001};
  std::uint64_t seed = 0;
  bool update_eigenvalues = true;

  void validate() const;
  std::size_t kept_draws() const;
};

struct MoveCounters {
  std::uint64_t birth_proposed = 0, birth_accepted = 0;
  std::uint64_t death_proposed = 0, death_accepted = 0;
  std::uint64_t angle_proposed = 0, angle_accepted = 0;

  MoveCounters& operator+=(const MoveCounters& o);
};

/// Current model with its cached log-likelihood.
struct ChainState {
  Model model;
  double log_likelihood = 0;

  ChainState() = default;
  ChainState(Model m, const SumOfSquares& ss);
  /// |cache - full recomputation|.
  double cache_error(const SumOfSquares& ss) const;
};

/// One birth or death attempt. Returns true when the model changed.
bool rj_step(ChainState& state, const SumOfSquares& ss, const McmcConfig& cfg, Rng& rng, MoveCounters& counters);

/// log acceptance ratio of inserting `pair` at `angle` into `model`
/// (death uses the negative, evaluated on the model without the rotator).
double birth_log_ratio(const Model& model, const SumOfSquares& ss, RotatorPair pair, double angle,
                       const ProposalParams& params, const McmcConfig& cfg);

/// Independence Metropolis update of every present angle in canonical order.
/// Returns B = R' S R for the final angles.
Matrix angle_sweep(ChainState& state, const SumOfSquares& ss, const McmcConfig& cfg, Rng& rng,
                   MoveCounters& counters);

/// Gibbs update of a_j = 1/d_j, j = 1..q, each truncated to (a_{j-1}, a_{j+1}).
void eigenvalue_gibbs(Model& model, const Matrix& b, double n, const EigenPrior& prior, Rng& rng);

/// (n/2) sum log a_k - sum a_k B_kk / 2.
double log_likelihood_from_rotated(const Model& model, const Matrix& b, double n);

/// RJ steps, one angle sweep and one eigenvalue update.
void mcmc_iteration(ChainState& state, const SumOfSquares& ss, const McmcConfig& cfg, Rng& rng,
                    MoveCounters& counters);

struct PosteriorSamples {
  int q = 0;
  std::vector<Model> draws;             // kept draws (after burn-in, thinned)
  std::vector<int> rotator_trace;       // z at every iteration
  std::vector<double> log_likelihood;   // at every iteration
  MoveCounters counters;
  std::uint64_t seed = 0;
};

/// Starting point used by run_chain when none is given: the exploratory fit
/// when the data allow it, otherwise a diagonal model with prior eigenvalues.
Model default_start(const SumOfSquares& ss, const McmcConfig& cfg, Rng& rng);

PosteriorSamples run_chain(const SumOfSquares& ss, const McmcConfig& cfg,
                           const std::optional<Model>& start = std::nullopt, std::uint64_t stream = 0);

/// Independent chains on streams 0..chains-1, run on up to `threads` threads.
std::vector<PosteriorSamples> run_chains(const SumOfSquares& ss, const McmcConfig& cfg, int chains, int threads,
                                         const std::optional<Model>& start = std::nullopt);

struct QuantileSummary {
  double lower = 0;   // 2.5%
  double median = 0;  // 50%
  double upper = 0;   // 97.5%
};

QuantileSummary summarize_quantiles(const std::vector<double>& values);

struct PosteriorSummary {
  Matrix edge_probability;         // frequency of K_ij != 0
  Matrix mean_scaled_eigenmatrix;  // mean of R D^{1/2}
  Matrix mean_covariance;
  Matrix mean_precision;
  QuantileSummary rotator_count;
  QuantileSummary percent_nonzero_rotators;  // of q(q-1)/2
  QuantileSummary percent_zeros_r;           // of q(q-1) off-diagonal cells
  QuantileSummary percent_zeros_k;           // of q(q-1)/2 upper cells
};

PosteriorSummary summarize(const std::vector<Model>& draws);
inline PosteriorSummary summarize(const PosteriorSamples& samples) { return summarize(samples.draws); }

}  // namespace sgivens
