// Independence proposals for a single rotator angle.
#pragma once

#include "sgivens/likelihood.hpp"
#include "sgivens/priors.hpp"
#include "sgivens/random.hpp"

namespace sgivens {

/// log of (1/pi) sinh(2 sigma) / (cosh(2 sigma) - cos(2 (w - theta))) on (-pi/2, pi/2].
double wrapped_cauchy_logpdf(double angle, double theta, double sigma);

/// Cauchy(theta, sigma) wrapped modulo pi onto (-pi/2, pi/2); never returns 0 or +-pi/2.
double wrapped_cauchy_sample(double theta, double sigma, Rng& rng);

/// Beta(0.25, 0.25) mapped affinely onto (-pi/2, pi/2), density carrying the 1/pi Jacobian.
double boundary_beta_logpdf(double angle);
double boundary_beta_sample(Rng& rng);

struct ProposalParams {
  double theta = 0;
  double sigma = 1;
  bool boundary_fallback = false;
};

/// Laplace fit to the conditional posterior: theta at its global maximum on
/// [-pi/2, pi/2], sigma^2 = -1 / (second derivative at theta). Boundary modes
/// and non-negative curvature switch to the Beta fallback.
ProposalParams fit_proposal(const AngleProfile& likelihood, const AnglePrior& prior);
ProposalParams fit_proposal(const ConditionalTerms& terms, const AnglePrior& prior);

/// Global maximizer of a trigonometric profile on [-pi/2, pi/2] (grid + safeguarded Newton).
double profile_argmax(const AngleProfile& profile);

/// Continuous part of the proposal: wrapped Cauchy or the Beta fallback.
double continuous_proposal_logpdf(double angle, const ProposalParams& params);
double continuous_proposal_sample(const ProposalParams& params, Rng& rng);

/// Mixed proposal: atom beta_half at pi/2, otherwise the continuous part.
/// Density relative to the same mixed measure as the prior.
double mixed_proposal_logpdf(double angle, const ProposalParams& params, double beta_half);
double mixed_proposal_sample(const ProposalParams& params, double beta_half, Rng& rng);

}  // namespace sgivens
