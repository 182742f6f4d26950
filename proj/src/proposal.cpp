#include "sgivens/proposal.hpp"

#include <array>
#include <cmath>
#include <limits>

namespace sgivens {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kGridPoints = 256;

bool interior(double w) { return w > -half_pi<double> && w < half_pi<double> && w != 0.0; }

// cos w, sin w, cos 2w, sin 2w at the search grid points.
struct GridTable {
  std::array<double, kGridPoints> angle, c1, s1, c2, s2;

  GridTable() {
    const double step = kPi / (kGridPoints - 1);
    for (int k = 0; k < kGridPoints; ++k) {
      const double w = -half_pi<double> + k * step;
      angle[k] = w;
      c1[k] = std::cos(w);
      s1[k] = std::sin(w);
      c2[k] = std::cos(2 * w);
      s2[k] = std::sin(2 * w);
    }
  }
};

const GridTable& grid_table() {
  static const GridTable table;
  return table;
}

}  // namespace

double wrapped_cauchy_logpdf(double angle, double theta, double sigma) {
  if (!(sigma > 0) || !std::isfinite(sigma)) throw std::domain_error("wrapped Cauchy scale must be positive");
  // sinh(2s)/(cosh(2s) - cos u) = (1 - t^2) / ((1 - t)^2 + 4 t sin^2(u/2)), t = exp(-2s)
  const double t = std::exp(-2 * sigma);
  const double one_minus_t = -std::expm1(-2 * sigma);
  const double one_minus_t2 = -std::expm1(-4 * sigma);
  const double h = std::sin(angle - theta);
  return std::log(one_minus_t2 / kPi) - std::log(one_minus_t * one_minus_t + 4 * t * h * h);
}

double wrapped_cauchy_sample(double theta, double sigma, Rng& rng) {
  if (!(sigma > 0) || !std::isfinite(sigma)) throw std::domain_error("wrapped Cauchy scale must be positive");
  std::cauchy_distribution<double> cauchy(theta, sigma);
  for (;;) {
    const double w = std::remainder(cauchy(rng), kPi);
    if (interior(w)) return w;
  }
}

double boundary_beta_logpdf(double angle) {
  if (!(angle > -half_pi<double> && angle < half_pi<double>)) return -std::numeric_limits<double>::infinity();
  // distances to both ends, each exact near its own boundary
  const double x = (angle + half_pi<double>) / kPi;
  const double complement = (half_pi<double> - angle) / kPi;
  constexpr double a = 0.25;
  return (a - 1.0) * (std::log(x) + std::log(complement)) - 2 * std::lgamma(a) + std::lgamma(2 * a) -
         std::log(kPi);
}

double boundary_beta_sample(Rng& rng) {
  for (;;) {
    const BetaDraw b = sample_beta(0.25, 0.25, rng);
    const double w = b.x < 0.5 ? -half_pi<double> + kPi * b.x : half_pi<double> - kPi * b.complement;
    if (interior(w)) return w;
  }
}

double profile_argmax(const AngleProfile& h) {
  const double step = kPi / (kGridPoints - 1);
  const GridTable& g = grid_table();
  int best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < kGridPoints; ++k) {
    const double v = h.a0 + h.a1 * g.c2[k] + h.a2 * g.s2[k] + h.b1 * g.c1[k] + h.b2 * g.s1[k];
    if (v > best_value) {
      best_value = v;
      best = k;
    }
  }
  const double x0 = g.angle[best];
  double lo = std::max(-half_pi<double>, x0 - step);
  double hi = std::min(half_pi<double>, x0 + step);
  double dlo = h.derivative(lo), dhi = h.derivative(hi);
  if (!(dlo > 0 && dhi < 0)) {
    // no interior stationary maximum bracketed: best of the bracket's end points and the grid point
    double x = x0;
    if (h.value(lo) > h.value(x)) x = lo;
    if (h.value(hi) > h.value(x)) x = hi;
    return x;
  }
  // Newton on h' with bisection safeguard (h' > 0 at lo, < 0 at hi)
  double x = x0;
  for (int it = 0; it < 200; ++it) {
    const double d1 = h.derivative(x);
    const double d2 = h.second_derivative(x);
    if (d1 > 0) lo = x; else hi = x;
    double next = d2 < 0 ? x - d1 / d2 : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double delta = std::abs(next - x);
    x = next;
    if (delta < 1e-12 || hi - lo < 1e-12) break;
  }
  return x;
}

ProposalParams fit_proposal(const AngleProfile& likelihood, const AnglePrior& prior) {
  const AngleProfile h = likelihood.with_prior_kernel(prior.kappa());
  ProposalParams p;
  p.theta = profile_argmax(h);
  const double curvature = h.second_derivative(p.theta);
  if (half_pi<double> - std::abs(p.theta) < 1e-6 || !(curvature < 0)) {
    p.boundary_fallback = true;
    p.sigma = std::numeric_limits<double>::quiet_NaN();
    return p;
  }
  p.sigma = std::sqrt(-1.0 / curvature);
  if (!std::isfinite(p.sigma) || !(p.sigma > 0)) p.boundary_fallback = true;
  return p;
}

ProposalParams fit_proposal(const ConditionalTerms& terms, const AnglePrior& prior) {
  return fit_proposal(angle_profile(terms), prior);
}

double continuous_proposal_logpdf(double angle, const ProposalParams& params) {
  if (params.boundary_fallback) return boundary_beta_logpdf(angle);
  return wrapped_cauchy_logpdf(angle, params.theta, params.sigma);
}

double continuous_proposal_sample(const ProposalParams& params, Rng& rng) {
  if (params.boundary_fallback) return boundary_beta_sample(rng);
  return wrapped_cauchy_sample(params.theta, params.sigma, rng);
}

double mixed_proposal_logpdf(double angle, const ProposalParams& params, double beta_half) {
  if (angle == half_pi<double>) return std::log(beta_half);
  if (angle == 0.0) return -std::numeric_limits<double>::infinity();
  return std::log1p(-beta_half) + continuous_proposal_logpdf(angle, params);
}

double mixed_proposal_sample(const ProposalParams& params, double beta_half, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (u(rng) < beta_half) return half_pi<double>;
  return continuous_proposal_sample(params, rng);
}

}  // namespace sgivens
