// Random variate generation shared by the samplers.
#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace sgivens {

using Rng = std::mt19937_64;

/// Independent stream `stream` derived from a master seed.
Rng make_stream(std::uint64_t seed, std::uint64_t stream);

/// Uniform on the open interval (0, 1).
double uniform_open(Rng& rng);

double standard_normal(Rng& rng);
Eigen::VectorXd standard_normal_vector(Eigen::Index n, Rng& rng);

/// log of a Gamma(shape, 1) draw; stays finite for shapes far below 1.
double sample_log_gamma(double shape, Rng& rng);

/// Gamma(shape, rate) draw (mean shape / rate).
double sample_gamma(double shape, double rate, Rng& rng);

/// Gamma(shape, rate) restricted to (lo, hi); hi may be +inf.
///
/// Inverse CDF on whichever tail carries the interval; intervals whose CDF mass
/// is not resolvable in double precision fall back to exact rejection from an
/// exponential or power-law envelope.
double sample_truncated_gamma(double shape, double rate, double lo, double hi, Rng& rng);

/// Beta(a, b) draw as {x, 1 - x}, both computed without cancellation.
struct BetaDraw {
  double x;
  double complement;
};
BetaDraw sample_beta(double a, double b, Rng& rng);
double beta_log_pdf(double x, double a, double b);

/// Dirichlet(alpha) draw, normalized in log space.
Eigen::VectorXd sample_dirichlet(const Eigen::VectorXd& alpha, Rng& rng);

/// Index drawn with probabilities proportional to exp(log_weights).
std::size_t sample_log_categorical(const Eigen::VectorXd& log_weights, Rng& rng);

/// log sum exp, stable for -inf entries.
double log_sum_exp(const Eigen::VectorXd& v);

}  // namespace sgivens
