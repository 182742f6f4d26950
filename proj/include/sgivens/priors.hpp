// Priors on rotator angles and eigenvalues.
#pragma once

#include <memory>
#include <vector>

#include "sgivens/givens.hpp"
#include "sgivens/random.hpp"

namespace sgivens {

/// log c(kappa), where 1/c(kappa) = integral of exp(kappa cos^2 w) over (-pi/2, pi/2).
double log_normalizing_constant(double kappa);
/// c(kappa) itself; kappa must be nonnegative.
double normalizing_constant(double kappa);

/// Angle prior: an atom beta_half at pi/2, then an atom beta_zero at 0, else
/// the continuous density c(kappa) exp(kappa cos^2 w).
class AnglePrior {
 public:
  AnglePrior() : AnglePrior(0.25, 0.99, 0.0) {}
  AnglePrior(double beta_half, double beta_zero, double kappa);

  double beta_half() const { return beta_half_; }
  double beta_zero() const { return beta_zero_; }
  double kappa() const { return kappa_; }
  double log_c_kappa() const { return log_c_; }

  /// log of the continuous component's density.
  double log_continuous_density(double angle) const;
  /// d/dw and d2/dw2 of the continuous log density.
  double continuous_log_density_derivative(double angle) const;
  double continuous_log_density_second_derivative(double angle) const;

  /// Draw from the continuous component only.
  double sample_continuous(Rng& rng) const;

 private:
  struct Grid;

  double beta_half_;
  double beta_zero_;
  double kappa_;
  double log_c_;
  std::shared_ptr<const Grid> grid_;  // envelope for large kappa
};

/// log density/mass of an angle under the mixed measure (counting measure at
/// the atoms 0 and pi/2, Lebesgue elsewhere).
double angle_log_prior(double angle, const AnglePrior& prior);

/// Draw from the full three-part prior.
double sample_angle(const AnglePrior& prior, Rng& rng);

/// Range of inverse eigenvalues the samplers work in.
inline constexpr double kMinInverseEigenvalue = 1e-200;
inline constexpr double kMaxInverseEigenvalue = 1e200;

/// Inverse eigenvalues a_k = 1/d_k independent Ga(eta1/2, eta2/2), then ordered.
struct EigenPrior {
  double eta1 = 0.001;
  double eta2 = 0.001;
};

void validate(const EigenPrior& prior);

/// q prior eigenvalues sorted strictly decreasing (a restricted to the working range).
Vector sample_eigenvalues(const EigenPrior& prior, int q, Rng& rng);

struct SparsityCurvePoint {
  int z = 0;
  double median_r = 0;  // zeros among the q(q-1) off-diagonal cells of R
  double median_k = 0;  // zeros among the q(q-1)/2 upper cells of K
};

/// Median prior zero proportions of R and K for each z in `zs`.
///
/// Each simulation draws one random ordering of all pairs and one uniform
/// angle per pair; the model with z rotators keeps the first z pairs, so the
/// curves share random numbers across z.
std::vector<SparsityCurvePoint> prior_sparsity_curve(int q, const std::vector<int>& zs, int nsim, Rng& rng,
                                                     const EigenPrior& eigen_prior = {1.0, 1.0});

/// Single-z convenience wrapper.
SparsityCurvePoint prior_sparsity_point(int q, int z, int nsim, Rng& rng,
                                        const EigenPrior& eigen_prior = {1.0, 1.0});

/// Exact-zero proportions of one eigenmatrix and precision.
double offdiagonal_zero_fraction(const Matrix& r);
double upper_zero_fraction(const Matrix& k);

}  // namespace sgivens
