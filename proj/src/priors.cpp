#include "sgivens/priors.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sgivens/stats.hpp"

namespace sgivens {

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

double log_normalizing_constant(double kappa) {
  if (!(kappa >= 0) || !std::isfinite(kappa)) throw std::domain_error("kappa must be nonnegative");
  if (kappa == 0.0) return -std::log(kPi);
  // exp(kappa cos^2 w) = e^kappa exp(-kappa sin^2 w); the second factor is at most 1.
  auto f = [kappa](double w) {
    const double s = std::sin(w);
    return std::exp(-kappa * s * s);
  };
  double err = 0;
  const double integral =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -half_pi<double>, half_pi<double>, 20,
                                                                    1e-14, &err);
  return -kappa - std::log(integral);
}

double normalizing_constant(double kappa) { return std::exp(log_normalizing_constant(kappa)); }

struct AnglePrior::Grid {
  static constexpr int kBins = 1 << 16;
  std::vector<double> log_height;  // log of max exp(-kappa sin^2) over each bin
  std::vector<double> cumulative;  // cumulative envelope mass
  double width = kPi / kBins;
};

AnglePrior::AnglePrior(double beta_half, double beta_zero, double kappa)
    : beta_half_(beta_half), beta_zero_(beta_zero), kappa_(kappa) {
  if (!(beta_half >= 0 && beta_half <= 1)) throw std::domain_error("beta_half must lie in [0, 1]");
  if (!(beta_zero >= 0 && beta_zero <= 1)) throw std::domain_error("beta_zero must lie in [0, 1]");
  log_c_ = log_normalizing_constant(kappa);
  if (kappa > 20.0) {
    auto g = std::make_shared<Grid>();
    g->log_height.resize(Grid::kBins);
    g->cumulative.resize(Grid::kBins);
    double acc = 0;
    for (int b = 0; b < Grid::kBins; ++b) {
      const double lo = -half_pi<double> + b * g->width;
      const double hi = lo + g->width;
      // -kappa sin^2 w is largest at the bin point nearest zero
      const double near = (lo <= 0 && hi >= 0) ? 0.0 : (hi < 0 ? hi : lo);
      const double s = std::sin(near);
      g->log_height[b] = -kappa * s * s;
      acc += std::exp(g->log_height[b]);
      g->cumulative[b] = acc;
    }
    grid_ = std::move(g);
  }
}

double AnglePrior::log_continuous_density(double angle) const {
  const double c = std::cos(angle);
  return log_c_ + kappa_ * c * c;
}

double AnglePrior::continuous_log_density_derivative(double angle) const {
  return -kappa_ * std::sin(2 * angle);
}

double AnglePrior::continuous_log_density_second_derivative(double angle) const {
  return -2 * kappa_ * std::cos(2 * angle);
}

double AnglePrior::sample_continuous(Rng& rng) const {
  for (;;) {
    double w;
    double log_accept;
    if (!grid_) {
      w = -half_pi<double> + kPi * uniform_open(rng);
      const double s = std::sin(w);
      log_accept = -kappa_ * s * s;
    } else {
      const double u = uniform_open(rng) * grid_->cumulative.back();
      const auto b = static_cast<std::size_t>(
          std::upper_bound(grid_->cumulative.begin(), grid_->cumulative.end(), u) - grid_->cumulative.begin());
      const std::size_t bin = std::min(b, grid_->cumulative.size() - 1);
      w = -half_pi<double> + (static_cast<double>(bin) + uniform_open(rng)) * grid_->width;
      const double s = std::sin(w);
      log_accept = -kappa_ * s * s - grid_->log_height[bin];
    }
    if (w == 0.0 || !(w > -half_pi<double> && w < half_pi<double>)) continue;
    if (log_accept >= 0 || std::log(uniform_open(rng)) < log_accept) return w;
  }
}

double angle_log_prior(double angle, const AnglePrior& prior) {
  if (!(angle > -half_pi<double> && angle <= half_pi<double>)) {
    throw std::domain_error("angle outside (-pi/2, pi/2]");
  }
  if (angle == half_pi<double>) return std::log(prior.beta_half());
  const double log_rest = std::log1p(-prior.beta_half());
  if (angle == 0.0) return log_rest + std::log(prior.beta_zero());
  return log_rest + std::log1p(-prior.beta_zero()) + prior.log_continuous_density(angle);
}

double sample_angle(const AnglePrior& prior, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (u(rng) < prior.beta_half()) return half_pi<double>;
  if (u(rng) < prior.beta_zero()) return 0.0;
  return prior.sample_continuous(rng);
}

void validate(const EigenPrior& prior) {
  if (!(prior.eta1 > 0) || !(prior.eta2 > 0)) throw std::domain_error("eigenvalue prior parameters must be positive");
}

Vector sample_eigenvalues(const EigenPrior& prior, int q, Rng& rng) {
  validate(prior);
  if (q < 1) throw std::domain_error("dimension must be positive");
  for (;;) {
    // a = 1/d ~ Ga(eta1/2, rate eta2/2), restricted to the range doubles can hold
    std::vector<double> a(static_cast<std::size_t>(q));
    for (auto& v : a) v = sample_truncated_gamma(prior.eta1 / 2, prior.eta2 / 2, kMinInverseEigenvalue,
                                                 kMaxInverseEigenvalue, rng);
    std::sort(a.begin(), a.end());
    Vector d(q);
    bool ok = true;
    for (int k = 0; k < q; ++k) {
      d(k) = 1.0 / a[static_cast<std::size_t>(k)];
      if (k > 0 && !(d(k - 1) > d(k))) ok = false;
    }
    if (ok) return d;
  }
}

double offdiagonal_zero_fraction(const Matrix& r) {
  const auto q = r.rows();
  if (q < 2) return 1.0;
  Eigen::Index zeros = 0;
  for (Eigen::Index i = 0; i < q; ++i)
    for (Eigen::Index j = 0; j < q; ++j)
      if (i != j && r(i, j) == 0.0) ++zeros;
  return static_cast<double>(zeros) / static_cast<double>(q * (q - 1));
}

double upper_zero_fraction(const Matrix& k) {
  const auto q = k.rows();
  if (q < 2) return 1.0;
  Eigen::Index zeros = 0;
  for (Eigen::Index i = 0; i < q; ++i)
    for (Eigen::Index j = i + 1; j < q; ++j)
      if (k(i, j) == 0.0) ++zeros;
  return static_cast<double>(zeros) / static_cast<double>(q * (q - 1) / 2);
}

std::vector<SparsityCurvePoint> prior_sparsity_curve(int q, const std::vector<int>& zs, int nsim, Rng& rng,
                                                     const EigenPrior& eigen_prior) {
  if (q < 2) throw std::domain_error("dimension must be at least 2");
  if (nsim < 1) throw std::domain_error("simulation count must be positive");
  const auto m = static_cast<int>(pair_count(q));
  for (int z : zs)
    if (z < 0 || z > m) throw std::domain_error("rotator count outside [0, q(q-1)/2]");

  std::vector<std::vector<double>> r_frac(zs.size()), k_frac(zs.size());
  std::vector<std::size_t> order(static_cast<std::size_t>(m));
  std::vector<double> angles(static_cast<std::size_t>(m));
  for (int sim = 0; sim < nsim; ++sim) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (auto& a : angles) {
      do {
        a = -half_pi<double> + std::numbers::pi * uniform_open(rng);
      } while (a == 0.0);
    }
    const Vector d = sample_eigenvalues(eigen_prior, q, rng);
    for (std::size_t zi = 0; zi < zs.size(); ++zi) {
      std::vector<std::size_t> chosen(order.begin(), order.begin() + zs[zi]);
      std::sort(chosen.begin(), chosen.end());
      std::vector<Rotator<double>> rot;
      rot.reserve(chosen.size());
      for (auto idx : chosen) rot.push_back({pair_at(idx, q), angles[idx]});
      const Model model(q, std::move(rot), d);
      r_frac[zi].push_back(offdiagonal_zero_fraction(compose_eigenmatrix(model)));
      k_frac[zi].push_back(upper_zero_fraction(build_precision(model)));
    }
  }

  std::vector<SparsityCurvePoint> out;
  for (std::size_t zi = 0; zi < zs.size(); ++zi) {
    out.push_back({zs[zi], median(std::move(r_frac[zi])), median(std::move(k_frac[zi]))});
  }
  return out;
}

SparsityCurvePoint prior_sparsity_point(int q, int z, int nsim, Rng& rng, const EigenPrior& eigen_prior) {
  return prior_sparsity_curve(q, {z}, nsim, rng, eigen_prior).front();
}

}  // namespace sgivens
