#include "sgivens/random.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <stdexcept>

namespace sgivens {

Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    0x5eedu};
  return Rng(seq);
}

double uniform_open(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (;;) {
    const double x = u(rng);
    if (x > 0.0) return x;
  }
}

double standard_normal(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return n(rng);
}

Eigen::VectorXd standard_normal_vector(Eigen::Index n, Rng& rng) {
  Eigen::VectorXd z(n);
  for (Eigen::Index k = 0; k < n; ++k) z(k) = standard_normal(rng);
  return z;
}

double sample_log_gamma(double shape, Rng& rng) {
  if (!(shape > 0)) throw std::domain_error("gamma shape must be positive");
  if (shape >= 1.0) {
    std::gamma_distribution<double> g(shape, 1.0);
    for (;;) {
      const double x = g(rng);
      if (x > 0) return std::log(x);
    }
  }
  // G(a) = G(a + 1) U^{1/a}
  return sample_log_gamma(shape + 1.0, rng) + std::log(uniform_open(rng)) / shape;
}

double sample_gamma(double shape, double rate, Rng& rng) {
  if (!(rate > 0)) throw std::domain_error("gamma rate must be positive");
  return std::exp(sample_log_gamma(shape, rng)) / rate;
}

namespace {

// Exact rejection for intervals whose mass the incomplete gamma cannot resolve.
double truncated_gamma_rejection(double a, double r, double lo, double hi, Rng& rng) {
  const double inf = std::numeric_limits<double>::infinity();
  auto log_f = [&](double v) { return (a - 1.0) * std::log(v) - r * v; };
  // Truncated exponential with log-density slope `slope` on [lo, hi] (hi may be inf).
  auto trunc_exp = [&](double slope) {
    const double u = uniform_open(rng);
    if (slope == 0.0) return lo + u * (hi - lo);
    if (slope < 0.0) {
      const double lam = -slope;
      const double width = std::isinf(hi) ? std::numeric_limits<double>::infinity() : hi - lo;
      return lo - std::log1p(-u * -std::expm1(-lam * width)) / lam;
    }
    const double lam = slope;
    return hi + std::log1p(-u * -std::expm1(-lam * (hi - lo))) / lam;
  };

  for (int attempt = 0; attempt < 100000; ++attempt) {
    double v = 0.0;
    double log_accept = 0.0;
    if (a < 1.0) {
      // in units x = r v: envelope x^{a-1} e^{-xlo} below t, t^{a-1} e^{-x} above
      const double xlo = r * lo, xhi = r * hi;
      const double t = std::clamp(1.0, xlo, xhi);
      const double log_m1 = t > xlo ? -xlo + std::log((std::pow(t, a) - std::pow(xlo, a)) / a) : -inf;
      const double log_m2 = t < xhi ? (a - 1.0) * std::log(t) - t + std::log(-std::expm1(-(xhi - t))) : -inf;
      const double p1 = log_m1 == -inf ? 0.0 : 1.0 / (1.0 + std::exp(log_m2 - log_m1));
      if (uniform_open(rng) < p1) {
        const double la = std::pow(xlo, a), ta = std::pow(t, a);
        const double x = std::pow(la + uniform_open(rng) * (ta - la), 1.0 / a);
        log_accept = -(x - xlo);
        v = x / r;
      } else {
        // offset above t, kept apart from t so it survives when t is huge
        const double u = uniform_open(rng);
        const double e = std::isinf(xhi) ? -std::log(u) : -std::log1p(-u * -std::expm1(-(xhi - t)));
        log_accept = (a - 1.0) * std::log1p(e / t);
        v = (t == xlo ? lo : t / r) + e / r;
      }
    } else {
      const double mode = (a - 1.0) / r;
      if (lo >= mode || hi <= mode) {
        const double t = lo >= mode ? lo : hi;
        const double slope = (a - 1.0) / t - r;
        v = trunc_exp(slope);
        log_accept = log_f(v) - (log_f(t) + slope * (v - t));
      } else {
        v = lo + uniform_open(rng) * (hi - lo);
        log_accept = log_f(v) - log_f(mode);
      }
    }
    if (!(v >= lo && v <= hi) || !(std::log(uniform_open(rng)) < log_accept)) continue;
    // a draw that rounds onto an end lies within one ulp of it
    if (v == lo) v = std::nextafter(lo, hi);
    if (v == hi) v = std::nextafter(hi, lo);
    if (v > lo && v < hi) return v;
  }
  throw std::runtime_error("truncated gamma rejection sampler failed to accept (shape " + std::to_string(a) +
                           ", rate " + std::to_string(r) + ", interval [" + std::to_string(lo) + ", " +
                           std::to_string(hi) + "])");
}

}  // namespace

double sample_truncated_gamma(double shape, double rate, double lo, double hi, Rng& rng) {
  namespace bm = boost::math;
  if (!(shape > 0) || !(rate > 0)) throw std::domain_error("gamma parameters must be positive");
  if (!(lo >= 0) || !(hi > lo)) throw std::domain_error("empty truncation interval");

  const double x = rate * lo;
  const double y = rate * hi;
  const double p_hi = std::isinf(y) ? 1.0 : bm::gamma_p(shape, y);
  const bool lower_tail = p_hi < 0.5;
  double c_lo, c_hi;  // CDF (lower tail) or survival (upper tail) at the ends
  if (lower_tail) {
    c_lo = x > 0 ? bm::gamma_p(shape, x) : 0.0;
    c_hi = p_hi;
  } else {
    c_lo = x > 0 ? bm::gamma_q(shape, x) : 1.0;
    c_hi = std::isinf(y) ? 0.0 : bm::gamma_q(shape, y);
  }
  const double mass = std::abs(c_hi - c_lo);
  const double scale = std::max(std::abs(c_lo), std::abs(c_hi));
  if (!(mass > 1e-300) || mass < 1e-10 * scale) {
    return truncated_gamma_rejection(shape, rate, lo, hi, rng);
  }

  for (int attempt = 0; attempt < 100; ++attempt) {
    const double u = c_lo + uniform_open(rng) * (c_hi - c_lo);
    double t;
    try {
      t = lower_tail ? bm::gamma_p_inv(shape, u) : bm::gamma_q_inv(shape, u);
    } catch (const std::exception&) {
      continue;
    }
    const double v = t / rate;
    if (v > lo && v < hi) return v;
  }
  // Inversion keeps landing on an endpoint: the interval is narrower than the
  // inverse's resolution there.
  return truncated_gamma_rejection(shape, rate, lo, hi, rng);
}

BetaDraw sample_beta(double a, double b, Rng& rng) {
  const double la = sample_log_gamma(a, rng);
  const double lb = sample_log_gamma(b, rng);
  const double diff = lb - la;  // x = 1 / (1 + e^diff)
  const double x = diff > 0 ? std::exp(-diff) / (1.0 + std::exp(-diff)) : 1.0 / (1.0 + std::exp(diff));
  const double cx = diff > 0 ? 1.0 / (1.0 + std::exp(-diff)) : std::exp(diff) / (1.0 + std::exp(diff));
  return {x, cx};
}

double beta_log_pdf(double x, double a, double b) {
  if (!(x > 0.0 && x < 1.0)) return -std::numeric_limits<double>::infinity();
  return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - std::lgamma(a) - std::lgamma(b) +
         std::lgamma(a + b);
}

double log_sum_exp(const Eigen::VectorXd& v) {
  const double mx = v.maxCoeff();
  if (!std::isfinite(mx)) return mx;
  return mx + std::log((v.array() - mx).exp().sum());
}

Eigen::VectorXd sample_dirichlet(const Eigen::VectorXd& alpha, Rng& rng) {
  Eigen::VectorXd lg(alpha.size());
  for (Eigen::Index c = 0; c < alpha.size(); ++c) lg(c) = sample_log_gamma(alpha(c), rng);
  const double lse = log_sum_exp(lg);
  Eigen::VectorXd w = (lg.array() - lse).exp();
  return w / w.sum();
}

std::size_t sample_log_categorical(const Eigen::VectorXd& log_weights, Rng& rng) {
  const double lse = log_sum_exp(log_weights);
  if (!std::isfinite(lse)) throw std::domain_error("categorical weights are all zero");
  double u = uniform_open(rng);
  const auto n = static_cast<std::size_t>(log_weights.size());
  for (std::size_t c = 0; c < n; ++c) {
    u -= std::exp(log_weights(static_cast<Eigen::Index>(c)) - lse);
    if (u <= 0.0) return c;
  }
  // rounding: return the last category with positive weight
  for (std::size_t c = n; c-- > 0;)
    if (std::isfinite(log_weights(static_cast<Eigen::Index>(c)))) return c;
  return n - 1;
}

}  // namespace sgivens
