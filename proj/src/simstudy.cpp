#include "sgivens/simstudy.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "sgivens/explore.hpp"
#include "sgivens/stats.hpp"

namespace sgivens {

Matrix draw_precision_factor(int p, Rng& rng, bool include_first_row) {
  if (p < 2) throw std::domain_error("dimension must be at least 2");
  Matrix u = Matrix::Zero(p, p);
  for (int i = 1; i <= p; ++i) {
    std::chi_squared_distribution<double> chi(static_cast<double>(p - i + 1));
    u(i - 1, i - 1) = std::sqrt(chi(rng));
  }
  const int first_row = include_first_row ? 1 : 2;
  for (int i = first_row; i <= p - 1; ++i) {
    for (int j = i + 1; j <= p; ++j) {
      const double v = standard_normal(rng);
      u(i - 1, j - 1) = std::abs(v) > 1.0 ? v : 0.0;
    }
  }
  return u;
}

Matrix generate_true_precision(int p, Rng& rng, const PrecisionOptions& options) {
  for (;;) {
    const Matrix u = draw_precision_factor(p, rng, options.include_first_row);
    if (!(u.diagonal().array() > 0).all()) continue;
    Matrix k = u.transpose() * u;
    k = (k + k.transpose()) / 2;
    Eigen::SelfAdjointEigenSolver<Matrix> es(k, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
    if (lo > 0 && hi / lo <= options.max_condition) return k;
  }
}

Matrix sample_gaussian(const Matrix& precision, int n, Rng& rng) {
  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success) throw std::domain_error("precision matrix is not positive definite");
  const auto p = precision.rows();
  // K = L L' so x = L'^{-1} z has covariance K^{-1}
  Matrix z(p, n);
  for (int i = 0; i < n; ++i) z.col(i) = standard_normal_vector(p, rng);
  const Matrix x = llt.matrixU().solve(z);
  return x.transpose();
}

double gaussian_kl(const Matrix& k_true, const Matrix& k_model) {
  if (k_true.rows() != k_model.rows() || k_true.rows() != k_true.cols() || k_model.rows() != k_model.cols()) {
    throw std::domain_error("dimension mismatch");
  }
  Eigen::LLT<Matrix> lt(k_true), lm(k_model);
  if (lt.info() != Eigen::Success || lm.info() != Eigen::Success) {
    throw std::domain_error("KL divergence needs positive definite matrices");
  }
  if (k_true == k_model) return 0.0;
  const auto p = static_cast<double>(k_true.rows());
  const double logdet_t = 2 * lt.matrixLLT().diagonal().array().log().sum();
  const double logdet_m = 2 * lm.matrixLLT().diagonal().array().log().sum();
  const double tr = (lt.solve(k_model)).trace();
  return std::max(0.0, 0.5 * (tr - p + logdet_t - logdet_m));
}

AnglePrior study_angle_prior(int p, double beta_half, double kappa) {
  if (p < 3) throw std::domain_error("study prior needs p >= 3");
  return AnglePrior(beta_half, 1.0 - 2.0 / (p - 1), kappa);
}

ReplicateResult run_replicate(int p, int rep, const StudyConfig& cfg) {
  const auto stream = static_cast<std::uint64_t>(p) * 100000 + static_cast<std::uint64_t>(rep);
  Rng rng = make_stream(cfg.seed, stream);
  const Matrix k_true = generate_true_precision(p, rng, cfg.precision);
  const Matrix x = sample_gaussian(k_true, cfg.n, rng);
  const SumOfSquares ss = sum_of_squares(x);  // zero mean is known

  McmcConfig mc;
  mc.iterations = cfg.iterations;
  mc.burn_in = cfg.burn_in;
  mc.thin = cfg.thin;
  mc.angle_prior = study_angle_prior(p, cfg.beta_half, cfg.kappa);
  mc.eigen_prior = cfg.eigen_prior;
  mc.seed = cfg.seed;
  const Model start = exploratory_fit(ss, {cfg.start_rho, cfg.start_passes}).model;
  const PosteriorSamples samples = run_chain(ss, mc, start, stream + 1);

  ReplicateResult r;
  r.p = p;
  r.rep = rep;
  for (const Model& m : samples.draws) r.draw_kl.push_back(gaussian_kl(k_true, build_precision(m)));
  r.median_kl = median(r.draw_kl);
  if (cfg.n > p) r.plugin_kl = gaussian_kl(k_true, ss.n * ss.s.inverse());
  return r;
}

StudyResult run_study(const StudyConfig& cfg) {
  StudyResult out;
  std::vector<std::pair<int, int>> jobs;
  for (int p : cfg.dims)
    for (int rep = 0; rep < cfg.reps; ++rep) jobs.emplace_back(p, rep);
  out.replicates.resize(jobs.size());
  const int threads = std::max(1, cfg.threads);
  std::vector<std::exception_ptr> errors(jobs.size());
  for (std::size_t first = 0; first < jobs.size(); first += static_cast<std::size_t>(threads)) {
    std::vector<std::thread> pool;
    for (std::size_t j = first; j < std::min(jobs.size(), first + static_cast<std::size_t>(threads)); ++j) {
      pool.emplace_back([&, j] {
        try {
          out.replicates[j] = run_replicate(jobs[j].first, jobs[j].second, cfg);
        } catch (...) {
          errors[j] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (int p : cfg.dims) {
    StudyRow row;
    row.p = p;
    std::vector<double> pooled, plugin;
    for (const auto& r : out.replicates) {
      if (r.p != p) continue;
      ++row.replicates;
      for (double kl : r.draw_kl) pooled.push_back(std::log(std::max(kl, 1e-300)));
      plugin.push_back(std::log(std::max(r.plugin_kl, 1e-300)));
      if (r.median_kl < r.plugin_kl) ++row.replicates_beating_plugin;
    }
    if (pooled.empty()) continue;
    row.log_kl_p10 = quantile(pooled, 0.1);
    row.log_kl_p50 = quantile(pooled, 0.5);
    row.log_kl_p90 = quantile(pooled, 0.9);
    row.plugin_log_kl_median = median(plugin);
    out.summary.push_back(row);
  }
  return out;
}

}  // namespace sgivens
