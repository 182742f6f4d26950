#include "sgivens/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "sgivens/explore.hpp"

namespace sgivens {

void MixtureConfig::validate() const {
  if (components < 1) throw std::domain_error("component count must be positive");
  if (!(tau > 0)) throw std::domain_error("tau must be positive");
  if (!(psi_shape > 0) || !(psi_rate > 0)) throw std::domain_error("psi prior parameters must be positive");
  if (dirichlet_alpha < 0) throw std::domain_error("Dirichlet concentration must be positive");
  if (kmeans_restarts < 1 || kmeans_iterations < 1) throw std::domain_error("k-means settings must be positive");
  kernel.validate();
}

std::vector<int> MixtureState::counts() const {
  std::vector<int> n(static_cast<std::size_t>(components()), 0);
  for (int l : labels) ++n[static_cast<std::size_t>(l)];
  return n;
}

namespace {

double squared_distance(const Matrix& y, Eigen::Index i, const Matrix& centers, Eigen::Index c) {
  return (y.row(i) - centers.row(c)).squaredNorm();
}

KMeansResult kmeans_once(const Matrix& y, int clusters, int iterations, Rng& rng) {
  const Eigen::Index n = y.rows();
  KMeansResult out;
  out.centers.resize(clusters, y.cols());
  // k-means++ seeding
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  out.centers.row(0) = y.row(first(rng));
  Vector best_d2 = Vector::Constant(n, std::numeric_limits<double>::infinity());
  for (int c = 1; c < clusters; ++c) {
    for (Eigen::Index i = 0; i < n; ++i) best_d2(i) = std::min(best_d2(i), squared_distance(y, i, out.centers, c - 1));
    const double total = best_d2.sum();
    Eigen::Index pick = first(rng);
    if (total > 0) {
      double u = uniform_open(rng) * total;
      for (Eigen::Index i = 0; i < n; ++i) {
        u -= best_d2(i);
        if (u <= 0) {
          pick = i;
          break;
        }
      }
    }
    out.centers.row(c) = y.row(pick);
  }

  out.labels.assign(static_cast<std::size_t>(n), -1);
  for (int it = 0; it < iterations; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double bd = squared_distance(y, i, out.centers, 0);
      for (int c = 1; c < clusters; ++c) {
        const double d = squared_distance(y, i, out.centers, c);
        if (d < bd) {
          bd = d;
          best = c;
        }
      }
      if (out.labels[static_cast<std::size_t>(i)] != best) {
        out.labels[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    // refill empty clusters with the nearest point from a cluster that can spare one
    std::vector<int> count(static_cast<std::size_t>(clusters), 0);
    for (int l : out.labels) ++count[static_cast<std::size_t>(l)];
    for (int c = 0; c < clusters; ++c) {
      if (count[static_cast<std::size_t>(c)] > 0) continue;
      Eigen::Index pick = -1;
      double bd = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < n; ++i) {
        const int l = out.labels[static_cast<std::size_t>(i)];
        if (count[static_cast<std::size_t>(l)] < 2) continue;
        const double d = squared_distance(y, i, out.centers, c);
        if (d < bd) {
          bd = d;
          pick = i;
        }
      }
      if (pick < 0) continue;
      --count[static_cast<std::size_t>(out.labels[static_cast<std::size_t>(pick)])];
      out.labels[static_cast<std::size_t>(pick)] = c;
      ++count[static_cast<std::size_t>(c)];
      out.reassigned = true;
      changed = true;
    }
    Matrix sums = Matrix::Zero(clusters, y.cols());
    for (Eigen::Index i = 0; i < n; ++i) sums.row(out.labels[static_cast<std::size_t>(i)]) += y.row(i);
    for (int c = 0; c < clusters; ++c)
      if (count[static_cast<std::size_t>(c)] > 0) out.centers.row(c) = sums.row(c) / count[static_cast<std::size_t>(c)];
    if (!changed) break;
  }
  out.inertia = 0;
  for (Eigen::Index i = 0; i < n; ++i) out.inertia += squared_distance(y, i, out.centers, out.labels[static_cast<std::size_t>(i)]);
  return out;
}

Matrix symmetrize(const Matrix& m) { return (m + m.transpose()) / 2; }

}  // namespace

KMeansResult kmeans(const Matrix& y, int clusters, int restarts, int iterations, Rng& rng) {
  if (clusters < 1) throw std::domain_error("cluster count must be positive");
  if (y.rows() < clusters) throw std::domain_error("fewer observations than clusters");
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  bool any_reassigned = false;
  for (int r = 0; r < restarts; ++r) {
    KMeansResult cur = kmeans_once(y, clusters, iterations, rng);
    any_reassigned = any_reassigned || cur.reassigned;
    if (cur.inertia < best.inertia) best = std::move(cur);
  }
  best.reassigned = best.reassigned || any_reassigned;
  return best;
}

SumOfSquares component_statistics(const MixtureState& state, int c, double tau) {
  Matrix s = state.mu[static_cast<std::size_t>(c)] * state.mu[static_cast<std::size_t>(c)].transpose() / tau;
  double n = 1;
  for (std::size_t i = 0; i < state.labels.size(); ++i) {
    if (state.labels[i] != c) continue;
    const Vector e = state.x.row(static_cast<Eigen::Index>(i)).transpose() - state.mu[static_cast<std::size_t>(c)];
    s.noalias() += e * e.transpose();
    n += 1;
  }
  return SumOfSquares(symmetrize(s), n);
}

MixtureState init_kmeans(const Matrix& y, const MixtureConfig& cfg, Rng& rng) {
  cfg.validate();
  const int n = static_cast<int>(y.rows());
  const int q = static_cast<int>(y.cols());
  const int C = cfg.components;
  if (n < C) throw std::domain_error("fewer observations than components");

  MixtureState st;
  if (C == 1) {
    st.labels.assign(static_cast<std::size_t>(n), 0);
  } else {
    st.labels = kmeans(y, C, cfg.kmeans_restarts, cfg.kmeans_iterations, rng).labels;
  }
  st.x = y;
  st.w = Vector::Zero(C);
  st.mu.assign(static_cast<std::size_t>(C), Vector::Zero(q));
  const auto counts = st.counts();
  for (int i = 0; i < n; ++i) st.mu[static_cast<std::size_t>(st.labels[static_cast<std::size_t>(i)])] += y.row(i).transpose();
  for (int c = 0; c < C; ++c) {
    const int nc = counts[static_cast<std::size_t>(c)];
    st.w(c) = static_cast<double>(nc) / n;
    if (nc > 0) st.mu[static_cast<std::size_t>(c)] /= nc;
  }

  const Matrix centered = center_columns(y);
  const double mean_variance = std::max(centered.squaredNorm() / std::max(1, n - 1) / q, 1e-12);
  for (int c = 0; c < C; ++c) {
    const int nc = counts[static_cast<std::size_t>(c)];
    Matrix s = Matrix::Zero(q, q);
    for (int i = 0; i < n; ++i) {
      if (st.labels[static_cast<std::size_t>(i)] != c) continue;
      const Vector e = y.row(i).transpose() - st.mu[static_cast<std::size_t>(c)];
      s += e * e.transpose();
    }
    const double neff = std::max(nc, 1);
    Eigen::LLT<Matrix> llt(s);
    if (nc <= q || llt.info() != Eigen::Success) s += 0.01 * neff * mean_variance * Matrix::Identity(q, q);
    const Model start = exploratory_fit(SumOfSquares(symmetrize(s), neff), {cfg.init_rho, 1}).model;
    st.chains.emplace_back(start, component_statistics(st, c, cfg.tau));
  }

  st.psi.resize(q);
  for (int j = 0; j < q; ++j) {
    st.psi(j) = cfg.initial_psi > 0 ? cfg.initial_psi : 1.0 / sample_gamma(cfg.psi_shape, cfg.psi_rate, rng);
  }
  return st;
}

std::vector<ComponentCache> component_caches(const MixtureState& state) {
  std::vector<ComponentCache> out;
  out.reserve(state.chains.size());
  for (const auto& ch : state.chains) {
    out.push_back({compose_eigenmatrix(ch.model), ch.model.inverse_eigenvalues(),
                   ch.model.eigenvalues().array().log().sum()});
  }
  return out;
}

void sample_labels(MixtureState& state, const std::vector<ComponentCache>& caches, Rng& rng) {
  const int C = state.components();
  const Vector log_w = state.w.array().log();
  Vector lp(C);
  for (std::size_t i = 0; i < state.labels.size(); ++i) {
    const Vector xi = state.x.row(static_cast<Eigen::Index>(i)).transpose();
    for (int c = 0; c < C; ++c) {
      const auto& cache = caches[static_cast<std::size_t>(c)];
      const Vector z = cache.rotation.transpose() * (xi - state.mu[static_cast<std::size_t>(c)]);
      lp(c) = log_w(c) - 0.5 * cache.log_det_covariance - 0.5 * cache.inverse_eigenvalues.dot(z.cwiseAbs2());
    }
    state.labels[i] = static_cast<int>(sample_log_categorical(lp, rng));
  }
}

void sample_weights(MixtureState& state, const MixtureConfig& cfg, Rng& rng) {
  const auto counts = state.counts();
  Vector alpha(state.components());
  for (int c = 0; c < state.components(); ++c) alpha(c) = cfg.alpha() + counts[static_cast<std::size_t>(c)];
  state.w = sample_dirichlet(alpha, rng);
}

void sample_means(MixtureState& state, const MixtureConfig& cfg, Rng& rng) {
  const int C = state.components();
  const auto q = state.x.cols();
  std::vector<Vector> sums(static_cast<std::size_t>(C), Vector::Zero(q));
  const auto counts = state.counts();
  for (std::size_t i = 0; i < state.labels.size(); ++i)
    sums[static_cast<std::size_t>(state.labels[i])] += state.x.row(static_cast<Eigen::Index>(i)).transpose();
  for (int c = 0; c < C; ++c) {
    const double precision_scale = counts[static_cast<std::size_t>(c)] + 1.0 / cfg.tau;
    const Matrix root = scaled_eigenmatrix(state.chains[static_cast<std::size_t>(c)].model);
    state.mu[static_cast<std::size_t>(c)] =
        sums[static_cast<std::size_t>(c)] / precision_scale + root * standard_normal_vector(q, rng) / std::sqrt(precision_scale);
  }
}

void sample_latent(const Matrix& y, MixtureState& state, const std::vector<ComponentCache>& caches, Rng& rng) {
  const int C = state.components();
  const auto q = y.cols();
  const Vector inv_psi = state.psi.cwiseInverse();
  // In t = R'(x - mu) the posterior precision is Q = R' Psi^{-1} R + diag(a). With Q = D C D,
  // D = diag(Q)^{1/2}, C has a unit diagonal and its Cholesky factor stays accurate when a
  // spans many decades.
  const auto counts = state.counts();
  std::vector<Vector> inv_scale(static_cast<std::size_t>(C));
  std::vector<Eigen::LLT<Matrix>> factor(static_cast<std::size_t>(C));
  for (int c = 0; c < C; ++c) {
    const auto k = static_cast<std::size_t>(c);
    if (counts[k] == 0) continue;
    const Matrix& r = caches[k].rotation;
    Matrix qm = r.transpose() * inv_psi.asDiagonal() * r;
    qm.diagonal() += caches[k].inverse_eigenvalues;
    inv_scale[k] = qm.diagonal().cwiseSqrt().cwiseInverse();
    const Matrix unit = inv_scale[k].asDiagonal() * qm * inv_scale[k].asDiagonal();
    factor[k].compute((unit + unit.transpose()) / 2);
    if (factor[k].info() != Eigen::Success) throw std::runtime_error("latent precision is not positive definite");
  }
  for (std::size_t i = 0; i < state.labels.size(); ++i) {
    const auto c = static_cast<std::size_t>(state.labels[i]);
    const Matrix& r = caches[c].rotation;
    const Vector e = y.row(static_cast<Eigen::Index>(i)).transpose() - state.mu[c];
    const Vector b = inv_scale[c].cwiseProduct(r.transpose() * inv_psi.cwiseProduct(e));
    const Vector u = factor[c].solve(b) + Vector(factor[c].matrixU().solve(standard_normal_vector(q, rng)));
    state.x.row(static_cast<Eigen::Index>(i)) = (state.mu[c] + r * inv_scale[c].cwiseProduct(u)).transpose();
  }
}

void sample_psi(const Matrix& y, MixtureState& state, const MixtureConfig& cfg, Rng& rng) {
  const double n = static_cast<double>(y.rows());
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    const double ss = (y.col(j) - state.x.col(j)).squaredNorm();
    state.psi(j) = 1.0 / sample_gamma(cfg.psi_shape + n / 2, cfg.psi_rate + ss / 2, rng);
  }
}

void update_component_models(MixtureState& state, const MixtureConfig& cfg, std::vector<Rng>& rngs,
                             MoveCounters& counters) {
  const int C = state.components();
  if (static_cast<int>(rngs.size()) != C) throw std::domain_error("one RNG stream per component is required");
  std::vector<MoveCounters> local(static_cast<std::size_t>(C));
  auto update = [&](int c) {
    const auto k = static_cast<std::size_t>(c);
    const SumOfSquares ss = component_statistics(state, c, cfg.tau);
    state.chains[k] = ChainState(std::move(state.chains[k].model), ss);
    mcmc_iteration(state.chains[k], ss, cfg.kernel, rngs[k], local[k]);
  };
  const int threads = std::max(1, std::min(cfg.threads, C));
  if (threads == 1) {
    for (int c = 0; c < C; ++c) update(c);
  } else {
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(C));
    for (int first = 0; first < C; first += threads) {
      std::vector<std::thread> pool;
      for (int c = first; c < std::min(C, first + threads); ++c) {
        pool.emplace_back([&, c] {
          try {
            update(c);
          } catch (...) {
            errors[static_cast<std::size_t>(c)] = std::current_exception();
          }
        });
      }
      for (auto& t : pool) t.join();
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  for (const auto& l : local) counters += l;
}

std::vector<int> hungarian_assignment(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw std::domain_error("assignment cost matrix must be square");
  const double inf = std::numeric_limits<double>::infinity();
  // potentials formulation, 1-based with a virtual column 0
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0), v(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> p(static_cast<std::size_t>(n) + 1, 0), way(static_cast<std::size_t>(n) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
    std::vector<bool> used(static_cast<std::size_t>(n) + 1, false);
    do {
      used[static_cast<std::size_t>(j0)] = true;
      const int i0 = p[static_cast<std::size_t>(j0)];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> out(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= n; ++j) out[static_cast<std::size_t>(p[static_cast<std::size_t>(j)] - 1)] = j - 1;
  return out;
}

std::vector<int> relabel_permutation(const std::vector<Vector>& mu, const std::vector<Vector>& reference,
                                     const std::vector<double>& weight) {
  const auto C = static_cast<Eigen::Index>(mu.size());
  if (static_cast<Eigen::Index>(reference.size()) != C) throw std::domain_error("reference has the wrong size");
  if (!weight.empty() && static_cast<Eigen::Index>(weight.size()) != C) throw std::domain_error("weights have the wrong size");
  Matrix cost(C, C);
  for (Eigen::Index r = 0; r < C; ++r)
    for (Eigen::Index c = 0; c < C; ++c) {
      const auto k = static_cast<std::size_t>(c);
      cost(r, c) = (weight.empty() ? 1.0 : weight[k]) * (mu[k] - reference[static_cast<std::size_t>(r)]).squaredNorm();
    }
  return hungarian_assignment(cost);
}

void apply_permutation(MixtureState& state, const std::vector<int>& perm) {
  const int C = state.components();
  if (static_cast<int>(perm.size()) != C) throw std::domain_error("permutation has the wrong size");
  std::vector<int> inverse(static_cast<std::size_t>(C), -1);
  for (int r = 0; r < C; ++r) inverse[static_cast<std::size_t>(perm[static_cast<std::size_t>(r)])] = r;
  Vector w(C);
  std::vector<Vector> mu(static_cast<std::size_t>(C));
  std::vector<ChainState> chains(static_cast<std::size_t>(C));
  for (int r = 0; r < C; ++r) {
    const auto src = static_cast<std::size_t>(perm[static_cast<std::size_t>(r)]);
    w(r) = state.w(static_cast<Eigen::Index>(src));
    mu[static_cast<std::size_t>(r)] = state.mu[src];
    chains[static_cast<std::size_t>(r)] = state.chains[src];
  }
  state.w = std::move(w);
  state.mu = std::move(mu);
  state.chains = std::move(chains);
  for (auto& l : state.labels) l = inverse[static_cast<std::size_t>(l)];
}

void mixture_iteration(const Matrix& y, MixtureState& state, const MixtureConfig& cfg, Rng& rng,
                       std::vector<Rng>& component_rngs, MoveCounters& counters) {
  const std::vector<Vector> reference = state.mu;
  sample_labels(state, component_caches(state), rng);
  sample_weights(state, cfg, rng);
  sample_means(state, cfg, rng);
  update_component_models(state, cfg, component_rngs, counters);
  if (!cfg.fix_latent) sample_latent(y, state, component_caches(state), rng);
  if (!cfg.fix_psi) sample_psi(y, state, cfg, rng);
  if (cfg.relabel && state.components() > 1) {
    // occupancy weights keep the diffuse mean of an empty component from forcing a swap
    const auto counts = state.counts();
    apply_permutation(state, relabel_permutation(state.mu, reference, std::vector<double>(counts.begin(), counts.end())));
  }
}

Matrix MixtureSamples::classification_probabilities() const {
  const double draws_count = static_cast<double>(draws.size());
  if (draws_count == 0) throw std::domain_error("no stored mixture draws");
  return label_counts / draws_count;
}

Vector MixtureSamples::mean_weights() const {
  if (draws.empty()) throw std::domain_error("no stored mixture draws");
  Vector w = Vector::Zero(components);
  for (const auto& d : draws) w += d.w;
  return w / static_cast<double>(draws.size());
}

namespace {

std::vector<Rng> component_streams(int C, Rng& master) {
  std::vector<Rng> out;
  for (int c = 0; c < C; ++c) {
    std::seed_seq seq{static_cast<std::uint32_t>(master()), static_cast<std::uint32_t>(master()),
                      static_cast<std::uint32_t>(master()), static_cast<std::uint32_t>(c)};
    out.emplace_back(seq);
  }
  return out;
}

}  // namespace

MixtureSamples run_mixture_chain(const Matrix& y, const MixtureConfig& cfg) {
  cfg.validate();
  Rng rng = make_stream(cfg.kernel.seed, 0);
  MixtureState start = cfg.initialize_from_prior ? sample_mixture_prior(static_cast<int>(y.cols()),
                                                                        static_cast<int>(y.rows()), cfg, rng)
                                                 : init_kmeans(y, cfg, rng);
  if (cfg.initialize_from_prior) start.x = y;
  return run_mixture_chain(y, cfg, std::move(start));
}

MixtureSamples run_mixture_chain(const Matrix& y, const MixtureConfig& cfg, MixtureState state) {
  cfg.validate();
  const auto& sched = cfg.kernel;
  Rng rng = make_stream(sched.seed, 1);
  std::vector<Rng> component_rngs = component_streams(cfg.components, rng);
  MixtureSamples out;
  out.components = cfg.components;
  out.label_counts = Matrix::Zero(y.rows(), cfg.components);
  out.draws.reserve(sched.kept_draws());
  for (int it = 0; it < sched.iterations; ++it) {
    mixture_iteration(y, state, cfg, rng, component_rngs, out.counters);
    if (it < sched.burn_in || (it - sched.burn_in) % sched.thin != 0) continue;
    MixtureDraw d;
    d.w = state.w;
    d.mu = state.mu;
    for (const auto& ch : state.chains) d.models.push_back(ch.model);
    d.psi = state.psi;
    out.draws.push_back(std::move(d));
    for (std::size_t i = 0; i < state.labels.size(); ++i) out.label_counts(static_cast<Eigen::Index>(i), state.labels[i]) += 1;
  }
  return out;
}

MixtureState sample_mixture_prior(int q, int n, const MixtureConfig& cfg, Rng& rng) {
  cfg.validate();
  const int C = cfg.components;
  MixtureState st;
  st.w = sample_dirichlet(Vector::Constant(C, cfg.alpha()), rng);
  for (int c = 0; c < C; ++c) {
    std::vector<double> angles(pair_count(q));
    for (auto& a : angles) a = sample_angle(cfg.kernel.angle_prior, rng);
    Model model = Model::from_angles(q, angles, sample_eigenvalues(cfg.kernel.eigen_prior, q, rng));
    st.mu.push_back(std::sqrt(cfg.tau) * scaled_eigenmatrix(model) * standard_normal_vector(q, rng));
    ChainState ch;
    ch.model = std::move(model);
    st.chains.push_back(std::move(ch));
  }
  st.psi.resize(q);
  for (int j = 0; j < q; ++j) st.psi(j) = 1.0 / sample_gamma(cfg.psi_shape, cfg.psi_rate, rng);
  st.labels.resize(static_cast<std::size_t>(n));
  const Vector log_w = st.w.array().log();
  st.x.resize(n, q);
  for (int i = 0; i < n; ++i) {
    const int c = static_cast<int>(sample_log_categorical(log_w, rng));
    st.labels[static_cast<std::size_t>(i)] = c;
    const Matrix root = scaled_eigenmatrix(st.chains[static_cast<std::size_t>(c)].model);
    st.x.row(i) = (st.mu[static_cast<std::size_t>(c)] + root * standard_normal_vector(q, rng)).transpose();
  }
  return st;
}

Matrix sample_observations(const MixtureState& state, Rng& rng) {
  Matrix y = state.x;
  for (Eigen::Index i = 0; i < y.rows(); ++i)
    for (Eigen::Index j = 0; j < y.cols(); ++j) y(i, j) += std::sqrt(state.psi(j)) * standard_normal(rng);
  return y;
}

}  // namespace sgivens
