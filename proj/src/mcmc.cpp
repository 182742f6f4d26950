#include "sgivens/mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "sgivens/explore.hpp"
#include "sgivens/stats.hpp"

namespace sgivens {

namespace {

bool accept(double log_ratio, Rng& rng) {
  if (log_ratio >= 0) return true;
  if (std::isnan(log_ratio)) return false;
  return std::log(uniform_open(rng)) < log_ratio;
}

double log_prior_zero(const AnglePrior& prior) { return angle_log_prior(0.0, prior); }

// Birth from a model with z rotators (out of m) to one holding `angle`.
double birth_ratio(const AngleProfile& f, double angle, const ProposalParams& params, double z, double m,
                   const McmcConfig& cfg) {
  const auto& prior = cfg.angle_prior;
  return f.value(angle) - f.value(0.0) + angle_log_prior(angle, prior) - log_prior_zero(prior) -
         mixed_proposal_logpdf(angle, params, prior.beta_half()) + std::log((m - z) * cfg.p_death) -
         std::log((z + 1) * cfg.p_birth);
}

}  // namespace

void McmcConfig::validate() const {
  if (iterations < 1) throw std::domain_error("iterations must be positive");
  if (burn_in < 0 || burn_in >= iterations) throw std::domain_error("burn-in must lie in [0, iterations)");
  if (thin < 1) throw std::domain_error("thin must be positive");
  if (!(p_birth >= 0 && p_death >= 0 && p_birth + p_death <= 1 + 1e-12)) {
    throw std::domain_error("birth/death probabilities must be nonnegative and sum to at most 1");
  }
  if (rj_proposals < 0) throw std::domain_error("rj_proposals must be nonnegative");
  sgivens::validate(eigen_prior);
}

std::size_t McmcConfig::kept_draws() const {
  return static_cast<std::size_t>((iterations - burn_in + thin - 1) / thin);
}

MoveCounters& MoveCounters::operator+=(const MoveCounters& o) {
  birth_proposed += o.birth_proposed;
  birth_accepted += o.birth_accepted;
  death_proposed += o.death_proposed;
  death_accepted += o.death_accepted;
  angle_proposed += o.angle_proposed;
  angle_accepted += o.angle_accepted;
  return *this;
}

ChainState::ChainState(Model m, const SumOfSquares& ss) : model(std::move(m)) {
  log_likelihood = full_log_likelihood(model, ss);
}

double ChainState::cache_error(const SumOfSquares& ss) const {
  return std::abs(log_likelihood - full_log_likelihood(model, ss));
}

double birth_log_ratio(const Model& model, const SumOfSquares& ss, RotatorPair pair, double angle,
                       const ProposalParams& params, const McmcConfig& cfg) {
  const AngleProfile f = angle_profile(insertion_terms(model, ss.s, pair));
  return birth_ratio(f, angle, params, static_cast<double>(model.rotator_count()),
                     static_cast<double>(pair_count(model.dim())), cfg);
}

namespace {

// Position cache for the current model, rebuilt lazily after accepted moves.
class TermSource {
 public:
  TermSource(const ChainState& state, const SumOfSquares& ss) : state_(state), ss_(ss) {}

  ConditionalTerms rotator(std::size_t k) { return cache().rotator_terms(k); }
  ConditionalTerms insertion(RotatorPair pair) { return cache().insertion_terms(pair); }
  void invalidate() { cache_.reset(); }

 private:
  const PositionCache& cache() {
    if (!cache_) cache_.emplace(state_.model, ss_.s);
    return *cache_;
  }

  const ChainState& state_;
  const SumOfSquares& ss_;
  std::optional<PositionCache> cache_;
};

bool rj_step_impl(ChainState& state, const McmcConfig& cfg, Rng& rng,
                  MoveCounters& counters, TermSource& terms) {
  Model& model = state.model;
  const int q = model.dim();
  const std::size_t m = pair_count(q);
  const std::size_t z = model.rotator_count();
  const auto& prior = cfg.angle_prior;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double move = u(rng);

  if (move < cfg.p_birth) {
    ++counters.birth_proposed;
    if (z == m) return false;
    // uniform choice among absent pairs
    std::uniform_int_distribution<std::size_t> pick(0, m - z - 1);
    std::size_t target = pick(rng);
    RotatorPair pair{};
    for (std::size_t k = 0, present = 0; k < m; ++k) {
      const RotatorPair p = pair_at(k, q);
      if (present < z && model.rotator(present).pair == p) {
        ++present;
        continue;
      }
      if (target == 0) {
        pair = p;
        break;
      }
      --target;
    }
    const AngleProfile f = angle_profile(terms.insertion(pair));
    const ProposalParams params = fit_proposal(f, prior);
    const double angle = mixed_proposal_sample(params, prior.beta_half(), rng);
    if (!accept(birth_ratio(f, angle, params, static_cast<double>(z), static_cast<double>(m), cfg), rng)) {
      return false;
    }
    model.insert(pair, angle);
    terms.invalidate();
    state.log_likelihood += f.value(angle) - f.value(0.0);
    ++counters.birth_accepted;
    return true;
  }

  if (move < cfg.p_birth + cfg.p_death) {
    ++counters.death_proposed;
    if (z == 0) return false;
    std::uniform_int_distribution<std::size_t> pick(0, z - 1);
    const std::size_t k = pick(rng);
    const Rotator<double> rot = model.rotator(k);
    const AngleProfile f = angle_profile(terms.rotator(k));
    const ProposalParams params = fit_proposal(f, prior);
    // reverse birth from the model with z - 1 rotators
    const double log_birth =
        birth_ratio(f, rot.angle, params, static_cast<double>(z - 1), static_cast<double>(m), cfg);
    if (!accept(-log_birth, rng)) return false;
    model.erase(k);
    terms.invalidate();
    state.log_likelihood += f.value(0.0) - f.value(rot.angle);
    ++counters.death_accepted;
    return true;
  }
  return false;
}

}  // namespace

bool rj_step(ChainState& state, const SumOfSquares& ss, const McmcConfig& cfg, Rng& rng, MoveCounters& counters) {
  TermSource terms(state, ss);
  return rj_step_impl(state, cfg, rng, counters, terms);
}

Matrix angle_sweep(ChainState& state, const SumOfSquares& ss, const McmcConfig& cfg, Rng& rng,
                   MoveCounters& counters) {
  Model& model = state.model;
  const auto& prior = cfg.angle_prior;
  DecorrelationState dec(model, ss.s);
  for (std::size_t k = 0; k < model.rotator_count(); ++k) {
    const Rotator<double> rot = model.rotator(k);
    const AngleProfile f = angle_profile(dec.conditional_terms(rot.pair));
    const ProposalParams params = fit_proposal(f, prior);
    const double proposal = mixed_proposal_sample(params, prior.beta_half(), rng);
    ++counters.angle_proposed;
    if (proposal != rot.angle) {
      const double log_ratio = f.value(proposal) - f.value(rot.angle) + angle_log_prior(proposal, prior) -
                               angle_log_prior(rot.angle, prior) +
                               mixed_proposal_logpdf(rot.angle, params, prior.beta_half()) -
                               mixed_proposal_logpdf(proposal, params, prior.beta_half());
      if (accept(log_ratio, rng)) {
        model.set_angle(k, proposal);
        state.log_likelihood += f.value(proposal) - f.value(rot.angle);
        ++counters.angle_accepted;
      }
    } else {
      ++counters.angle_accepted;
    }
    dec.advance(model);
  }
  return dec.s_star();
}

void eigenvalue_gibbs(Model& model, const Matrix& b, double n, const EigenPrior& prior, Rng& rng) {
  const int q = model.dim();
  if (b.rows() != q || b.cols() != q) throw std::domain_error("rotated sum-of-squares has the wrong dimension");
  const double shape = (prior.eta1 + n) / 2;
  for (int attempt = 0; attempt < 100; ++attempt) {
    Vector a = model.inverse_eigenvalues();  // increasing
    for (int j = 0; j < q; ++j) {
      const double lo = std::max(j > 0 ? a(j - 1) : 0.0, kMinInverseEigenvalue);
      const double hi = std::min(j + 1 < q ? a(j + 1) : std::numeric_limits<double>::infinity(),
                                 kMaxInverseEigenvalue);
      if (!(hi > lo)) throw std::runtime_error("eigenvalue truncation interval is empty");
      const double rate = (prior.eta2 + std::max(b(j, j), 0.0)) / 2;
      a(j) = sample_truncated_gamma(shape, rate, lo, hi, rng);
    }
    Vector d = a.cwiseInverse();
    bool ordered = true;
    for (int k = 1; k < q; ++k) ordered = ordered && d(k - 1) > d(k);
    if (ordered && (d.array() > 0).all() && d.allFinite()) {
      model.set_eigenvalues(std::move(d));
      return;
    }
  }
  throw std::runtime_error("eigenvalue update failed to produce an ordered draw");
}

double log_likelihood_from_rotated(const Model& model, const Matrix& b, double n) {
  const Vector a = model.inverse_eigenvalues();
  return 0.5 * n * a.array().log().sum() - 0.5 * a.dot(b.diagonal());
}

void mcmc_iteration(ChainState& state, const SumOfSquares& ss, const McmcConfig& cfg, Rng& rng,
                    MoveCounters& counters) {
  const int proposals =
      cfg.rj_proposals > 0 ? cfg.rj_proposals : std::max<int>(10, static_cast<int>(state.model.rotator_count()));
  TermSource terms(state, ss);
  for (int r = 0; r < proposals; ++r) rj_step_impl(state, cfg, rng, counters, terms);
  const Matrix b = angle_sweep(state, ss, cfg, rng, counters);
  if (cfg.update_eigenvalues) eigenvalue_gibbs(state.model, b, ss.n, cfg.eigen_prior, rng);
  state.log_likelihood = log_likelihood_from_rotated(state.model, b, ss.n);
}

Model default_start(const SumOfSquares& ss, const McmcConfig& cfg, Rng& rng) {
  if (ss.n > 0) {
    try {
      return exploratory_fit(ss, {0.5, 1}).model;
    } catch (const std::domain_error&) {
      // not positive definite: fall through to a prior start
    }
  }
  return Model::diagonal(sample_eigenvalues(cfg.eigen_prior, ss.dim(), rng));
}

PosteriorSamples run_chain(const SumOfSquares& ss, const McmcConfig& cfg, const std::optional<Model>& start,
                           std::uint64_t stream) {
  cfg.validate();
  Rng rng = make_stream(cfg.seed, stream);
  Model initial = start ? *start : default_start(ss, cfg, rng);
  if (initial.dim() != ss.dim()) throw std::domain_error("starting model and data dimensions differ");
  ChainState state(std::move(initial), ss);

  PosteriorSamples out;
  out.q = ss.dim();
  out.seed = cfg.seed;
  out.draws.reserve(cfg.kept_draws());
  out.rotator_trace.reserve(static_cast<std::size_t>(cfg.iterations));
  out.log_likelihood.reserve(static_cast<std::size_t>(cfg.iterations));
  for (int it = 0; it < cfg.iterations; ++it) {
    mcmc_iteration(state, ss, cfg, rng, out.counters);
    out.rotator_trace.push_back(static_cast<int>(state.model.rotator_count()));
    out.log_likelihood.push_back(state.log_likelihood);
    if (it >= cfg.burn_in && (it - cfg.burn_in) % cfg.thin == 0) out.draws.push_back(state.model);
  }
  return out;
}

std::vector<PosteriorSamples> run_chains(const SumOfSquares& ss, const McmcConfig& cfg, int chains, int threads,
                                         const std::optional<Model>& start) {
  if (chains < 1) throw std::domain_error("chain count must be positive");
  threads = std::max(1, std::min(threads, chains));
  std::vector<PosteriorSamples> out(static_cast<std::size_t>(chains));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(chains));
  for (int first = 0; first < chains; first += threads) {
    std::vector<std::thread> pool;
    for (int c = first; c < std::min(chains, first + threads); ++c) {
      pool.emplace_back([&, c] {
        try {
          out[static_cast<std::size_t>(c)] = run_chain(ss, cfg, start, static_cast<std::uint64_t>(c));
        } catch (...) {
          errors[static_cast<std::size_t>(c)] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

QuantileSummary summarize_quantiles(const std::vector<double>& values) {
  return {quantile(values, 0.025), quantile(values, 0.5), quantile(values, 0.975)};
}

PosteriorSummary summarize(const std::vector<Model>& draws) {
  if (draws.empty()) throw std::domain_error("no posterior draws to summarize");
  const int q = draws.front().dim();
  const double m = static_cast<double>(pair_count(q));
  PosteriorSummary s;
  s.edge_probability = Matrix::Zero(q, q);
  s.mean_scaled_eigenmatrix = Matrix::Zero(q, q);
  s.mean_covariance = Matrix::Zero(q, q);
  s.mean_precision = Matrix::Zero(q, q);
  std::vector<double> z, pz, zr, zk;
  for (const Model& model : draws) {
    const Matrix r = compose_eigenmatrix(model);
    const Matrix k = build_precision(model);
    const UndirectedGraph g = graph_from_precision(k, 0.0);
    for (const auto e : g.edges()) {
      s.edge_probability(e.i - 1, e.j - 1) += 1;
      s.edge_probability(e.j - 1, e.i - 1) += 1;
    }
    s.mean_scaled_eigenmatrix += r * model.eigenvalues().cwiseSqrt().asDiagonal();
    s.mean_covariance += build_covariance(model);
    s.mean_precision += k;
    z.push_back(static_cast<double>(model.rotator_count()));
    pz.push_back(m > 0 ? 100.0 * static_cast<double>(model.rotator_count()) / m : 0.0);
    zr.push_back(100.0 * offdiagonal_zero_fraction(r));
    zk.push_back(100.0 * upper_zero_fraction(k));
  }
  const double count = static_cast<double>(draws.size());
  s.edge_probability /= count;
  s.edge_probability.diagonal().setOnes();
  s.mean_scaled_eigenmatrix /= count;
  s.mean_covariance /= count;
  s.mean_precision /= count;
  s.rotator_count = summarize_quantiles(z);
  s.percent_nonzero_rotators = summarize_quantiles(pz);
  s.percent_zeros_r = summarize_quantiles(zr);
  s.percent_zeros_k = summarize_quantiles(zk);
  return s;
}

}  // namespace sgivens
