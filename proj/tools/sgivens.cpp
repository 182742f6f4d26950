// Command-line front end: explore, fit, mixfit, simulate, prior-curves.
#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "sgivens/explore.hpp"
#include "sgivens/io.hpp"
#include "sgivens/mcmc.hpp"
#include "sgivens/mixture.hpp"
#include "sgivens/priors.hpp"
#include "sgivens/simstudy.hpp"
#include "sgivens/version.hpp"

namespace {

using nlohmann::json;
using namespace sgivens;

// Output path next to `out` with a suffix in place of its extension.
std::string sibling(const std::string& out, const std::string& suffix) {
  std::filesystem::path p(out);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

void write_manifest(const std::string& path, const std::string& command, const json& config,
                    const std::vector<std::string>& argv) {
  json m;
  m["tool"] = "sgivens";
  m["version"] = kVersion;
  m["command"] = command;
  m["argv"] = argv;
  m["config"] = config;
  write_text_file(path, m.dump(2) + "\n");
}

Matrix load_data(const std::string& path, bool center) {
  Matrix x = read_csv_file(path).values;
  return center ? center_columns(x) : x;
}

json quantiles_json(const QuantileSummary& q) { return {{"q025", q.lower}, {"q50", q.median}, {"q975", q.upper}}; }

json counters_json(const MoveCounters& c) {
  return {{"birth_proposed", c.birth_proposed}, {"birth_accepted", c.birth_accepted},
          {"death_proposed", c.death_proposed}, {"death_accepted", c.death_accepted},
          {"angle_proposed", c.angle_proposed}, {"angle_accepted", c.angle_accepted}};
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(row);
  }
  return rows;
}

json summary_json(const PosteriorSummary& s) {
  return {{"rotator_count", quantiles_json(s.rotator_count)},
          {"percent_nonzero_rotators", quantiles_json(s.percent_nonzero_rotators)},
          {"percent_zeros_R", quantiles_json(s.percent_zeros_r)},
          {"percent_zeros_K", quantiles_json(s.percent_zeros_k)}};
}

struct PriorOptions {
  double beta0 = 0.99;
  double betahalf = 0.25;
  double kappa = 0.0;
  double eta1 = 0.001;
  double eta2 = 0.001;

  void add(CLI::App* app) {
    app->add_option("--beta0", beta0, "prior probability a rotator is absent")->capture_default_str();
    app->add_option("--betahalf", betahalf, "prior mass of the pi/2 permutation angle")->capture_default_str();
    app->add_option("--kappa", kappa, "concentration of the continuous angle prior")->capture_default_str();
    app->add_option("--eta1", eta1, "inverse-eigenvalue prior shape (times 2)")->capture_default_str();
    app->add_option("--eta2", eta2, "inverse-eigenvalue prior rate (times 2)")->capture_default_str();
  }
  json to_json() const { return {{"beta0", beta0}, {"betahalf", betahalf}, {"kappa", kappa}, {"eta1", eta1}, {"eta2", eta2}}; }
};

struct ScheduleOptions {
  int iters = 15000;
  int burnin = 10000;
  int thin = 1;
  int rj = 0;

  void add(CLI::App* app) {
    app->add_option("--iters", iters, "MCMC iterations")->capture_default_str();
    app->add_option("--burnin", burnin, "iterations discarded before storing draws")->capture_default_str();
    app->add_option("--thin", thin, "store every thin-th draw after burn-in")->capture_default_str();
    app->add_option("--rj-proposals", rj, "birth/death attempts per iteration (0: max(10, z))")->capture_default_str();
  }
  json to_json() const { return {{"iters", iters}, {"burnin", burnin}, {"thin", thin}, {"rj_proposals", rj}}; }
};

McmcConfig make_mcmc(const PriorOptions& p, const ScheduleOptions& s, std::uint64_t seed) {
  McmcConfig c;
  c.iterations = s.iters;
  c.burn_in = s.burnin;
  c.thin = s.thin;
  c.rj_proposals = s.rj;
  c.angle_prior = AnglePrior(p.betahalf, p.beta0, p.kappa);
  c.eigen_prior = {p.eta1, p.eta2};
  c.seed = seed;
  c.validate();
  return c;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const int v = std::stoi(item, &used);
    if (used != item.size()) throw std::invalid_argument("bad integer list entry: " + item);
    out.push_back(v);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"Sparse Givens models for covariance and precision matrices"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  // explore
  auto* explore = app.add_subcommand("explore", "forward-selection exploratory fit");
  std::string e_data, e_out = "model.json", e_manifest;
  double e_rho = 0.5;
  int e_passes = 1;
  bool e_center = true;
  explore->add_option("--data", e_data, "CSV file, one observation per row")->required();
  explore->add_option("--rho", e_rho, "residual correlation threshold")->capture_default_str();
  explore->add_option("--max-passes", e_passes, "sweeps through the pairs")->capture_default_str();
  explore->add_option("--out", e_out, "model JSON output")->capture_default_str();
  explore->add_option("--manifest", e_manifest, "run manifest path (default: <out stem>_manifest.json)");
  explore->add_flag("--center,!--no-center", e_center, "subtract column means (default on)");

  // fit
  auto* fit = app.add_subcommand("fit", "reversible-jump MCMC for one Gaussian sample");
  std::string f_data, f_out = "posterior.json", f_manifest, f_start;
  std::uint64_t f_seed = 0;
  int f_chains = 1, f_threads = 1;
  bool f_center = true;
  PriorOptions f_prior;
  ScheduleOptions f_sched;
  fit->add_option("--data", f_data, "CSV file, one observation per row")->required();
  fit->add_option("--seed", f_seed, "random seed")->required();
  fit->add_option("--out", f_out, "posterior JSON output")->capture_default_str();
  fit->add_option("--manifest", f_manifest, "run manifest path");
  fit->add_option("--start", f_start, "starting model JSON (default: exploratory fit)");
  fit->add_option("--chains", f_chains, "independent chains")->capture_default_str();
  fit->add_option("--threads", f_threads, "worker threads")->capture_default_str();
  fit->add_flag("--center,!--no-center", f_center, "subtract column means (default on)");
  f_prior.add(fit);
  f_sched.add(fit);

  // mixfit
  auto* mixfit = app.add_subcommand("mixfit", "mixture of sparse Givens factor analyzers");
  std::string m_data, m_out = "mixture.json", m_manifest;
  std::uint64_t m_seed = 0;
  int m_components = 4, m_threads = 1;
  double m_tau = 1000, m_psi_shape = 3.1, m_psi_rate = 0.17;
  bool m_center = true;
  PriorOptions m_prior;
  ScheduleOptions m_sched;
  m_sched.iters = 200000;
  m_sched.burnin = 100000;
  mixfit->add_option("--data", m_data, "CSV file, one observation per row")->required();
  mixfit->add_option("--seed", m_seed, "random seed")->required();
  mixfit->add_option("--components", m_components, "mixture components")->capture_default_str();
  mixfit->add_option("--tau", m_tau, "prior scale of the component means")->capture_default_str();
  mixfit->add_option("--psi-shape", m_psi_shape, "inverse-gamma shape for measurement error")->capture_default_str();
  mixfit->add_option("--psi-rate", m_psi_rate, "inverse-gamma rate for measurement error")->capture_default_str();
  mixfit->add_option("--threads", m_threads, "worker threads for component updates")->capture_default_str();
  mixfit->add_option("--out", m_out, "summary JSON output")->capture_default_str();
  mixfit->add_option("--manifest", m_manifest, "run manifest path");
  mixfit->add_flag("--center,!--no-center", m_center, "subtract column means (default on)");
  m_prior.add(mixfit);
  m_sched.add(mixfit);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "synthetic KL study against a plug-in estimate");
  std::string s_dims = "10,20,30", s_out = "study.csv", s_manifest;
  std::uint64_t s_seed = 0;
  int s_reps = 10, s_n = 150, s_threads = 1;
  bool s_first_row = false;
  double s_start_rho = 0.1;
  int s_start_passes = 5;
  ScheduleOptions s_sched;
  simulate->add_option("--dims", s_dims, "comma-separated dimensions")->capture_default_str();
  simulate->add_option("--reps", s_reps, "replicates per dimension")->capture_default_str();
  simulate->add_option("--n", s_n, "sample size")->capture_default_str();
  simulate->add_option("--seed", s_seed, "random seed")->required();
  simulate->add_option("--threads", s_threads, "worker threads")->capture_default_str();
  simulate->add_option("--out", s_out, "per-draw CSV output")->capture_default_str();
  simulate->add_option("--manifest", s_manifest, "run manifest path");
  simulate->add_flag("--include-first-row", s_first_row, "draw first-row off-diagonals of U as well");
  simulate->add_option("--start-rho", s_start_rho, "exploratory threshold for the chain start")->capture_default_str();
  simulate->add_option("--start-passes", s_start_passes, "exploratory passes for the chain start")->capture_default_str();
  s_sched.add(simulate);

  // prior-curves
  auto* curves = app.add_subcommand("prior-curves", "prior median sparsity of R and K against z");
  int c_q = 20, c_nsim = 10000, c_points = 20;
  std::string c_zs, c_out = "curves.csv", c_manifest;
  std::uint64_t c_seed = 0;
  curves->add_option("--q", c_q, "dimension")->capture_default_str();
  curves->add_option("--nsim", c_nsim, "simulations per z")->capture_default_str();
  curves->add_option("--zs", c_zs, "comma-separated rotator counts (default: evenly spaced)");
  curves->add_option("--points", c_points, "number of evenly spaced z values when --zs is absent")->capture_default_str();
  curves->add_option("--seed", c_seed, "random seed")->capture_default_str();
  curves->add_option("--out", c_out, "CSV output")->capture_default_str();
  curves->add_option("--manifest", c_manifest, "run manifest path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const CLI::App* sub = nullptr;
    for (const auto* s : app.get_subcommands()) sub = s;
    std::cerr << (sub ? sub->help() : app.help());
    return 2;
  }

  try {
    if (*explore) {
      const Matrix x = load_data(e_data, e_center);
      const ExploreResult res = exploratory_fit(sum_of_squares(x), {e_rho, e_passes});
      if (res.underdetermined) std::cerr << "warning: n <= q, the sample covariance is ill-determined\n";
      write_text_file(e_out, model_to_json(res.model).dump(2) + "\n");
      const Matrix v = build_covariance(res.model);
      const Vector sd = v.diagonal().cwiseSqrt().cwiseInverse();
      write_matrix_csv_file(sibling(e_out, "_correlation.csv"), sd.asDiagonal() * v * sd.asDiagonal());
      write_matrix_csv_file(sibling(e_out, "_loadings.csv"), scaled_eigenmatrix(res.model));
      const json cfg = {{"data", e_data}, {"rho", e_rho}, {"max_passes", e_passes}, {"center", e_center}, {"out", e_out}};
      write_manifest(e_manifest.empty() ? sibling(e_out, "_manifest.json") : e_manifest, "explore", cfg, args);
      std::cout << "rotators: " << res.model.rotator_count() << " (added " << res.added_count << ")\n";
      return 0;
    }

    if (*fit) {
      const Matrix x = load_data(f_data, f_center);
      const SumOfSquares ss = sum_of_squares(x);
      const McmcConfig mc = make_mcmc(f_prior, f_sched, f_seed);
      std::optional<Model> start;
      if (!f_start.empty()) start = model_from_json(json::parse(read_text_file(f_start)));
      const auto chains = run_chains(ss, mc, f_chains, f_threads, start);
      std::vector<Model> all;
      json out;
      out["chains"] = json::array();
      for (const auto& ch : chains) {
        all.insert(all.end(), ch.draws.begin(), ch.draws.end());
        out["chains"].push_back({{"counters", counters_json(ch.counters)}, {"rotator_trace", ch.rotator_trace}});
      }
      const PosteriorSummary sum = summarize(all);
      out["q"] = ss.dim();
      out["n"] = ss.n;
      out["summary"] = summary_json(sum);
      out["edge_probability"] = matrix_json(sum.edge_probability);
      json draws = json::array();
      for (const Model& m : all) draws.push_back(model_to_json(m));
      out["draws"] = std::move(draws);
      write_text_file(f_out, out.dump() + "\n");
      write_matrix_csv_file(sibling(f_out, "_edge_probability.csv"), sum.edge_probability);
      write_matrix_csv_file(sibling(f_out, "_loadings_mean.csv"), sum.mean_scaled_eigenmatrix);
      json cfg = {{"data", f_data}, {"seed", f_seed}, {"center", f_center}, {"chains", f_chains},
                  {"threads", f_threads}, {"start", f_start}, {"out", f_out}, {"prior", f_prior.to_json()},
                  {"schedule", f_sched.to_json()}, {"p_birth", mc.p_birth}, {"p_death", mc.p_death}};
      write_manifest(f_manifest.empty() ? sibling(f_out, "_manifest.json") : f_manifest, "fit", cfg, args);
      std::cout << "draws: " << all.size() << ", median rotators: " << sum.rotator_count.median << "\n";
      return 0;
    }

    if (*mixfit) {
      const Matrix y = load_data(m_data, m_center);
      MixtureConfig cfg;
      cfg.components = m_components;
      cfg.tau = m_tau;
      cfg.psi_shape = m_psi_shape;
      cfg.psi_rate = m_psi_rate;
      cfg.threads = m_threads;
      cfg.kernel = make_mcmc(m_prior, m_sched, m_seed);
      const MixtureSamples res = run_mixture_chain(y, cfg);
      json out;
      out["components"] = m_components;
      const Vector weights = res.mean_weights();
      out["mean_weights"] = std::vector<double>(weights.data(), weights.data() + weights.size());
      out["counters"] = counters_json(res.counters);
      json comps = json::array();
      for (int c = 0; c < m_components; ++c) {
        std::vector<Model> models;
        Vector mean_mu = Vector::Zero(y.cols());
        for (const auto& d : res.draws) {
          models.push_back(d.models[static_cast<std::size_t>(c)]);
          mean_mu += d.mu[static_cast<std::size_t>(c)];
        }
        mean_mu /= static_cast<double>(res.draws.size());
        const PosteriorSummary sum = summarize(models);
        const std::string tag = "_component" + std::to_string(c + 1);
        write_matrix_csv_file(sibling(m_out, tag + "_edge_probability.csv"), sum.edge_probability);
        write_matrix_csv_file(sibling(m_out, tag + "_loadings_mean.csv"), sum.mean_scaled_eigenmatrix);
        comps.push_back({{"mean", std::vector<double>(mean_mu.data(), mean_mu.data() + mean_mu.size())},
                         {"summary", summary_json(sum)}});
      }
      out["component_summaries"] = std::move(comps);
      write_text_file(m_out, out.dump(2) + "\n");
      write_matrix_csv_file(sibling(m_out, "_classification.csv"), res.classification_probabilities());
      json mcfg = {{"data", m_data}, {"seed", m_seed}, {"center", m_center}, {"components", m_components},
                   {"tau", m_tau}, {"psi_shape", m_psi_shape}, {"psi_rate", m_psi_rate},
                   {"dirichlet_alpha", cfg.alpha()}, {"threads", m_threads}, {"out", m_out},
                   {"prior", m_prior.to_json()}, {"schedule", m_sched.to_json()}};
      write_manifest(m_manifest.empty() ? sibling(m_out, "_manifest.json") : m_manifest, "mixfit", mcfg, args);
      return 0;
    }

    if (*simulate) {
      StudyConfig cfg;
      cfg.dims = parse_int_list(s_dims);
      cfg.reps = s_reps;
      cfg.n = s_n;
      cfg.iterations = s_sched.iters;
      cfg.burn_in = s_sched.burnin;
      cfg.thin = s_sched.thin;
      cfg.seed = s_seed;
      cfg.threads = s_threads;
      cfg.precision.include_first_row = s_first_row;
      cfg.start_rho = s_start_rho;
      cfg.start_passes = s_start_passes;
      const StudyResult res = run_study(cfg);
      {
        std::ofstream os(s_out);
        if (!os) throw std::runtime_error("cannot write " + s_out);
        os << std::setprecision(17) << "p,rep,draw_index,kl\n";
        for (const auto& r : res.replicates)
          for (std::size_t k = 0; k < r.draw_kl.size(); ++k) os << r.p << ',' << r.rep << ',' << k << ',' << r.draw_kl[k] << '\n';
      }
      {
        std::ofstream os(sibling(s_out, "_summary.csv"));
        os << std::setprecision(17)
           << "p,log_kl_p10,log_kl_p50,log_kl_p90,plugin_log_kl_median,replicates_beating_plugin,replicates\n";
        for (const auto& r : res.summary)
          os << r.p << ',' << r.log_kl_p10 << ',' << r.log_kl_p50 << ',' << r.log_kl_p90 << ','
             << r.plugin_log_kl_median << ',' << r.replicates_beating_plugin << ',' << r.replicates << '\n';
      }
      {
        std::ofstream os(sibling(s_out, "_replicates.csv"));
        os << std::setprecision(17) << "p,rep,median_kl,plugin_kl\n";
        for (const auto& r : res.replicates) os << r.p << ',' << r.rep << ',' << r.median_kl << ',' << r.plugin_kl << '\n';
      }
      json cfgj = {{"dims", cfg.dims}, {"reps", s_reps}, {"n", s_n}, {"seed", s_seed}, {"threads", s_threads},
                   {"include_first_row", s_first_row},
                   {"start_rho", s_start_rho}, {"start_passes", s_start_passes}, {"schedule", s_sched.to_json()}, {"out", s_out},
                   {"beta_half", cfg.beta_half}, {"kappa", cfg.kappa},
                   {"eta1", cfg.eigen_prior.eta1}, {"eta2", cfg.eigen_prior.eta2}};
      write_manifest(s_manifest.empty() ? sibling(s_out, "_manifest.json") : s_manifest, "simulate", cfgj, args);
      return 0;
    }

    if (*curves) {
      const int m = static_cast<int>(pair_count(c_q));
      std::vector<int> zs;
      if (!c_zs.empty()) {
        zs = parse_int_list(c_zs);
      } else {
        for (int k = 1; k <= c_points; ++k) zs.push_back(std::max(1, (m * k) / (c_points + 1)));
        zs.erase(std::unique(zs.begin(), zs.end()), zs.end());
      }
      Rng rng = make_stream(c_seed, 0);
      const auto pts = prior_sparsity_curve(c_q, zs, c_nsim, rng);
      std::ofstream os(c_out);
      if (!os) throw std::runtime_error("cannot write " + c_out);
      os << std::setprecision(17) << "q,z,median_R_sparsity,median_K_sparsity\n";
      for (const auto& p : pts) os << c_q << ',' << p.z << ',' << p.median_r << ',' << p.median_k << '\n';
      json cfgj = {{"q", c_q}, {"nsim", c_nsim}, {"zs", zs}, {"seed", c_seed}, {"out", c_out},
                   {"eta1", 1.0}, {"eta2", 1.0}};
      write_manifest(c_manifest.empty() ? sibling(c_out, "_manifest.json") : c_manifest, "prior-curves", cfgj, args);
      return 0;
    }
  } catch (const CsvError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
