#include <doctest.h>

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "sgivens/io.hpp"
#include "sgivens/random.hpp"

using namespace sgivens;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string err;
};

// Runs the CLI with stdout discarded and stderr captured.
Run run(const std::string& args) {
  const fs::path err = fs::temp_directory_path() / "sgivens_cli_stderr.txt";
  const std::string cmd = std::string(SGIVENS_CLI_PATH) + " " + args + " > /dev/null 2> " + err.string();
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = read_text_file(err.string());
  return r;
}

fs::path workdir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("sgivens_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Correlated data with a column offset, so centering matters.
std::string write_data(const fs::path& dir, int n = 80, int q = 4) {
  Rng rng = make_stream(131, 0);
  Matrix x(n, q);
  for (int i = 0; i < n; ++i) {
    const double common = standard_normal(rng);
    for (int j = 0; j < q; ++j) x(i, j) = 5.0 + j + (j < 2 ? 1.5 * common : 0.0) + standard_normal(rng);
  }
  const std::string path = (dir / "data.csv").string();
  std::vector<std::string> header;
  for (int j = 0; j < q; ++j) header.push_back("v" + std::to_string(j + 1));
  write_matrix_csv_file(path, x, header);
  return path;
}

json read_json(const fs::path& p) { return json::parse(read_text_file(p.string())); }

}  // namespace

TEST_CASE("explore writes the model, the correlation and the loadings") {
  const fs::path dir = workdir("explore");
  const std::string data = write_data(dir);
  const Run r = run("explore --data " + data + " --rho 0.5 --out " + (dir / "m.json").string());
  REQUIRE(r.code == 0);
  const Model model = model_from_json(read_json(dir / "m.json"));
  CHECK(model.dim() == 4);
  CHECK(model.rotator_count() >= 1);
  const Matrix corr = read_csv_file((dir / "m_correlation.csv").string()).values;
  REQUIRE(corr.rows() == 4);
  for (int i = 0; i < 4; ++i) CHECK(corr(i, i) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(corr(0, 1) > 0.5);
  const Matrix load = read_csv_file((dir / "m_loadings.csv").string()).values;
  const Matrix v = build_covariance(model);
  CHECK((load * load.transpose() - v).cwiseAbs().maxCoeff() < 1e-10 * v.cwiseAbs().maxCoeff());
  const json manifest = read_json(dir / "m_manifest.json");
  CHECK(manifest.at("command") == "explore");
  CHECK(manifest.at("config").at("rho") == 0.5);
  CHECK(manifest.at("config").at("center") == true);
  CHECK(manifest.contains("version"));

  // centering is on by default, so turning it off changes the fit of offset columns
  const Run nc = run("explore --data " + data + " --rho 0.5 --no-center --out " + (dir / "raw.json").string());
  REQUIRE(nc.code == 0);
  CHECK(read_json(dir / "raw.json") != read_json(dir / "m.json"));
}

TEST_CASE("usage errors exit 2") {
  const fs::path dir = workdir("usage");
  const std::string data = write_data(dir);
  const Run missing = run("explore --rho 0.5");
  CHECK(missing.code == 2);
  CHECK(missing.err.find("--data") != std::string::npos);
  CHECK(missing.err.find("Usage") != std::string::npos);
  CHECK(run("explore --data " + data + " --no-such-flag 3").code == 2);
  CHECK(run("").code == 2);
  CHECK(run("frobnicate").code == 2);
  // --seed is mandatory where draws are random
  CHECK(run("fit --data " + data).code == 2);
  CHECK(run("mixfit --data " + data).code == 2);
  CHECK(run("simulate --dims 4").code == 2);
}

TEST_CASE("malformed CSV exits 1 with its location") {
  const fs::path dir = workdir("badcsv");
  const std::string path = (dir / "bad.csv").string();
  write_text_file(path, "a,b\n1,2\n3,oops\n");
  const Run r = run("explore --data " + path + " --out " + (dir / "m.json").string());
  CHECK(r.code == 1);
  CHECK(r.err.find("row 3") != std::string::npos);
  CHECK(r.err.find("column 2") != std::string::npos);
  CHECK(run("explore --data " + (dir / "missing.csv").string()).code == 1);
}

TEST_CASE("fit echoes the default hyperparameters and is reproducible") {
  const fs::path dir = workdir("fit");
  const std::string data = write_data(dir);
  const std::string common = "fit --data " + data + " --iters 300 --burnin 100 --seed 42";
  REQUIRE(run(common + " --out " + (dir / "a.json").string()).code == 0);
  REQUIRE(run(common + " --out " + (dir / "b.json").string()).code == 0);
  const json cfg = read_json(dir / "a_manifest.json").at("config");
  CHECK(cfg.at("prior").at("beta0") == 0.99);
  CHECK(cfg.at("prior").at("betahalf") == 0.25);
  CHECK(cfg.at("prior").at("kappa") == 0.0);
  CHECK(cfg.at("prior").at("eta1") == 0.001);
  CHECK(cfg.at("prior").at("eta2") == 0.001);
  CHECK(cfg.at("seed") == 42);
  CHECK(read_text_file((dir / "a.json").string()) == read_text_file((dir / "b.json").string()));
  const json post = read_json(dir / "a.json");
  CHECK(post.at("draws").size() == 200);
  CHECK(post.at("q") == 4);
  const Matrix edges = read_csv_file((dir / "a_edge_probability.csv").string()).values;
  CHECK(edges.rows() == 4);
  CHECK(edges.minCoeff() >= 0.0);
  CHECK(edges.maxCoeff() <= 1.0);
  CHECK(fs::exists(dir / "a_loadings_mean.csv"));

  // the configured start is used and two chains run from it
  REQUIRE(run("explore --data " + data + " --out " + (dir / "start.json").string()).code == 0);
  REQUIRE(run(common + " --chains 2 --threads 2 --start " + (dir / "start.json").string() + " --out " +
              (dir / "c.json").string())
              .code == 0);
  CHECK(read_json(dir / "c.json").at("chains").size() == 2);
  // burn-in at or beyond the iteration count is a configuration error
  CHECK(run("fit --data " + data + " --iters 300 --burnin 400 --seed 1 --out " + (dir / "d.json").string()).code == 1);
}

TEST_CASE("mixfit writes per-component outputs") {
  const fs::path dir = workdir("mixfit");
  const std::string data = write_data(dir, 60, 3);
  REQUIRE(run("mixfit --data " + data + " --components 2 --iters 60 --burnin 20 --seed 3 --out " +
              (dir / "mix.json").string())
              .code == 0);
  const json out = read_json(dir / "mix.json");
  CHECK(out.at("components") == 2);
  double total = 0;
  for (double w : out.at("mean_weights")) total += w;
  CHECK(total == doctest::Approx(1.0));
  const Matrix cls = read_csv_file((dir / "mix_classification.csv").string()).values;
  CHECK(cls.rows() == 60);
  CHECK(cls.cols() == 2);
  for (int c = 1; c <= 2; ++c) {
    CHECK(fs::exists(dir / ("mix_component" + std::to_string(c) + "_edge_probability.csv")));
    CHECK(fs::exists(dir / ("mix_component" + std::to_string(c) + "_loadings_mean.csv")));
  }
  CHECK(read_json(dir / "mix_manifest.json").at("command") == "mixfit");
}

TEST_CASE("simulate and prior-curves write their tables") {
  const fs::path dir = workdir("simulate");
  REQUIRE(run("simulate --dims 4,5 --reps 2 --n 40 --iters 60 --burnin 30 --seed 9 --out " +
              (dir / "study.csv").string())
              .code == 0);
  std::ifstream study(dir / "study.csv");
  std::string header;
  std::getline(study, header);
  CHECK(header == "p,rep,draw_index,kl");
  int rows = 0;
  for (std::string line; std::getline(study, line);) rows += !line.empty();
  CHECK(rows == 2 * 2 * 30);
  std::ifstream summary(dir / "study_summary.csv");
  std::getline(summary, header);
  CHECK(header.rfind("p,log_kl_p10,log_kl_p50,log_kl_p90", 0) == 0);

  REQUIRE(run("prior-curves --q 5 --nsim 200 --zs 1,5,10 --seed 1 --out " + (dir / "curves.csv").string()).code == 0);
  const CsvData curves = read_csv_file((dir / "curves.csv").string());
  CHECK(curves.header == std::vector<std::string>{"q", "z", "median_R_sparsity", "median_K_sparsity"});
  REQUIRE(curves.values.rows() == 3);
  CHECK(curves.values(2, 1) == 10);
}
