#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "sgivens/explore.hpp"
#include "sgivens/mixture.hpp"
#include "sgivens/stats.hpp"
#include "test_support.hpp"

using namespace sgivens;
using sgivens::testing::random_model;

namespace {

struct MeanEstimate {
  double mean = 0;
  double se = 0;
};

MeanEstimate batch_means(const std::vector<double>& x, int batches = 50) {
  const std::size_t len = x.size() / static_cast<std::size_t>(batches);
  std::vector<double> b(static_cast<std::size_t>(batches));
  for (int k = 0; k < batches; ++k) {
    double s = 0;
    for (std::size_t t = 0; t < len; ++t) s += x[k * len + t];
    b[static_cast<std::size_t>(k)] = s / static_cast<double>(len);
  }
  MeanEstimate e;
  e.mean = mean(b);
  double ss = 0;
  for (double v : b) ss += (v - e.mean) * (v - e.mean);
  e.se = std::sqrt(ss / (batches - 1) / batches);
  return e;
}

// Clusters of `per` points around the given centers with unit spherical noise.
Matrix clustered(const std::vector<Vector>& centers, int per, Rng& rng, std::vector<int>* truth = nullptr) {
  const int q = static_cast<int>(centers.front().size());
  Matrix y(per * static_cast<int>(centers.size()), q);
  int row = 0;
  for (std::size_t c = 0; c < centers.size(); ++c)
    for (int k = 0; k < per; ++k, ++row) {
      y.row(row) = (centers[c] + standard_normal_vector(q, rng)).transpose();
      if (truth) truth->push_back(static_cast<int>(c));
    }
  return y;
}

// Best agreement of labels with truth over all relabellings.
double matched_accuracy(const std::vector<int>& labels, const std::vector<int>& truth, int C) {
  std::vector<int> perm(static_cast<std::size_t>(C));
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0;
  do {
    int hit = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) hit += perm[static_cast<std::size_t>(labels[i])] == truth[i];
    best = std::max(best, hit / static_cast<double>(labels.size()));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

// Hand-built state with prescribed components.
MixtureState manual_state(const std::vector<Model>& models, const std::vector<Vector>& mu, const Vector& psi,
                          const Matrix& x, std::vector<int> labels) {
  MixtureState st;
  const int C = static_cast<int>(models.size());
  st.w = Vector::Constant(C, 1.0 / C);
  st.mu = mu;
  for (const auto& m : models) {
    ChainState ch;
    ch.model = m;
    st.chains.push_back(ch);
  }
  st.psi = psi;
  st.x = x;
  st.labels = std::move(labels);
  return st;
}

double mvn_logpdf(const Vector& x, const Vector& mu, const Matrix& cov) {
  const Eigen::LLT<Matrix> llt(cov);
  const Vector z = llt.matrixL().solve(x - mu);
  const Matrix l = llt.matrixL();
  return -0.5 * z.squaredNorm() - l.diagonal().array().log().sum() - 0.5 * x.size() * std::log(2 * std::numbers::pi);
}

}  // namespace

TEST_CASE("configuration validation") {
  MixtureConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.alpha() == 0.25);
  cfg.dirichlet_alpha = 2;
  CHECK(cfg.alpha() == 2);
  MixtureConfig bad;
  bad.components = 0;
  CHECK_THROWS_AS(bad.validate(), std::domain_error);
  bad = MixtureConfig{};
  bad.tau = 0;
  CHECK_THROWS_AS(bad.validate(), std::domain_error);
  bad = MixtureConfig{};
  bad.psi_rate = -1;
  CHECK_THROWS_AS(bad.validate(), std::domain_error);
}

TEST_CASE("k-means") {
  Rng rng = make_stream(91, 0);
  SUBCASE("well separated clusters") {
    const int q = 4;
    std::vector<int> truth;
    const Matrix y = clustered({Vector::Constant(q, 10.0), Vector::Constant(q, -10.0)}, 100, rng, &truth);
    const auto res = kmeans(y, 2, 10, 100, rng);
    CHECK(matched_accuracy(res.labels, truth, 2) >= 0.99);
    CHECK_FALSE(res.reassigned);
    // inertia is the within-cluster sum of squares of the returned assignment
    double inertia = 0;
    for (Eigen::Index i = 0; i < y.rows(); ++i)
      inertia += (y.row(i) - res.centers.row(res.labels[static_cast<std::size_t>(i)])).squaredNorm();
    CHECK(res.inertia == doctest::Approx(inertia));
  }
  SUBCASE("identical points force a refill") {
    const Matrix y = Matrix::Ones(10, 2);
    const auto res = kmeans(y, 2, 3, 20, rng);
    CHECK(res.reassigned);
    CHECK(std::count(res.labels.begin(), res.labels.end(), 0) > 0);
    CHECK(std::count(res.labels.begin(), res.labels.end(), 1) > 0);
  }
  CHECK_THROWS_AS(kmeans(Matrix::Ones(1, 2), 2, 1, 10, rng), std::domain_error);
}

TEST_CASE("k-means initialization") {
  Rng rng = make_stream(92, 0);
  SUBCASE("one component is the exploratory fit of all data") {
    const Model truth = random_model(4, 0.5, rng);
    Matrix y(120, 4);
    const Matrix l = scaled_eigenmatrix(truth);
    for (int i = 0; i < 120; ++i) y.row(i) = (Vector::Constant(4, 2.0) + l * standard_normal_vector(4, rng)).transpose();
    MixtureConfig cfg;
    cfg.components = 1;
    const auto st = init_kmeans(y, cfg, rng);
    CHECK(std::all_of(st.labels.begin(), st.labels.end(), [](int l) { return l == 0; }));
    CHECK(st.w(0) == 1.0);
    const Model direct = exploratory_fit(sum_of_squares(center_columns(y)), {0.5, 1}).model;
    CHECK(st.chains[0].model.dense_angles().size() == direct.dense_angles().size());
    for (std::size_t k = 0; k < direct.dense_angles().size(); ++k)
      CHECK(st.chains[0].model.dense_angles()[k] == doctest::Approx(direct.dense_angles()[k]).epsilon(1e-9));
    CHECK((st.chains[0].model.eigenvalues() - direct.eigenvalues()).cwiseAbs().maxCoeff() <
          1e-9 * direct.eigenvalues()(0));
    CHECK((st.x - y).cwiseAbs().maxCoeff() == 0.0);
    CHECK((st.psi.array() > 0).all());
  }
  SUBCASE("separated clusters") {
    std::vector<int> truth;
    const Matrix y = clustered({Vector::Constant(3, 10.0), Vector::Constant(3, -10.0)}, 60, rng, &truth);
    MixtureConfig cfg;
    cfg.components = 2;
    const auto st = init_kmeans(y, cfg, rng);
    CHECK(matched_accuracy(st.labels, truth, 2) >= 0.99);
    CHECK(st.w.sum() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(st.chains.size() == 2);
    for (const auto& ch : st.chains) CHECK(ch.model.dim() == 3);
  }
  SUBCASE("fixed starting psi") {
    MixtureConfig cfg;
    cfg.components = 1;
    cfg.initial_psi = 0.3;
    const auto st = init_kmeans(Matrix::Random(20, 2), cfg, rng);
    CHECK(st.psi == Vector::Constant(2, 0.3));
  }
}

TEST_CASE("component statistics") {
  const Matrix x = (Matrix(4, 2) << 1, 2, 3, 1, -1, 0, 2, 2).finished();
  const Vector mu = (Vector(2) << 1, 1).finished();
  auto st = manual_state({Model::diagonal((Vector(2) << 2, 1).finished()), Model::diagonal((Vector(2) << 2, 1).finished())},
                         {mu, Vector::Zero(2)}, Vector::Ones(2), x, {0, 1, 0, 0});
  const double tau = 4;
  const auto ss = component_statistics(st, 0, tau);
  Matrix expected = mu * mu.transpose() / tau;
  for (int i : {0, 2, 3}) {
    const Vector e = x.row(i).transpose() - mu;
    expected += e * e.transpose();
  }
  CHECK(ss.n == 4.0);
  CHECK((ss.s - expected).cwiseAbs().maxCoeff() < 1e-14);
  // an empty component keeps only its mean term
  st.labels = {0, 0, 0, 0};
  CHECK(component_statistics(st, 1, tau).n == 1.0);
  CHECK(component_statistics(st, 1, tau).s.isZero());
}

TEST_CASE("latent signal update") {
  Rng rng = make_stream(93, 0);
  const int q = 3;
  const Model model = random_model(q, 0.7, rng);
  const Vector mu = (Vector(q) << 0.5, -1.0, 2.0).finished();
  const Vector y0 = (Vector(q) << 1.5, 0.2, 1.0).finished();
  SUBCASE("noiseless limit") {
    const Matrix y = y0.transpose();
    auto st = manual_state({model}, {mu}, Vector::Constant(q, 1e-12), y, {0});
    for (int k = 0; k < 100; ++k) {
      sample_latent(y, st, component_caches(st), rng);
      CHECK((st.x.row(0) - y.row(0)).cwiseAbs().maxCoeff() < 1e-4);
    }
  }
  SUBCASE("diagonal shrinkage") {
    const Vector d = (Vector(q) << 4, 2, 1).finished();
    const Matrix y = y0.transpose();
    auto st = manual_state({Model::diagonal(d)}, {mu}, Vector::Constant(q, 0.5), y, {0});
    Vector acc = Vector::Zero(q);
    const int n = 100000;
    for (int k = 0; k < n; ++k) {
      sample_latent(y, st, component_caches(st), rng);
      acc += st.x.row(0).transpose();
    }
    acc /= n;
    for (int j = 0; j < q; ++j) {
      const double shrink = d(j) / (d(j) + 0.5);
      const double sd = std::sqrt(d(j) * 0.5 / (d(j) + 0.5));
      CHECK(std::abs(acc(j) - (mu(j) + shrink * (y0(j) - mu(j)))) < 5 * sd / std::sqrt(double(n)));
    }
  }
  SUBCASE("moments against the dense conditional") {
    const Vector psi = (Vector(q) << 0.3, 0.8, 0.5).finished();
    const Matrix y = y0.transpose();
    auto st = manual_state({model}, {mu}, psi, y, {0});
    const Matrix k = build_precision(model);
    const Matrix m = (Matrix(psi.cwiseInverse().asDiagonal()) + k).inverse();
    const Vector mean_x = m * (psi.cwiseInverse().asDiagonal() * y0 + k * mu);
    const int n = 100000;
    std::vector<Vector> draws;
    Vector acc = Vector::Zero(q);
    for (int t = 0; t < n; ++t) {
      sample_latent(y, st, component_caches(st), rng);
      draws.push_back(st.x.row(0).transpose());
      acc += draws.back();
    }
    acc /= n;
    Matrix cov = Matrix::Zero(q, q);
    for (const auto& v : draws) cov += (v - acc) * (v - acc).transpose();
    cov /= n - 1;
    for (int i = 0; i < q; ++i) {
      CHECK(std::abs(acc(i) - mean_x(i)) < 5 * std::sqrt(m(i, i) / n));
      for (int j = 0; j < q; ++j)
        CHECK(std::abs(cov(i, j) - m(i, j)) < 5 * std::sqrt((m(i, i) * m(j, j) + m(i, j) * m(i, j)) / n));
    }
  }
  SUBCASE("eigenvalues spanning hundreds of decades") {
    // limit oracle: a flat direction r1, a unit one r2, and x pinned to mu along r3
    const Model wide(q, {{{1, 2}, 0.6}, {{2, 3}, -0.4}}, (Vector(q) << 1e150, 1.0, 1e-150).finished());
    const Matrix y = y0.transpose();
    const double psi = 0.5;
    auto st = manual_state({wide}, {mu}, Vector::Constant(q, psi), y, {0});
    const Matrix r = compose_eigenmatrix(wide);
    const Matrix basis = r.leftCols(2);
    Matrix prec = basis.transpose() * basis / psi;
    prec(1, 1) += 1.0;
    const Matrix cov = prec.inverse();
    const Vector target = cov * basis.transpose() * (y0 - mu) / psi;
    Vector acc = Vector::Zero(2);
    const int n = 40000;
    for (int t = 0; t < n; ++t) {
      sample_latent(y, st, component_caches(st), rng);
      REQUIRE(st.x.allFinite());
      const Vector c = r.transpose() * (st.x.row(0).transpose() - mu);
      REQUIRE(std::abs(c(2)) < 1e-12);
      acc += c.head(2);
    }
    acc /= n;
    for (int j = 0; j < 2; ++j) CHECK(std::abs(acc(j) - target(j)) < 5 * std::sqrt(cov(j, j) / n));
  }
}

TEST_CASE("measurement error update") {
  Rng rng = make_stream(94, 0);
  MixtureConfig cfg;
  SUBCASE("large sample concentrates on the truth") {
    const int n = 10000, q = 3;
    Matrix x = Matrix::Zero(n, q), y(n, q);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < q; ++j) y(i, j) = 0.2 * standard_normal(rng);
    auto st = manual_state({Model::diagonal((Vector(q) << 3, 2, 1).finished())}, {Vector::Zero(q)},
                           Vector::Ones(q), x, std::vector<int>(n, 0));
    for (int k = 0; k < 20; ++k) {
      sample_psi(y, st, cfg, rng);
      for (int j = 0; j < q; ++j) CHECK(std::abs(st.psi(j) / 0.04 - 1.0) < 0.1);
    }
  }
  SUBCASE("no observations give prior draws") {
    auto st = manual_state({Model::diagonal((Vector(2) << 2, 1).finished())}, {Vector::Zero(2)}, Vector::Ones(2),
                           Matrix(0, 2), {});
    std::vector<double> inv;
    for (int k = 0; k < 40000; ++k) {
      sample_psi(Matrix(0, 2), st, cfg, rng);
      inv.push_back(1.0 / st.psi(0));
    }
    const double mean_inv = cfg.psi_shape / cfg.psi_rate, sd = std::sqrt(cfg.psi_shape) / cfg.psi_rate;
    CHECK(std::abs(mean(inv) - mean_inv) < 5 * sd / std::sqrt(40000.0));
  }
}

TEST_CASE("labels, weights and means") {
  Rng rng = make_stream(95, 0);
  const int q = 2;
  const Model a(q, {{{1, 2}, 0.5}}, (Vector(q) << 2.0, 0.5).finished());
  const Model b = Model::diagonal((Vector(q) << 1.5, 1.0).finished());
  SUBCASE("one component keeps every label") {
    auto st = manual_state({a}, {Vector::Zero(q)}, Vector::Ones(q), Matrix::Random(30, q), std::vector<int>(30, 0));
    sample_labels(st, component_caches(st), rng);
    CHECK(std::all_of(st.labels.begin(), st.labels.end(), [](int l) { return l == 0; }));
    MixtureConfig cfg;
    cfg.components = 1;
    sample_weights(st, cfg, rng);
    CHECK(st.w(0) == 1.0);
  }
  SUBCASE("point at a separated mean") {
    const Vector m0 = Vector::Zero(q), m1 = Vector::Constant(q, 12.0);
    auto st = manual_state({a, b}, {m0, m1}, Vector::Ones(q), m0.transpose(), {1});
    int first = 0;
    for (int k = 0; k < 10000; ++k) {
      sample_labels(st, component_caches(st), rng);
      first += st.labels[0] == 0;
    }
    CHECK(first / 10000.0 > 0.999);
  }
  SUBCASE("label frequencies match dense densities") {
    const Vector m0 = Vector::Zero(q), m1 = (Vector(q) << 1.0, 0.5).finished();
    const Vector xi = (Vector(q) << 0.6, 0.1).finished();
    auto st = manual_state({a, b}, {m0, m1}, Vector::Ones(q), xi.transpose(), {0});
    st.w << 0.3, 0.7;
    const double l0 = std::log(0.3) + mvn_logpdf(xi, m0, build_covariance(a));
    const double l1 = std::log(0.7) + mvn_logpdf(xi, m1, build_covariance(b));
    const double p0 = 1 / (1 + std::exp(l1 - l0));
    const int n = 100000;
    int first = 0;
    const auto caches = component_caches(st);
    for (int k = 0; k < n; ++k) {
      sample_labels(st, caches, rng);
      first += st.labels[0] == 0;
    }
    CHECK(std::abs(first / double(n) - p0) < 5 * std::sqrt(p0 * (1 - p0) / n));
  }
  SUBCASE("weights follow the Dirichlet posterior") {
    auto st = manual_state({a, b}, {Vector::Zero(q), Vector::Zero(q)}, Vector::Ones(q), Matrix::Zero(5, q),
                           {0, 1, 1, 1, 1});
    MixtureConfig cfg;
    cfg.components = 2;
    double acc = 0;
    for (int k = 0; k < 50000; ++k) {
      sample_weights(st, cfg, rng);
      REQUIRE(st.w.sum() == doctest::Approx(1.0).epsilon(1e-14));
      acc += st.w(0);
    }
    // alpha = (1/2 + 1, 1/2 + 4)
    CHECK(std::abs(acc / 50000 - 1.5 / 6.0) < 0.005);
  }
  SUBCASE("means: conjugate normal and the empty-component prior") {
    MixtureConfig cfg;
    cfg.components = 2;
    cfg.tau = 10;
    Matrix x(4, q);
    x << 1, 2, 3, 0, 2, 2, 0, 1;
    auto st = manual_state({a, b}, {Vector::Zero(q), Vector::Zero(q)}, Vector::Ones(q), x, {0, 0, 0, 0});
    const double scale = 4 + 1.0 / cfg.tau;
    const Vector target0 = x.colwise().sum().transpose() / scale;
    const Matrix cov0 = build_covariance(a) / scale, cov1 = cfg.tau * build_covariance(b);
    const int n = 100000;
    Vector acc0 = Vector::Zero(q);
    Matrix sq0 = Matrix::Zero(q, q), sq1 = Matrix::Zero(q, q);
    for (int k = 0; k < n; ++k) {
      sample_means(st, cfg, rng);
      acc0 += st.mu[0];
      sq0 += (st.mu[0] - target0) * (st.mu[0] - target0).transpose();
      sq1 += st.mu[1] * st.mu[1].transpose();
    }
    acc0 /= n;
    sq0 /= n;
    sq1 /= n;
    for (int j = 0; j < q; ++j) CHECK(std::abs(acc0(j) - target0(j)) < 5 * std::sqrt(cov0(j, j) / n));
    CHECK((sq0 - cov0).cwiseAbs().maxCoeff() < 0.03 * cov0.maxCoeff());
    CHECK((sq1 - cov1).cwiseAbs().maxCoeff() < 0.03 * cov1.maxCoeff());
  }
}

TEST_CASE("component model updates") {
  Rng rng = make_stream(96, 0);
  const int q = 3;
  std::vector<int> truth;
  const Matrix y = clustered({Vector::Constant(q, 5.0), Vector::Constant(q, -5.0), Vector::Zero(q)}, 40, rng, &truth);
  MixtureConfig cfg;
  cfg.components = 3;
  const MixtureState start = init_kmeans(y, cfg, rng);
  SUBCASE("threaded and sequential updates agree") {
    MixtureState s1 = start, s2 = start;
    std::vector<Rng> r1{make_stream(1, 0), make_stream(1, 1), make_stream(1, 2)};
    std::vector<Rng> r2 = r1;
    MoveCounters c1, c2;
    MixtureConfig threaded = cfg;
    threaded.threads = 3;
    for (int it = 0; it < 20; ++it) {
      update_component_models(s1, cfg, r1, c1);
      update_component_models(s2, threaded, r2, c2);
    }
    for (int c = 0; c < 3; ++c) {
      CHECK(s1.chains[c].model.dense_angles() == s2.chains[c].model.dense_angles());
      CHECK(s1.chains[c].model.eigenvalues() == s2.chains[c].model.eigenvalues());
    }
    CHECK(c1.birth_proposed == c2.birth_proposed);
    std::vector<Rng> wrong(2, make_stream(1, 0));
    CHECK_THROWS_AS(update_component_models(s1, cfg, wrong, c1), std::domain_error);
  }
  SUBCASE("each component runs the single-sample kernel") {
    MixtureState s = start;
    std::vector<Rng> r{make_stream(2, 0), make_stream(2, 1), make_stream(2, 2)};
    Rng copy = r[1];
    MoveCounters c;
    ChainState direct(s.chains[1].model, component_statistics(s, 1, cfg.tau));
    update_component_models(s, cfg, r, c);
    MoveCounters c2;
    mcmc_iteration(direct, component_statistics(s, 1, cfg.tau), cfg.kernel, copy, c2);
    CHECK(s.chains[1].model.dense_angles() == direct.model.dense_angles());
    CHECK(s.chains[1].model.eigenvalues() == direct.model.eigenvalues());
    CHECK(s.chains[1].log_likelihood == direct.log_likelihood);
  }
}

TEST_CASE("empty component samples its prior") {
  // alternating mu | Sigma and Sigma | mu with no data leaves the joint prior invariant
  Rng rng = make_stream(97, 0);
  MixtureConfig cfg;
  cfg.components = 1;
  cfg.tau = 5;
  cfg.kernel.angle_prior = AnglePrior(0.25, 0.5, 0.0);
  cfg.kernel.eigen_prior = {6.0, 6.0};
  auto st = manual_state({Model::diagonal((Vector(2) << 2, 1).finished())}, {Vector::Zero(2)}, Vector::Ones(2),
                         Matrix(0, 2), {});
  std::vector<Rng> rngs{make_stream(98, 0)};
  MoveCounters counters;
  std::vector<double> present, half;
  for (int it = 0; it < 100000; ++it) {
    sample_means(st, cfg, rng);
    update_component_models(st, cfg, rngs, counters);
    const auto& m = st.chains[0].model;
    present.push_back(m.rotator_count() == 1);
    half.push_back(m.rotator_count() == 1 && m.rotator(0).angle == half_pi<double>);
  }
  const auto p = batch_means(present), h = batch_means(half);
  CHECK(std::abs(p.mean - (1 - 0.75 * 0.5)) < 4 * p.se);
  CHECK(std::abs(h.mean - 0.25) < 4 * h.se);
}

TEST_CASE("assignment and relabelling") {
  Rng rng = make_stream(99, 0);
  SUBCASE("Hungarian assignment matches brute force") {
    for (int rep = 0; rep < 200; ++rep) {
      const int n = 1 + rep % 6;
      Matrix cost(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) cost(i, j) = uniform_open(rng) * 10;
      const auto a = hungarian_assignment(cost);
      double got = 0;
      for (int i = 0; i < n; ++i) got += cost(i, a[static_cast<std::size_t>(i)]);
      std::vector<int> perm(static_cast<std::size_t>(n));
      std::iota(perm.begin(), perm.end(), 0);
      double best = 1e300;
      do {
        double s = 0;
        for (int i = 0; i < n; ++i) s += cost(i, perm[static_cast<std::size_t>(i)]);
        best = std::min(best, s);
      } while (std::next_permutation(perm.begin(), perm.end()));
      CHECK(got == doctest::Approx(best).epsilon(1e-12));
      std::vector<int> sorted = a;
      std::sort(sorted.begin(), sorted.end());
      for (int i = 0; i < n; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
    }
    CHECK_THROWS_AS(hungarian_assignment(Matrix::Zero(2, 3)), std::domain_error);
  }
  const std::vector<Vector> mu{Vector::Constant(2, 0.0), Vector::Constant(2, 10.0), Vector::Constant(2, -10.0),
                               (Vector(2) << 10, -10).finished()};
  SUBCASE("identity and swap") {
    CHECK(relabel_permutation(mu, mu) == std::vector<int>{0, 1, 2, 3});
    std::vector<Vector> swapped = mu;
    std::swap(swapped[1], swapped[2]);
    CHECK(relabel_permutation(swapped, mu) == std::vector<int>{0, 2, 1, 3});
  }
  SUBCASE("random permutations are undone") {
    for (int rep = 0; rep < 50; ++rep) {
      std::vector<int> perm{0, 1, 2, 3};
      std::shuffle(perm.begin(), perm.end(), rng);
      std::vector<Vector> moved(4);
      for (int r = 0; r < 4; ++r) moved[static_cast<std::size_t>(r)] = mu[static_cast<std::size_t>(perm[r])] + 0.1 * standard_normal_vector(2, rng);
      const auto p = relabel_permutation(moved, mu);
      for (int r = 0; r < 4; ++r) CHECK(perm[static_cast<std::size_t>(p[static_cast<std::size_t>(r)])] == r);
    }
  }
  SUBCASE("an unoccupied component does not force a swap") {
    // component 1 is empty and its diffuse mean sits on top of the reference for 0
    const std::vector<Vector> reference{Vector::Zero(2), Vector::Constant(2, 10.0)};
    const std::vector<Vector> current{(Vector(2) << 0.5, 0.0).finished(), (Vector(2) << 0.1, 0.1).finished()};
    CHECK(relabel_permutation(current, reference) == std::vector<int>{1, 0});
    CHECK(relabel_permutation(current, reference, {50.0, 0.0}) == std::vector<int>{0, 1});
    CHECK_THROWS_AS(relabel_permutation(current, reference, {1.0}), std::domain_error);
  }
  SUBCASE("permutation keeps the state consistent") {
    const Matrix x = Matrix::Random(6, 2);
    std::vector<Model> models;
    for (int c = 0; c < 3; ++c) models.push_back(Model::diagonal((Vector(2) << 3.0 + c, 1).finished()));
    auto st = manual_state(models, {mu[0], mu[1], mu[2]}, Vector::Ones(2), x, {0, 1, 2, 2, 1, 0});
    st.w << 0.2, 0.3, 0.5;
    const MixtureState before = st;
    const std::vector<int> perm{2, 0, 1};
    apply_permutation(st, perm);
    for (int r = 0; r < 3; ++r) {
      const int src = perm[static_cast<std::size_t>(r)];
      CHECK(st.w(r) == before.w(src));
      CHECK(st.mu[static_cast<std::size_t>(r)] == before.mu[static_cast<std::size_t>(src)]);
      CHECK(st.chains[static_cast<std::size_t>(r)].model.eigenvalues() ==
            before.chains[static_cast<std::size_t>(src)].model.eigenvalues());
    }
    for (std::size_t i = 0; i < st.labels.size(); ++i)
      CHECK(perm[static_cast<std::size_t>(st.labels[i])] == before.labels[i]);
    CHECK_THROWS_AS(apply_permutation(st, {0, 1}), std::domain_error);
  }
}

TEST_CASE("full chain on separated clusters") {
  Rng rng = make_stream(100, 0);
  const int q = 3;
  std::vector<int> truth;
  const Matrix y = clustered({Vector::Constant(q, 4.0), Vector::Constant(q, -4.0), (Vector(q) << 4, -4, 0).finished()},
                             50, rng, &truth);
  MixtureConfig cfg;
  cfg.components = 3;
  cfg.kernel.iterations = 400;
  cfg.kernel.burn_in = 200;
  cfg.kernel.seed = 5;
  const auto a = run_mixture_chain(y, cfg);
  const auto b = run_mixture_chain(y, cfg);
  REQUIRE(a.draws.size() == 200);
  CHECK(a.label_counts == b.label_counts);
  for (std::size_t k = 0; k < a.draws.size(); ++k) CHECK(a.draws[k].w == b.draws[k].w);
  CHECK(std::abs(a.mean_weights().sum() - 1.0) < 1e-12);
  const Matrix p = a.classification_probabilities();
  for (Eigen::Index i = 0; i < p.rows(); ++i) CHECK(p.row(i).sum() == doctest::Approx(1.0));
  std::vector<int> modal(static_cast<std::size_t>(p.rows()));
  for (Eigen::Index i = 0; i < p.rows(); ++i) p.row(i).maxCoeff(&modal[static_cast<std::size_t>(i)]);
  CHECK(matched_accuracy(modal, truth, 3) >= 0.95);
  for (const auto& d : a.draws) {
    CHECK(d.models.size() == 3);
    CHECK((d.psi.array() > 0).all());
  }
}

TEST_CASE("relabelling reduces mean-trajectory jumps") {
  // two overlapping groups invite label switches without relabelling
  Rng rng = make_stream(101, 0);
  const int q = 2;
  const Matrix y = clustered({Vector::Constant(q, 1.0), Vector::Constant(q, -1.0)}, 40, rng);
  MixtureConfig cfg;
  cfg.components = 2;
  cfg.kernel.iterations = 3000;
  cfg.kernel.burn_in = 0;
  cfg.kernel.seed = 9;
  auto jumps = [&](bool relabel) {
    MixtureConfig c = cfg;
    c.relabel = relabel;
    const auto s = run_mixture_chain(y, c);
    double total = 0;
    for (std::size_t t = 1; t < s.draws.size(); ++t)
      for (int k = 0; k < 2; ++k) total += (s.draws[t].mu[k] - s.draws[t - 1].mu[k]).norm();
    return total;
  };
  CHECK(jumps(true) <= jumps(false));
}

TEST_CASE("one noiseless component reduces to the single-sample chain") {
  Rng rng = make_stream(102, 0);
  const Model truth(4, {{{1, 2}, 0.7}, {{3, 4}, -0.6}}, (Vector(4) << 4, 3, 2, 1).finished());
  const Matrix l = scaled_eigenmatrix(truth);
  Matrix y(300, 4);
  for (int i = 0; i < 300; ++i) y.row(i) = (l * standard_normal_vector(4, rng)).transpose();
  MixtureConfig cfg;
  cfg.components = 1;
  cfg.fix_latent = true;
  cfg.fix_psi = true;
  cfg.initial_psi = 1e-12;
  cfg.kernel.iterations = 6000;
  cfg.kernel.burn_in = 1000;
  cfg.kernel.seed = 4;
  const auto mix = run_mixture_chain(y, cfg);
  McmcConfig mc = cfg.kernel;
  mc.seed = 11;
  const auto direct = run_chain(sum_of_squares(center_columns(y)), mc);
  std::vector<double> zm, zd, vm, vd;
  for (const auto& d : mix.draws) {
    zm.push_back(static_cast<double>(d.models[0].rotator_count()));
    vm.push_back(build_covariance(d.models[0])(0, 1));
  }
  for (const auto& d : direct.draws) {
    zd.push_back(static_cast<double>(d.rotator_count()));
    vd.push_back(build_covariance(d)(0, 1));
  }
  const auto a = batch_means(zm), b = batch_means(zd);
  CHECK(std::abs(a.mean - b.mean) < 4 * std::hypot(a.se, b.se) + 1e-9);
  const auto c = batch_means(vm), e = batch_means(vd);
  CHECK(std::abs(c.mean - e.mean) < 4 * std::hypot(c.se, e.se));
}

TEST_CASE("successive-conditional simulation matches the prior") {
  // Geweke: alternating y | theta and one sampler sweep theta | y keeps the prior of theta
  const int q = 3, n = 20;
  MixtureConfig cfg;
  cfg.components = 2;
  cfg.tau = 4;
  cfg.relabel = false;
  cfg.kernel.angle_prior = AnglePrior(0.25, 0.6, 0.0);
  cfg.kernel.eigen_prior = {6.0, 6.0};
  cfg.kernel.rj_proposals = 3;
  auto stats = [](const MixtureState& s) {
    std::vector<double> out;
    out.push_back(s.psi(0));
    out.push_back(s.w(0));
    out.push_back(s.mu[0](0));
    out.push_back(std::log(s.chains[0].model.eigenvalues()(0)));
    out.push_back(static_cast<double>(s.chains[0].model.rotator_count()));
    return out;
  };
  Rng rng = make_stream(103, 0);
  const int draws = 40000;
  std::vector<std::vector<double>> marginal(5), successive(5);
  for (int k = 0; k < draws; ++k) {
    const auto st = sample_mixture_prior(q, n, cfg, rng);
    const auto s = stats(st);
    for (std::size_t j = 0; j < 5; ++j) marginal[j].push_back(s[j]);
  }
  MixtureState st = sample_mixture_prior(q, n, cfg, rng);
  Matrix y = sample_observations(st, rng);
  for (auto& ch : st.chains) ch = ChainState(ch.model, SumOfSquares(Matrix::Identity(q, q), 1));
  std::vector<Rng> rngs{make_stream(104, 0), make_stream(104, 1)};
  MoveCounters counters;
  for (int k = 0; k < draws; ++k) {
    mixture_iteration(y, st, cfg, rng, rngs, counters);
    y = sample_observations(st, rng);
    const auto s = stats(st);
    for (std::size_t j = 0; j < 5; ++j) successive[j].push_back(s[j]);
  }
  for (std::size_t j = 0; j < 5; ++j) {
    CAPTURE(j);
    const auto a = batch_means(marginal[j]), b = batch_means(successive[j], 40);
    // two-sided p > 0.001
    CHECK(std::abs(a.mean - b.mean) < 3.29 * std::hypot(a.se, b.se));
  }
}
