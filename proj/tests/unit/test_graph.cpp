#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <vector>

#include "ismd/graph.hpp"

using namespace ismd;

namespace {

// Characteristic polynomial coefficients (monic, highest degree first) by
// Faddeev-LeVerrier.
std::vector<double> char_poly(const Eigen::MatrixXd& a) {
  const Index n = a.rows();
  std::vector<double> c(n + 1, 0.0);
  c[0] = 1.0;
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Index k = 1; k <= n; ++k) {
    m = a * m + c[k - 1] * Eigen::MatrixXd::Identity(n, n);
    c[k] = -(a * m).trace() / static_cast<double>(k);
  }
  return c;
}

double eval_poly(const std::vector<double>& c, double x) {
  double v = 0.0;
  for (double ci : c) v = v * x + ci;
  return v;
}

// All real roots in [lo, hi] by sign-change scanning plus bisection.
std::vector<double> poly_roots(const std::vector<double>& c, double lo, double hi) {
  std::vector<double> roots;
  const int grid = 200000;
  double prev_x = lo, prev_v = eval_poly(c, lo);
  if (std::abs(prev_v) < 1e-14) roots.push_back(lo);
  for (int i = 1; i <= grid; ++i) {
    const double x = lo + (hi - lo) * i / grid;
    const double v = eval_poly(c, x);
    if (prev_v * v < 0.0) {
      double a = prev_x, b = x, fa = prev_v;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a + b);
        const double fm = eval_poly(c, mid);
        if (fa * fm <= 0.0) {
          b = mid;
        } else {
          a = mid;
          fa = fm;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    prev_x = x;
    prev_v = v;
  }
  return roots;
}

void check_invariants(const InteractionGraph& g) {
  const Matrix& a = g.weights();
  const Index n = g.size();
  REQUIRE((a.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-9);
  REQUIRE((a.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-9);
  REQUIRE((g.laplacian() * Vector::Ones(n)).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE((a - a.transpose()).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(g.spectrum()[0] > -1e-12);
}

}  // namespace

TEST_CASE("mean-field graphs") {
  auto g1 = InteractionGraph::mean_field(1);
  CHECK(g1.singleton());
  CHECK(g1.lambda_min_nonzero() == 0.0);
  CHECK(g1.laplacian()(0, 0) == 0.0);
  CHECK_THROWS_AS(g1.algebraic_connectivity(), ValidationError);

  auto g4 = InteractionGraph::mean_field(4);
  CHECK((g4.weights().array() == 0.25).all());
  CHECK(g4.algebraic_connectivity() == 1.0);
  check_invariants(g4);

  auto g10 = InteractionGraph::mean_field(10);
  check_invariants(g10);
  CHECK(std::abs(g10.spectrum()[1] - 1.0) < 1e-10);
  CHECK(std::abs(g10.spectrum()[9] - 1.0) < 1e-10);
  CHECK(g10.algebraic_connectivity() == 1.0);
  CHECK(InteractionGraph::mean_field(5).algebraic_connectivity() == 1.0);
  CHECK(InteractionGraph::mean_field(5, 2.0).algebraic_connectivity() == 2.0);
  CHECK_THROWS_AS(InteractionGraph::mean_field(0), ValidationError);
}

TEST_CASE("theta scales the spectrum linearly") {
  auto a = InteractionGraph::erdos_renyi(8, 0.5, 3, 1.0);
  auto b = InteractionGraph::erdos_renyi(8, 0.5, 3, 2.0);
  CHECK(b.algebraic_connectivity() == doctest::Approx(2.0 * a.algebraic_connectivity()));
  CHECK(b.laplacian_norm() == doctest::Approx(2.0 * a.laplacian_norm()));
}

TEST_CASE("Erdos-Renyi graphs are doubly stochastic and connected") {
  for (double p : {0.3, 0.5, 1.0}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto g = InteractionGraph::erdos_renyi(10, p, seed);
      check_invariants(g);
      REQUIRE((g.weights().rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-10);
      REQUIRE(g.algebraic_connectivity() > 0.0);
      REQUIRE(g.connected());
    }
  }
  auto full = InteractionGraph::erdos_renyi(6, 1.0, 1);
  CHECK((full.weights().array() - 1.0 / 6.0).abs().maxCoeff() < 1e-12);
  CHECK(full.algebraic_connectivity() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(full.communication_per_round() == 30);

  // Same seed, same graph.
  auto g1 = InteractionGraph::erdos_renyi(10, 0.3, 42);
  auto g2 = InteractionGraph::erdos_renyi(10, 0.3, 42);
  CHECK(g1.weights() == g2.weights());
  CHECK_THROWS_AS(InteractionGraph::erdos_renyi(10, 0.0, 1), ValidationError);
  CHECK_THROWS_AS(InteractionGraph::erdos_renyi(10, 1.5, 1), ValidationError);
}

TEST_CASE("Erdos-Renyi average degree tracks p") {
  double total = 0.0;
  const int seeds = 200;
  for (int s = 0; s < seeds; ++s) {
    total += static_cast<double>(InteractionGraph::erdos_renyi(10, 0.5, s).communication_per_round());
  }
  // Mean degree of a connected G(10, 0.5): conditioning on connectivity
  // raises it slightly above 9 * 0.5.
  const double degree = total / seeds / 10.0;
  CHECK(degree > 4.3);
  CHECK(degree < 5.0);
}

TEST_CASE("graph generation failure names its parameters") {
  try {
    InteractionGraph::erdos_renyi(40, 0.01, 7, 1.0, 5);
    FAIL("expected failure");
  } catch (const GraphGenerationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("p=0.01") != std::string::npos);
    CHECK(msg.find("N=40") != std::string::npos);
    CHECK(msg.find("seed=7") != std::string::npos);
  }
}

TEST_CASE("algebraic connectivity matches characteristic-polynomial roots") {
  // Path on three nodes with self loops, Sinkhorn balanced.
  Matrix adj(3, 3);
  adj << 1, 1, 0, 1, 1, 1, 0, 1, 1;
  sinkhorn_balance(adj, 1e-14);
  Matrix sym = 0.5 * (adj + adj.transpose());
  InteractionGraph path(sym);
  auto roots = poly_roots(char_poly(path.laplacian().cast<double>()), -0.5, 2.5);
  REQUIRE(roots.size() == 3);
  CHECK(std::abs(path.algebraic_connectivity() - roots[1]) < 1e-9);

  for (Index n : {2, 3, 4}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      auto g = InteractionGraph::erdos_renyi(n, 0.6, seed);
      const Eigen::MatrixXd lap = g.laplacian();
      auto r = poly_roots(char_poly(lap), -1e-3, 2.5);
      // Repeated roots do not change sign; fall back to the minimum of |p|.
      std::vector<double> sorted(g.spectrum().data(), g.spectrum().data() + n);
      for (double ev : sorted) CHECK(std::abs(eval_poly(char_poly(lap), ev)) < 1e-9);
      if (static_cast<Index>(r.size()) == n) CHECK(std::abs(r[1] - g.algebraic_connectivity()) < 1e-9);
    }
  }
}

TEST_CASE("interaction drift") {
  // Hand-evaluated 2x2 mean-field example.
  auto g = InteractionGraph::mean_field(2);
  Matrix z(2, 2);
  z << 1, 0, 0, 1;
  Matrix dz = g.drift(z);
  Matrix expected(2, 2);
  expected << -0.5, 0.5, 0.5, -0.5;
  CHECK((dz - expected).cwiseAbs().maxCoeff() == 0.0);

  // Consensus and disabled interaction give zero drift.
  Matrix same(3, 4);
  same.rowwise() = Eigen::RowVector4d(1, 2, 3, 4);
  CHECK(InteractionGraph::erdos_renyi(3, 0.7, 1).drift(same).cwiseAbs().maxCoeff() < 1e-15);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  Matrix r(5, 3);
  for (Index i = 0; i < r.size(); ++i) r.data()[i] = normal(rng);
  CHECK(InteractionGraph::independent(5).drift(r).cwiseAbs().maxCoeff() == 0.0);
  CHECK(InteractionGraph::independent(5).communication_per_round() == 0);
  CHECK_THROWS_AS(InteractionGraph::mean_field(4).drift(r), ValidationError);
}

TEST_CASE("drift cancels in the particle mean") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 3.0);
  std::vector<InteractionGraph> graphs{InteractionGraph::mean_field(10, 1.5),
                                       InteractionGraph::erdos_renyi(10, 0.3, 2),
                                       InteractionGraph::erdos_renyi(10, 0.5, 3, 2.0)};
  for (const auto& g : graphs) {
    for (int trial = 0; trial < 100; ++trial) {
      Matrix z(10, 7);
      for (Index i = 0; i < z.size(); ++i) z.data()[i] = normal(rng);
      const Matrix dz = g.drift(z);
      REQUIRE(dz.colwise().sum().cwiseAbs().maxCoeff() < 1e-10);
      // Drift equals -theta L Z.
      REQUIRE((dz + g.theta() * g.laplacian() * z).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
  // Mean-field pulls towards the average.
  auto mf = InteractionGraph::mean_field(6, 2.0);
  Matrix z(6, 3);
  for (Index i = 0; i < z.size(); ++i) z.data()[i] = normal(rng);
  const Eigen::RowVectorXd mean = z.colwise().mean();
  const Matrix dz = mf.drift(z);
  for (Index i = 0; i < 6; ++i) CHECK((dz.row(i) - 2.0 * (mean - z.row(i))).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("communication per round counts off-diagonal weights") {
  CHECK(InteractionGraph::mean_field(10).communication_per_round() == 90);
  auto g = InteractionGraph::erdos_renyi(10, 0.3, 9);
  std::int64_t manual = 0;
  for (Index i = 0; i < 10; ++i)
    for (Index j = 0; j < 10; ++j) manual += (i != j && g.weights()(i, j) > 0.0);
  CHECK(g.communication_per_round() == manual);
}

TEST_CASE("custom weight matrices are validated") {
  Matrix bad = Matrix::Constant(3, 3, 1.0 / 3.0);
  bad(1, 1) += 0.1;
  auto err = check_doubly_stochastic(bad);
  REQUIRE(err.has_value());
  CHECK(err->find("row 1") != std::string::npos);
  CHECK_THROWS_AS(InteractionGraph{bad}, ValidationError);

  Matrix neg = Matrix::Identity(2, 2);
  neg << 1.2, -0.2, -0.2, 1.2;
  CHECK(check_doubly_stochastic(neg)->find("negative") != std::string::npos);
  Matrix asym(2, 2);
  asym << 0.5, 0.5, 0.4, 0.6;
  CHECK(check_doubly_stochastic(asym).has_value());

  const std::string path = "test_graph_custom.csv";
  {
    std::ofstream f(path);
    f << "# path graph\n0.5,0.5,0\n0.5,0,0.5\n0,0.5,0.5\n";
  }
  auto g = InteractionGraph::from_csv(path);
  CHECK(g.size() == 3);
  // Spectrum of I - A for this path is {0, 1/2, 3/2}.
  CHECK(g.algebraic_connectivity() == doctest::Approx(0.5));
  CHECK(g.laplacian_norm() == doctest::Approx(1.5));
  {
    std::ofstream f(path);
    f << "0.5,0.5,0\n0.5,0.1,0.5\n0,0.5,0.5\n";
  }
  try {
    InteractionGraph::from_csv(path);
    FAIL("expected validation failure");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("row 1") != std::string::npos);
  }
  std::remove(path.c_str());
}
