#include <doctest.h>

#include <cmath>
#include <random>

#include "ismd/dynamics.hpp"
#include "ismd/oracle.hpp"

using namespace ismd;

namespace {

RecordOptions record_every(std::int64_t stride, double f_star) {
  RecordOptions r;
  r.stride = stride;
  r.f_star = f_star;
  return r;
}

Matrix random_matrix(std::mt19937_64& rng, Index r, Index c, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

LeastSquares small_problem() {
  Eigen::MatrixXd w(4, 3);
  w << 1.0, 0.5, -0.3, 0.2, -1.0, 0.4, 0.7, 0.1, 0.9, -0.5, 0.3, 0.2;
  Vector b(4);
  b << 0.3, -0.2, 1.1, 0.4;
  return LeastSquares(w, b);
}

}  // namespace

TEST_CASE("schedules") {
  CHECK(Schedule::constant(0.3)(0) == 0.3);
  CHECK(Schedule::constant(0.3)(1000) == 0.3);
  CHECK(Schedule::inverse_sqrt(0.3)(3) == doctest::Approx(0.15));
  CHECK(Schedule::power_decay(0.05, 0.1)(0) == 0.05);
  CHECK(Schedule::power_decay(0.05, 0.1)(1023) == doctest::Approx(0.05 / std::pow(1024.0, 0.1)));
  CHECK(parse_schedule_kind("inverse_sqrt") == ScheduleKind::inverse_sqrt);
  CHECK_FALSE(parse_schedule_kind("cosine").has_value());
  IntegratorConfig cfg;
  cfg.epsilon = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("initialization") {
  auto map = MirrorMap::entropy(5);
  Matrix z = initialize(map, 3, InitMode::zeros, 0.0, 1);
  CHECK(z.cwiseAbs().maxCoeff() == 0.0);
  Matrix g1 = initialize(map, 3, InitMode::gaussian, 1.0, 7);
  Matrix g2 = initialize(map, 3, InitMode::gaussian, 1.0, 7);
  CHECK(g1 == g2);
  CHECK(g1 != initialize(map, 3, InitMode::gaussian, 1.0, 8));
  CHECK(fluctuation_stats(z).mean_sq == 0.0);
  auto g = InteractionGraph::mean_field(3);
  LinearObjective lin(Vector::Ones(5));
  Integrator integ(g, lin, map, IntegratorConfig{});
  auto ens = integ.make_ensemble(z);
  CHECK((ens.x.array() - 0.2).abs().maxCoeff() < 1e-16);
}

TEST_CASE("deterministic single particle is gradient descent") {
  auto map = MirrorMap::euclidean(3);
  auto ls = small_problem();
  auto g = InteractionGraph::mean_field(1);
  IntegratorConfig cfg;
  cfg.epsilon = 0.1;
  cfg.eta = Schedule::constant(0.7);
  Matrix z(1, 3);
  z << 0.2, 0.3, 0.5;
  auto next = step(ParticleEnsemble{z, z, 0}, g, ls, map, cfg);
  const Vector expected = z.row(0).transpose() - 0.07 * ls.gradient(z.row(0).transpose());
  CHECK((next.z.row(0).transpose() - expected).norm() < 1e-15);
  CHECK(next.step == 1);
}

TEST_CASE("consensus is preserved without noise") {
  auto map = MirrorMap::entropy(3);
  auto ls = small_problem();
  auto g = InteractionGraph::erdos_renyi(5, 0.6, 2);
  IntegratorConfig cfg;
  cfg.epsilon = 0.3;
  cfg.n_steps = 50;
  Matrix z(5, 3);
  z.rowwise() = Eigen::RowVector3d(0.1, -0.4, 0.2);
  auto trace = run(z, g, ls, map, cfg);
  for (const auto& row : trace.rows) {
    REQUIRE(row.fluct_mean_sq < 1e-28);
    REQUIRE(row.consensus_mean < 1e-14);
  }
}

TEST_CASE("one step equals the hand-assembled affine map") {
  // Quadratic f, euclidean map, mean-field N = 2, d = 2:
  // z+ = (I - eta eps (I2 kron Q) - eps theta (L kron I2)) z + eta eps (1 kron c) + sigma sqrt(eps) xi.
  Eigen::MatrixXd q(2, 2);
  q << 2.0, 0.5, 0.5, 1.0;
  Vector c(2);
  c << 0.3, -0.1;
  QuadraticObjective obj(q, c);
  const double eta = 0.8, eps = 0.1, theta = 1.5, sigma = 0.2;
  auto g = InteractionGraph::mean_field(2, theta);
  auto map = MirrorMap::euclidean(2);
  Eigen::Matrix4d m;
  // Blocks of L = [[0.5, -0.5], [-0.5, 0.5]].
  m << 1 - eta * eps * 2.0 - eps * theta * 0.5, -eta * eps * 0.5, eps * theta * 0.5, 0,
      -eta * eps * 0.5, 1 - eta * eps * 1.0 - eps * theta * 0.5, 0, eps * theta * 0.5,
      eps * theta * 0.5, 0, 1 - eta * eps * 2.0 - eps * theta * 0.5, -eta * eps * 0.5,
      0, eps * theta * 0.5, -eta * eps * 0.5, 1 - eta * eps * 1.0 - eps * theta * 0.5;
  Eigen::Vector4d shift;
  shift << eta * eps * 0.3, eta * eps * -0.1, eta * eps * 0.3, eta * eps * -0.1;

  IntegratorConfig cfg;
  cfg.epsilon = eps;
  cfg.eta = Schedule::constant(eta);
  cfg.sigma = Schedule::constant(sigma);
  cfg.rng_seed = 12;
  Integrator integ(g, obj, map, cfg);
  Matrix z0(2, 2);
  z0 << 1.0, -0.5, 0.25, 2.0;
  auto ens = integ.make_ensemble(z0);
  integ.advance(ens);
  Eigen::Vector4d v0, xi;
  v0 << 1.0, -0.5, 0.25, 2.0;
  xi << integ.last_noise()(0, 0), integ.last_noise()(0, 1), integ.last_noise()(1, 0),
      integ.last_noise()(1, 1);
  const Eigen::Vector4d expected = m * v0 + shift + sigma * std::sqrt(eps) * xi;
  Eigen::Vector4d got;
  got << ens.z(0, 0), ens.z(0, 1), ens.z(1, 0), ens.z(1, 1);
  CHECK((got - expected).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(xi.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("particle mean follows the interaction-free update") {
  auto ls = generate_least_squares(30, 6, 10.0, 3, 5);
  for (auto map : {MirrorMap::entropy(6), MirrorMap::euclidean(6)}) {
    auto g = InteractionGraph::erdos_renyi(7, 0.4, 5, 2.0);
    IntegratorConfig cfg;
    cfg.epsilon = 0.1;
    cfg.eta = Schedule::constant(0.5);
    cfg.sigma = Schedule::constant(0.3);
    cfg.rng_seed = 4;
    Integrator integ(g, ls, map, cfg);
    std::mt19937_64 rng(1);
    auto ens = integ.make_ensemble(random_matrix(rng, 7, 6, 0.5));
    for (int k = 0; k < 100; ++k) {
      const Eigen::RowVectorXd before = ens.z.colwise().mean();
      integ.advance(ens);
      const Eigen::RowVectorXd after = ens.z.colwise().mean();
      const Eigen::RowVectorXd predicted =
          before - (0.5 * 0.1) * integ.last_gradients().colwise().mean() +
          (0.3 * std::sqrt(0.1)) * integ.last_noise().colwise().mean();
      REQUIRE((after - predicted).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("independent particles reproduce single-particle runs bitwise") {
  auto ls = generate_least_squares(40, 8, 20.0, 6, 4);
  auto map = MirrorMap::entropy(8);
  const Index n = 5;
  IntegratorConfig cfg;
  cfg.epsilon = 0.1;
  cfg.eta = Schedule::constant(0.5);
  cfg.sigma = Schedule::constant(0.05);
  cfg.n_steps = 200;
  cfg.rng_seed = 77;
  const Matrix z0 = initialize(map, n, InitMode::gaussian, 0.3, 5);
  auto all = InteractionGraph::independent(n);
  Integrator multi(all, ls, map, cfg);
  auto ens = multi.make_ensemble(z0);
  for (int k = 0; k < cfg.n_steps; ++k) multi.advance(ens);

  auto one = InteractionGraph::independent(1);
  for (Index i = 0; i < n; ++i) {
    IntegratorConfig single = cfg;
    single.particle_offset = static_cast<std::uint64_t>(i);
    Integrator integ(one, ls, map, single);
    auto e = integ.make_ensemble(z0.row(i));
    for (int k = 0; k < cfg.n_steps; ++k) integ.advance(e);
    REQUIRE(e.z.row(0) == ens.z.row(i));
  }
}

TEST_CASE("deterministic mirror descent matches the golden trace") {
  // Reference values from an independent implementation of
  // z <- z - eta eps (2/m) W^T (W softmax(z) - b), eta = 1, eps = 0.5.
  const double golden[5][5] = {
      {5, 0.26003498062533303, 0.30457395070929655, 0.43539106866537036, 0.096100769726175067},
      {10, 0.21613596734060411, 0.2923404395896575, 0.49152359306973847, 0.090088287517482615},
      {15, 0.18937923455033662, 0.28977684548017152, 0.52084391996949186, 0.08803349561964631},
      {20, 0.17211427659850154, 0.29129347887461593, 0.53659224452688259, 0.087200762677980076},
      {25, 0.16037074258698819, 0.29404986738047073, 0.54557939003254108, 0.086806976885265161}};
  auto ls = small_problem();
  auto map = MirrorMap::entropy(3);
  auto g = InteractionGraph::mean_field(1);
  IntegratorConfig cfg;
  cfg.epsilon = 0.5;
  cfg.eta = Schedule::constant(1.0);
  Integrator integ(g, ls, map, cfg);
  auto ens = integ.make_ensemble(Matrix::Zero(1, 3));
  int row = 0;
  for (int k = 1; k <= 25; ++k) {
    integ.advance(ens);
    if (k % 5 == 0) {
      for (int j = 0; j < 3; ++j) CHECK(std::abs(ens.x(0, j) - golden[row][j + 1]) < 1e-12);
      CHECK(std::abs(ls.value(ens.x.row(0).transpose()) - golden[row][4]) < 1e-12);
      ++row;
    }
  }
}

TEST_CASE("noiseless descent is monotone") {
  auto ls = generate_least_squares(60, 20, 30.0, 9);
  for (auto map : {MirrorMap::entropy(20), MirrorMap::euclidean(20)}) {
    IntegratorConfig cfg;
    cfg.epsilon = 0.1;
    cfg.eta = Schedule::constant(1.0);
    cfg.n_steps = 2000;
    Matrix z0 = Matrix::Zero(1, 20);
    if (map.kind() == MirrorKind::euclidean) z0.setConstant(0.05);
    auto trace = run(z0, InteractionGraph::mean_field(1), ls, map, cfg, record_every(1, 0.0));
    for (std::size_t r = 1; r < trace.rows.size(); ++r) {
      REQUIRE(trace.rows[r].loss_gap_mean <= trace.rows[r - 1].loss_gap_mean + 1e-15);
    }
  }
}

TEST_CASE("runs are deterministic and record at the stride") {
  auto ls = generate_least_squares(30, 5, 10.0, 2, 3);
  auto map = MirrorMap::entropy(5);
  auto g = InteractionGraph::mean_field(4);
  IntegratorConfig cfg;
  cfg.n_steps = 95;
  cfg.sigma = Schedule::constant(0.1);
  cfg.rng_seed = 3;
  auto a = run(Matrix::Zero(4, 5), g, ls, map, cfg, record_every(10, 0.0));
  auto b = run(Matrix::Zero(4, 5), g, ls, map, cfg, record_every(10, 0.0));
  REQUIRE(a.rows.size() == 11);
  CHECK(a.rows.back().k == 95);
  CHECK(a.rows[3].k == 30);
  for (std::size_t r = 0; r < a.rows.size(); ++r) CHECK(a.rows[r].loss_gaps == b.rows[r].loss_gaps);
  cfg.n_steps = 0;
  CHECK(run(Matrix::Zero(4, 5), g, ls, map, cfg).rows.size() == 1);
}

TEST_CASE("divergence is reported with the partial trace") {
  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(2, 2) * 10.0;
  QuadraticObjective obj(q, Vector::Zero(2));
  auto map = MirrorMap::euclidean(2);
  IntegratorConfig cfg;
  cfg.epsilon = 1.0;
  cfg.eta = Schedule::constant(5.0);  // contraction factor -49 per step
  cfg.n_steps = 1000;
  Matrix z0 = Matrix::Constant(1, 2, 1.0);
  try {
    run(z0, InteractionGraph::mean_field(1), obj, map, cfg);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.step() > 10);
    CHECK(e.particle() == 0);
    CHECK(!e.trace.rows.empty());
    CHECK(std::string(e.what()).find("step") != std::string::npos);
  }
  // Below the stability threshold 2 / (eta lambda_max) the iterates stay finite.
  cfg.eta = Schedule::constant(0.19);
  CHECK_NOTHROW(run(z0, InteractionGraph::mean_field(1), obj, map, cfg));
}

TEST_CASE("projected gradient baseline stays on the simplex") {
  auto ls = generate_least_squares(30, 6, 10.0, 4);
  auto map = MirrorMap::euclidean(6);
  IntegratorConfig cfg;
  cfg.simplex_projection = true;
  cfg.eta = Schedule::constant(2.0);
  cfg.n_steps = 50;
  auto single = InteractionGraph::mean_field(1);
  Integrator integ(single, ls, map, cfg);
  auto ens = integ.make_ensemble(Matrix::Constant(1, 6, 1.0 / 6.0));
  for (int k = 0; k < 50; ++k) {
    integ.advance(ens);
    REQUIRE(std::abs(ens.x.sum() - 1.0) < 1e-12);
    REQUIRE(ens.x.minCoeff() >= 0.0);
  }
  cfg.simplex_projection = true;
  auto ent = MirrorMap::entropy(6);
  CHECK_THROWS_AS(Integrator(single, ls, ent, cfg), ValidationError);
}

TEST_CASE("mirror step agrees with the Bregman proximal step") {
  auto map = MirrorMap::entropy(5);
  auto ls = generate_least_squares(20, 5, 10.0, 1);
  std::mt19937_64 rng(3);

  auto g1 = InteractionGraph::mean_field(1);
  Integrator one(g1, ls, map, IntegratorConfig{});
  auto e1 = one.make_ensemble(random_matrix(rng, 1, 5, 1.0));
  CHECK(bregman_consensus_step_check(e1, g1, ls, map) < 1e-10);

  auto g3 = InteractionGraph::mean_field(3);
  Integrator three(g3, ls, map, IntegratorConfig{});
  for (int t = 0; t < 100; ++t) {
    auto e = three.make_ensemble(random_matrix(rng, 3, 5, 1.0));
    REQUIRE(bregman_consensus_step_check(e, g3, ls, map) < 1e-8);
  }
  auto er = InteractionGraph::erdos_renyi(4, 0.7, 2);
  Integrator four(er, ls, map, IntegratorConfig{});
  auto e4 = four.make_ensemble(random_matrix(rng, 4, 5, 1.0));
  CHECK(bregman_consensus_step_check(e4, er, ls, map) < 1e-8);

  LinearObjective flat(Vector::Zero(5));
  Matrix cons(3, 5);
  cons.rowwise() = Eigen::RowVectorXd::LinSpaced(5, -1.0, 1.0);
  auto ec = three.make_ensemble(cons);
  CHECK(bregman_consensus_step_check(ec, g3, flat, map) < 1e-15);

  auto euc = MirrorMap::euclidean(5);
  CHECK_THROWS_AS(bregman_consensus_step_check(ec, g3, ls, euc), ValidationError);
}
