#include <doctest.h>

#include <cmath>
#include <random>

#include "ismd/mirror.hpp"

using namespace ismd;

namespace {

Vector random_vector(std::mt19937_64& rng, Index d, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(d);
  for (Index i = 0; i < d; ++i) v[i] = u(rng);
  return v;
}

Vector random_simplex(std::mt19937_64& rng, Index d) {
  std::exponential_distribution<double> e(1.0);
  Vector v(d);
  for (Index i = 0; i < d; ++i) v[i] = e(rng) + 1e-3;
  return v / v.sum();
}

}  // namespace

TEST_CASE("softmax of equal coordinates is the barycenter") {
  auto map = MirrorMap::entropy(4);
  Vector x = map.grad_conjugate(Vector::Zero(4));
  for (Index i = 0; i < 4; ++i) CHECK(x[i] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("euclidean conjugate gradient is the identity") {
  auto map = MirrorMap::euclidean(2);
  Vector z(2);
  z << 1.5, -2.0;
  Vector x = map.grad_conjugate(z);
  CHECK(x[0] == 1.5);
  CHECK(x[1] == -2.0);
  CHECK(map.mu() == 1.0);
}

TEST_CASE("softmax of log(1,2,3) is (1,2,3)/6") {
  auto map = MirrorMap::entropy(3);
  Vector z(3);
  z << std::log(1.0), std::log(2.0), std::log(3.0);
  Vector x = map.grad_conjugate(z);
  CHECK(std::abs(x[0] - 1.0 / 6.0) < 1e-15);
  CHECK(std::abs(x[1] - 2.0 / 6.0) < 1e-15);
  CHECK(std::abs(x[2] - 3.0 / 6.0) < 1e-15);
}

TEST_CASE("non-finite mirror input is a domain error") {
  auto map = MirrorMap::entropy(2);
  Vector z(2);
  z << 0.0, std::nan("");
  CHECK_THROWS_AS(map.grad_conjugate(z), DomainError);
  z << 0.0, INFINITY;
  CHECK_THROWS_AS(map.grad_conjugate(z), DomainError);
}

TEST_CASE("bregman divergence examples") {
  auto euc = MirrorMap::euclidean(2);
  Vector x(2), y(2);
  x << 1.0, 0.0;
  y << 0.0, 1.0;
  CHECK(euc.bregman(x, y) == doctest::Approx(1.0));
  CHECK(euc.bregman(x, x) == 0.0);

  auto ent = MirrorMap::entropy(2);
  x << 0.5, 0.5;
  y << 0.25, 0.75;
  const double expected = 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0);
  CHECK(std::abs(ent.bregman(x, y) - expected) < 1e-15);
  CHECK(std::abs(expected - 0.14384) < 1e-5);
  CHECK(ent.bregman(y, y) == 0.0);

  Vector zero(2);
  zero << 1.0, 0.0;
  CHECK_THROWS_AS(ent.bregman(x, zero), DomainError);
  // A zero in the first argument is fine (0 log 0 = 0).
  CHECK(ent.bregman(zero, x) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("Lipschitz constant of the conjugate gradient") {
  CHECK(MirrorMap::euclidean(3).lipschitz_of_conjugate() == 1.0);
  CHECK(MirrorMap::entropy(3).lipschitz_of_conjugate() == 1.0);
  CHECK(MirrorMap::entropy(3, 4.0).lipschitz_of_conjugate() == 0.25);
  CHECK(MirrorMap::euclidean(3, 2.0).lipschitz_of_conjugate() == 0.5);
}

TEST_CASE("scaled maps") {
  auto map = MirrorMap::entropy(3, 2.0);
  Vector z(3);
  z << 2.0 * std::log(1.0), 2.0 * std::log(2.0), 2.0 * std::log(3.0);
  Vector x = map.grad_conjugate(z);
  CHECK(x[2] == doctest::Approx(0.5));
  auto euc = MirrorMap::euclidean(2, 4.0);
  Vector v(2);
  v << 4.0, -8.0;
  CHECK(euc.grad_conjugate(v)[1] == -2.0);
}

TEST_CASE("map kind tokens") {
  CHECK(parse_mirror_kind("entropy") == MirrorKind::entropy);
  CHECK(parse_mirror_kind("euclidean") == MirrorKind::euclidean);
  CHECK_FALSE(parse_mirror_kind("negentropy").has_value());
  CHECK(to_string(MirrorKind::entropy) == "entropy");
  CHECK_THROWS_AS(MirrorMap::entropy(0), ValidationError);
  CHECK_THROWS_AS(MirrorMap::entropy(2, -1.0), ValidationError);
}

TEST_CASE("softmax stays in the open simplex for wide inputs") {
  std::mt19937_64 rng(7);
  for (Index d : {2, 10, 100}) {
    auto map = MirrorMap::entropy(d);
    for (int trial = 0; trial < 3000; ++trial) {
      Vector x = map.grad_conjugate(random_vector(rng, d, -50.0, 50.0));
      REQUIRE(std::abs(x.sum() - 1.0) < 1e-12);
      REQUIRE(x.minCoeff() > 0.0);
    }
  }
  // Spread beyond the exponent range still yields strictly positive output.
  auto map = MirrorMap::entropy(3);
  Vector z(3);
  z << 0.0, -1e6, 5.0;
  Vector x = map.grad_conjugate(z);
  CHECK(x.minCoeff() > 0.0);
  CHECK(std::abs(x.sum() - 1.0) < 1e-12);
}

TEST_CASE("dual-norm Lipschitz inequality") {
  std::mt19937_64 rng(11);
  for (Index d : {2, 10, 100}) {
    auto ent = MirrorMap::entropy(d);
    auto euc = MirrorMap::euclidean(d);
    for (int trial = 0; trial < 1000; ++trial) {
      const Vector z1 = random_vector(rng, d, -5.0, 5.0);
      const Vector z2 = z1 + random_vector(rng, d, -1.0, 1.0);
      const double lhs = (ent.grad_conjugate(z1) - ent.grad_conjugate(z2)).lpNorm<1>();
      REQUIRE(lhs <= (z1 - z2).lpNorm<Eigen::Infinity>() / ent.mu() + 1e-14);
      const double lhs2 = (euc.grad_conjugate(z1) - euc.grad_conjugate(z2)).norm();
      REQUIRE(lhs2 <= (z1 - z2).norm() + 1e-14);
    }
  }
}

TEST_CASE("directional derivative of log-sum-exp matches softmax") {
  std::mt19937_64 rng(3);
  for (Index d : {2, 10, 100}) {
    auto map = MirrorMap::entropy(d);
    for (int trial = 0; trial < 50; ++trial) {
      const Vector z = random_vector(rng, d, -3.0, 3.0);
      Vector v = random_vector(rng, d, -1.0, 1.0);
      v.normalize();
      const double h = 1e-5;
      const double fd = (map.conjugate(z + h * v) - map.conjugate(z - h * v)) / (2.0 * h);
      const double exact = map.grad_conjugate(z).dot(v);
      REQUIRE(std::abs(fd - exact) <= 1e-6 * std::max(1.0, std::abs(exact)));
    }
  }
}

TEST_CASE("Bregman divergence dominates the strong-convexity quadratic") {
  std::mt19937_64 rng(5);
  auto ent = MirrorMap::entropy(6);
  auto euc = MirrorMap::euclidean(6);
  for (int trial = 0; trial < 1000; ++trial) {
    const Vector x = random_simplex(rng, 6);
    const Vector y = random_simplex(rng, 6);
    // Pinsker: KL >= 0.5 |x - y|_1^2.
    REQUIRE(ent.bregman(x, y) >= 0.5 * std::pow((x - y).lpNorm<1>(), 2) - 1e-15);
    REQUIRE(euc.bregman(x, y) >= 0.5 * (x - y).squaredNorm() - 1e-15);
  }
}

TEST_CASE("round trip through the potential gradient") {
  std::mt19937_64 rng(9);
  auto ent = MirrorMap::entropy(5);
  auto euc = MirrorMap::euclidean(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Vector z = random_vector(rng, 5, -4.0, 4.0);
    const Vector back = ent.grad_potential(ent.grad_conjugate(z));
    const Vector diff = back - z;
    // Equal up to a multiple of the all-ones vector.
    CHECK((diff.array() - diff.mean()).abs().maxCoeff() < 1e-12);
    CHECK((euc.grad_potential(euc.grad_conjugate(z)) - z).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("bregman agrees with its definition") {
  std::mt19937_64 rng(13);
  auto ent = MirrorMap::entropy(4);
  for (int trial = 0; trial < 100; ++trial) {
    const Vector x = random_simplex(rng, 4);
    const Vector y = random_simplex(rng, 4);
    const double def = ent.potential(x) - ent.potential(y) - ent.grad_potential(y).dot(x - y);
    CHECK(ent.bregman(x, y) == doctest::Approx(def).epsilon(1e-9));
  }
}

TEST_CASE("simplex diameter and conjugate Laplacian bound") {
  CHECK(MirrorMap::entropy(4).diameter() == doctest::Approx(std::sqrt(2.0 * std::log(4.0))));
  CHECK(std::isinf(MirrorMap::euclidean(4).diameter()));
  // 2 KL(vertex || barycenter) = 2 log d.
  auto map = MirrorMap::entropy(4);
  Vector vertex = Vector::Zero(4);
  vertex[0] = 1.0;
  CHECK(2.0 * map.bregman(vertex, Vector::Constant(4, 0.25)) ==
        doctest::Approx(std::pow(map.diameter(), 2)));
  CHECK(MirrorMap::entropy(10).conjugate_laplacian_bound() == 1.0);
  CHECK(MirrorMap::euclidean(10).conjugate_laplacian_bound() == 10.0);
}

TEST_CASE("projection onto the simplex") {
  Vector y(3);
  y << 0.2, 0.3, 0.5;
  CHECK((project_to_simplex(y) - y).norm() < 1e-15);
  y << 2.0, 0.0, 0.0;
  Vector p = project_to_simplex(y);
  CHECK(p[0] == doctest::Approx(1.0));
  CHECK(p[1] == 0.0);
  y << 1.0, 1.0, -5.0;
  p = project_to_simplex(y);
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == doctest::Approx(0.5));
  CHECK(p[2] == 0.0);
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const Vector v = random_vector(rng, 7, -2.0, 2.0);
    const Vector q = project_to_simplex(v);
    REQUIRE(std::abs(q.sum() - 1.0) < 1e-12);
    REQUIRE(q.minCoeff() >= 0.0);
    // Optimality: (v - q)^T (s - q) <= 0 for every vertex s.
    for (Index j = 0; j < 7; ++j) {
      Vector s = Vector::Zero(7);
      s[j] = 1.0;
      REQUIRE((v - q).dot(s - q) <= 1e-12);
    }
  }
}
