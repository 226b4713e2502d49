#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "ismd/oracle.hpp"
#include "ismd/traffic.hpp"

using namespace ismd;

namespace {

Vector random_simplex(std::mt19937_64& rng, Index d) {
  std::exponential_distribution<double> e(1.0);
  Vector v(d);
  for (Index i = 0; i < d; ++i) v[i] = e(rng) + 1e-2;
  return v / v.sum();
}

}  // namespace

TEST_CASE("single-edge network has one path") {
  TrafficNetwork net;
  net.points.resize(2, 2);
  net.points << 0.0, 0.0, 0.3, 0.4;
  net.edges = {{0, 1}};
  net.origin = 0;
  net.destination = 1;
  auto inst = build_traffic(net, 1, 1.0, 0.0);
  CHECK(inst.objective.dimension() == 1);
  CHECK(inst.objective.base_cost()[0] == doctest::Approx(0.5));
  Vector x = Vector::Ones(1);
  // f(1) = a + b/2.
  CHECK(inst.objective.value(x) == doctest::Approx(1.0));
  auto cert = certify_minimizer(inst.objective, 1e-12);
  CHECK(cert.x_star[0] == 1.0);
}

TEST_CASE("triangle without congestion puts all mass on the shorter path") {
  TrafficNetwork net;
  net.points.resize(3, 2);
  net.points << 0.0, 0.0, 1.0, 0.0, 0.5, 0.2;
  net.edges = {{0, 1}, {0, 2}, {2, 1}};
  net.origin = 0;
  net.destination = 1;
  auto inst = build_traffic(net, 2, 0.0, 0.0);
  REQUIRE(inst.objective.dimension() == 2);
  auto cert = certify_minimizer(inst.objective, 1e-10);
  // The direct edge (length 1) is shorter than the detour (2 * sqrt(0.29)).
  Index direct = inst.network.paths[0].size() == 1 ? 0 : 1;
  CHECK(cert.x_star[direct] > 1.0 - 1e-9);
  CHECK(cert.f_star == doctest::Approx(1.0).epsilon(1e-9));
  // r_max = 1 keeps only the direct path.
  CHECK(build_traffic(net, 1, 0.0, 0.0).objective.dimension() == 1);
}

TEST_CASE("path enumeration respects simplicity and length") {
  // Complete graph on 5 nodes: number of simple 0->4 paths with <= k edges.
  std::vector<std::pair<Index, Index>> edges;
  for (Index i = 0; i < 5; ++i)
    for (Index j = i + 1; j < 5; ++j) edges.emplace_back(i, j);
  // Paths through j intermediates: 3!/(3-j)! -> 1 + 3 + 6 + 6 = 16.
  CHECK(enumerate_paths(5, edges, 0, 4, 1, 1000).size() == 1);
  CHECK(enumerate_paths(5, edges, 0, 4, 2, 1000).size() == 4);
  CHECK(enumerate_paths(5, edges, 0, 4, 3, 1000).size() == 10);
  CHECK(enumerate_paths(5, edges, 0, 4, 4, 1000).size() == 16);
  CHECK_THROWS_AS(enumerate_paths(5, edges, 0, 4, 4, 10), GraphGenerationError);
  for (const auto& path : enumerate_paths(5, edges, 0, 4, 4, 1000)) {
    std::set<Index> nodes{0};
    Index at = 0;
    for (Index e : path) {
      const auto [u, v] = edges[e];
      REQUIRE((u == at || v == at));
      at = u == at ? v : u;
      REQUIRE(nodes.insert(at).second);
    }
    REQUIRE(at == 4);
  }
}

TEST_CASE("generated instance matches the requested scale") {
  TrafficSpec spec;
  spec.nodes = 50;
  spec.max_path_length = 5;
  spec.d_min = 50;
  spec.d_max = 100;
  spec.seed = 3;
  auto inst = generate_traffic(spec);
  const Index d = inst.objective.dimension();
  CHECK(d >= 50);
  CHECK(d <= 100);
  for (Index j = 0; j < d; ++j) {
    const double len = inst.objective.incidence().col(j).sum();
    REQUIRE(len >= 1.0);
    REQUIRE(len <= 5.0);
  }
  // Edge costs are the Euclidean lengths, bounded by the radius.
  CHECK(inst.objective.base_cost().maxCoeff() <= inst.network.radius + 1e-12);
  auto again = generate_traffic(spec);
  CHECK(again.objective.incidence() == inst.objective.incidence());

  TrafficSpec fixed;
  fixed.nodes = 30;
  fixed.radius = 0.35;
  fixed.max_path_length = 4;
  fixed.seed = 1;
  auto f = generate_traffic(fixed);
  CHECK(f.objective.dimension() >= 1);
}

TEST_CASE("traffic gradients and convexity") {
  TrafficSpec spec;
  spec.nodes = 30;
  spec.max_path_length = 4;
  spec.d_min = 10;
  spec.d_max = 40;
  spec.seed = 5;
  spec.congestion = 2.0;
  auto inst = generate_traffic(spec);
  const auto& obj = inst.objective;
  const Index d = obj.dimension();
  std::mt19937_64 rng(1);
  for (int t = 0; t < 100; ++t) {
    const Vector x = random_simplex(rng, d);
    const Vector g = obj.gradient(x);
    const double h = 1e-6;
    Vector fd(d);
    for (Index j = 0; j < d; ++j) {
      Vector xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      fd[j] = (obj.value(xp) - obj.value(xm)) / (2.0 * h);
    }
    REQUIRE((fd - g).norm() <= 1e-5 * std::max(1.0, g.norm()));
    REQUIRE(g.norm() <= obj.lipschitz());
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 1000; ++t) {
    const Vector x = random_simplex(rng, d), y = random_simplex(rng, d);
    const double l = u(rng);
    REQUIRE(obj.value(l * x + (1 - l) * y) <= l * obj.value(x) + (1 - l) * obj.value(y) + 1e-12);
  }
}

TEST_CASE("edge noise is unbiased with the predicted variance") {
  TrafficNetwork net;
  net.points.resize(2, 2);
  net.points << 0.0, 0.0, 1.0, 0.0;
  net.edges = {{0, 1}};
  net.origin = 0;
  net.destination = 1;
  auto inst = build_traffic(net, 1, 1.0, 0.3);
  const Vector x = Vector::Ones(1);
  const double exact = inst.objective.gradient(x)[0];
  const int trials = 100000;
  double sum = 0.0, sum_sq = 0.0;
  Vector g(1);
  for (int t = 0; t < trials; ++t) {
    inst.objective.sampled_gradient(x, SampleKey{4, static_cast<std::uint64_t>(t), 0}, g);
    sum += g[0];
    sum_sq += g[0] * g[0];
  }
  const double mean = sum / trials;
  const double var = sum_sq / trials - mean * mean;
  CHECK(std::abs(mean - exact) < 3.0 * std::sqrt(var / trials));
  CHECK(var == doctest::Approx(0.09).epsilon(0.02));

  inst.objective.set_edge_noise(0.0);
  inst.objective.sampled_gradient(x, SampleKey{4, 1, 0}, g);
  CHECK(g[0] == exact);
}
