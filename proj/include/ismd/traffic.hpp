#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ismd/objective.hpp"

namespace ismd {

/// Traffic assignment over a fixed set of origin-destination paths:
/// f(x) = sum_e a_e u_e + 0.5 b_e u_e^2, with edge loads u = P x.
/// P is the E x d edge-path incidence matrix, a the free-flow cost (edge
/// length) and b the congestion weight of each edge.
class TrafficObjective final : public Objective {
 public:
  TrafficObjective(Eigen::MatrixXd incidence, Vector base_cost, Vector congestion,
                   double edge_noise = 0.0);

  std::string_view kind() const override { return "traffic"; }
  Index dimension() const override { return p_.cols(); }
  Index edges() const { return p_.rows(); }

  double value(const Eigen::Ref<const Vector>& x) const override;
  void gradient(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const override;
  using Objective::gradient;
  /// Exact gradient plus P^T xi with xi ~ N(0, sigma_g^2 I_E) drawn for the key.
  void sampled_gradient(const Eigen::Ref<const Vector>& x, const SampleKey& key,
                        Eigen::Ref<Vector> out) const override;
  bool is_stochastic() const override { return noise_ > 0.0; }

  double lipschitz() const override;
  double strong_convexity() const override { return lambda_min_; }
  std::optional<QuadraticForm> quadratic_form() const override;

  const Eigen::MatrixXd& incidence() const { return p_; }
  const Vector& base_cost() const { return a_; }
  const Vector& congestion() const { return b_; }
  double edge_noise() const { return noise_; }
  void set_edge_noise(double sigma_g);

 private:
  Eigen::MatrixXd p_;
  Vector a_;
  Vector b_;
  double noise_;
  double p_norm_ = 0.0;
  double lambda_min_ = 0.0;
};

struct TrafficSpec {
  Index nodes = 50;
  double radius = 0.2;
  int max_path_length = 5;  // r_max, in edges
  std::uint64_t seed = 0;
  double congestion = 1.0;
  double edge_noise = 0.0;
  // When d_max > 0 the radius is tuned by bisection until the path count lies
  // in [d_min, d_max]; `radius` is then ignored.
  Index d_min = 0;
  Index d_max = 0;
  int max_attempts = 200;
  std::size_t max_paths = 100000;
};

struct TrafficNetwork {
  Eigen::MatrixXd points;  // n x 2
  std::vector<std::pair<Index, Index>> edges;
  Index origin = 0;
  Index destination = 1;
  double radius = 0.0;
  int attempts = 0;
  std::vector<std::vector<Index>> paths;  // edge ids, indexing `edges`
};

struct TrafficInstance {
  TrafficNetwork network;
  TrafficObjective objective;
};

/// Simple origin->destination paths with at most max_len edges (DFS order).
/// Throws GraphGenerationError if more than max_paths exist.
std::vector<std::vector<Index>> enumerate_paths(Index n, const std::vector<std::pair<Index, Index>>& edges,
                                                Index origin, Index destination, int max_len,
                                                std::size_t max_paths);

/// Builds the objective from an explicit network (edge lengths from points).
TrafficInstance build_traffic(TrafficNetwork net, int max_path_length, double congestion,
                              double edge_noise, std::size_t max_paths = 100000);

TrafficInstance generate_traffic(const TrafficSpec& spec);

}  // namespace ismd
