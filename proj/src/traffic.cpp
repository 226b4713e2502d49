#include "ismd/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "ismd/rng.hpp"

namespace ismd {

TrafficObjective::TrafficObjective(Eigen::MatrixXd incidence, Vector base_cost, Vector congestion,
                                   double edge_noise)
    : p_(std::move(incidence)), a_(std::move(base_cost)), b_(std::move(congestion)) {
  if (p_.cols() == 0) throw ValidationError("traffic objective needs at least one path");
  if (a_.size() != p_.rows() || b_.size() != p_.rows()) {
    throw ValidationError("traffic objective: edge cost vectors must have one entry per edge");
  }
  if ((b_.array() < 0.0).any()) throw ValidationError("traffic objective: negative congestion");
  set_edge_noise(edge_noise);
  p_norm_ = p_.rows() > 0 ? Eigen::BDCSVD<Eigen::MatrixXd>(p_).singularValues()[0] : 0.0;
  const Eigen::MatrixXd h = p_.transpose() * b_.asDiagonal() * p_;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
  lambda_min_ = std::max(0.0, es.eigenvalues().minCoeff());
}

void TrafficObjective::set_edge_noise(double sigma_g) {
  if (!(sigma_g >= 0.0)) throw ValidationError("edge noise must be non-negative");
  noise_ = sigma_g;
}

double TrafficObjective::value(const Eigen::Ref<const Vector>& x) const {
  check_dimension(x.size());
  const Vector u = p_ * x;
  return a_.dot(u) + 0.5 * u.dot(b_.cwiseProduct(u));
}

void TrafficObjective::gradient(const Eigen::Ref<const Vector>& x, Eigen::Ref<Vector> out) const {
  check_dimension(x.size());
  const Vector u = p_ * x;
  out.noalias() = p_.transpose() * (a_ + b_.cwiseProduct(u));
}

void TrafficObjective::sampled_gradient(const Eigen::Ref<const Vector>& x, const SampleKey& key,
                                        Eigen::Ref<Vector> out) const {
  check_dimension(x.size());
  Vector cost = a_ + b_.cwiseProduct(p_ * x);
  if (noise_ > 0.0) {
    CounterRng rng(key.seed, Stream::edge_noise, key.step, key.particle);
    std::normal_distribution<double> normal(0.0, noise_);
    for (Index e = 0; e < cost.size(); ++e) cost[e] += normal(rng);
  }
  out.noalias() = p_.transpose() * cost;
}

double TrafficObjective::lipschitz() const {
  return p_norm_ * (a_.norm() + b_.maxCoeff() * p_norm_);
}

std::optional<QuadraticForm> TrafficObjective::quadratic_form() const {
  return QuadraticForm{p_.transpose() * b_.asDiagonal() * p_, -(p_.transpose() * a_), 0.0};
}

namespace {

struct PathSearch {
  std::vector<std::vector<std::pair<Index, Index>>> adj;  // (neighbour, edge id)
  Index destination;
  int max_len;
  std::size_t cap;
  std::vector<char> on_path;
  std::vector<Index> stack;
  std::vector<std::vector<Index>>* out = nullptr;
  std::size_t count = 0;

  // Returns false once more than `cap` paths were found.
  bool dfs(Index u) {
    if (u == destination) {
      ++count;
      if (out) out->push_back(stack);
      return count <= cap;
    }
    if (static_cast<int>(stack.size()) == max_len) return true;
    for (auto [v, e] : adj[u]) {
      if (on_path[v]) continue;
      on_path[v] = 1;
      stack.push_back(e);
      const bool ok = dfs(v);
      stack.pop_back();
      on_path[v] = 0;
      if (!ok) return false;
    }
    return true;
  }
};

PathSearch make_search(Index n, const std::vector<std::pair<Index, Index>>& edges, Index destination,
                       int max_len, std::size_t cap) {
  PathSearch s;
  s.adj.resize(static_cast<std::size_t>(n));
  for (std::size_t e = 0; e < edges.size(); ++e) {
    s.adj[edges[e].first].push_back({edges[e].second, static_cast<Index>(e)});
    s.adj[edges[e].second].push_back({edges[e].first, static_cast<Index>(e)});
  }
  s.destination = destination;
  s.max_len = max_len;
  s.cap = cap;
  s.on_path.assign(static_cast<std::size_t>(n), 0);
  return s;
}

std::vector<std::pair<Index, Index>> geometric_edges(const Eigen::MatrixXd& pts, double r) {
  std::vector<std::pair<Index, Index>> edges;
  for (Index i = 0; i < pts.rows(); ++i)
    for (Index j = i + 1; j < pts.rows(); ++j)
      if ((pts.row(i) - pts.row(j)).norm() <= r) edges.emplace_back(i, j);
  return edges;
}

// Path count capped at cap + 1.
std::size_t count_paths(const Eigen::MatrixXd& pts, double r, Index o, Index d, int max_len,
                        std::size_t cap) {
  PathSearch s = make_search(pts.rows(), geometric_edges(pts, r), d, max_len, cap);
  s.on_path[o] = 1;
  s.dfs(o);
  return s.count;
}

}  // namespace

std::vector<std::vector<Index>> enumerate_paths(Index n,
                                                const std::vector<std::pair<Index, Index>>& edges,
                                                Index origin, Index destination, int max_len,
                                                std::size_t max_paths) {
  if (origin < 0 || origin >= n || destination < 0 || destination >= n || origin == destination) {
    throw ValidationError("origin and destination must be distinct valid nodes");
  }
  std::vector<std::vector<Index>> paths;
  PathSearch s = make_search(n, edges, destination, max_len, max_paths);
  s.out = &paths;
  s.on_path[origin] = 1;
  if (!s.dfs(origin)) {
    throw GraphGenerationError("more than " + std::to_string(max_paths) +
                               " origin-destination paths with at most " + std::to_string(max_len) +
                               " edges");
  }
  return paths;
}

TrafficInstance build_traffic(TrafficNetwork net, int max_path_length, double congestion,
                              double edge_noise, std::size_t max_paths) {
  if (max_path_length < 1) throw ValidationError("maximum path length must be at least 1");
  const Index n = net.points.rows();
  auto paths = enumerate_paths(n, net.edges, net.origin, net.destination, max_path_length,
                               max_paths);
  if (paths.empty()) {
    throw GraphGenerationError("no origin-destination path with at most r_max=" +
                               std::to_string(max_path_length) + " edges");
  }
  // Keep only edges that lie on some path, in order of first use.
  std::map<Index, Index> remap;
  std::vector<std::pair<Index, Index>> used;
  for (auto& path : paths) {
    for (auto& e : path) {
      auto [it, inserted] = remap.emplace(e, static_cast<Index>(used.size()));
      if (inserted) used.push_back(net.edges[e]);
      e = it->second;
    }
  }
  const Index n_edges = static_cast<Index>(used.size());
  const Index d = static_cast<Index>(paths.size());
  Eigen::MatrixXd incidence = Eigen::MatrixXd::Zero(n_edges, d);
  for (Index j = 0; j < d; ++j)
    for (Index e : paths[j]) incidence(e, j) = 1.0;
  Vector length(n_edges);
  for (Index e = 0; e < n_edges; ++e) {
    length[e] = (net.points.row(used[e].first) - net.points.row(used[e].second)).norm();
  }
  net.edges = std::move(used);
  net.paths = std::move(paths);
  TrafficObjective obj(std::move(incidence), std::move(length),
                       Vector::Constant(n_edges, congestion), edge_noise);
  return TrafficInstance{std::move(net), std::move(obj)};
}

TrafficInstance generate_traffic(const TrafficSpec& spec) {
  if (spec.nodes < 2) throw ValidationError("traffic network needs at least two nodes");
  if (spec.max_path_length < 1) throw ValidationError("r_max must be at least 1");
  const bool tune = spec.d_max > 0;
  if (tune && spec.d_min > spec.d_max) throw ValidationError("d_min exceeds d_max");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int attempt = 0; attempt < spec.max_attempts; ++attempt) {
    CounterRng rng(spec.seed, Stream::problem, static_cast<std::uint64_t>(attempt));
    TrafficNetwork net;
    net.points.resize(spec.nodes, 2);
    for (Index i = 0; i < spec.nodes; ++i) {
      net.points(i, 0) = unif(rng);
      net.points(i, 1) = unif(rng);
    }
    std::uniform_int_distribution<Index> pick(0, spec.nodes - 1);
    net.origin = pick(rng);
    do {
      net.destination = pick(rng);
    } while (net.destination == net.origin);
    net.attempts = attempt;

    double r = spec.radius;
    if (tune) {
      // The path count is monotone in r for fixed points.
      const std::size_t cap = static_cast<std::size_t>(spec.d_max);
      double lo = 0.0, hi = std::sqrt(2.0);
      bool found = false;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const std::size_t c = count_paths(net.points, mid, net.origin, net.destination,
                                          spec.max_path_length, cap);
        if (c < static_cast<std::size_t>(spec.d_min)) {
          lo = mid;
        } else if (c > cap) {
          hi = mid;
        } else {
          r = mid;
          found = true;
          break;
        }
      }
      if (!found) continue;
    } else if (count_paths(net.points, r, net.origin, net.destination, spec.max_path_length, 0) ==
               0) {
      continue;
    }
    net.radius = r;
    net.edges = geometric_edges(net.points, r);
    return build_traffic(std::move(net), spec.max_path_length, spec.congestion, spec.edge_noise,
                         spec.max_paths);
  }
  std::ostringstream msg;
  msg << "traffic generation failed after " << spec.max_attempts << " attempts (n=" << spec.nodes
      << ", r_max=" << spec.max_path_length;
  if (tune) msg << ", target d in [" << spec.d_min << ", " << spec.d_max << "]";
  msg << ")";
  throw GraphGenerationError(msg.str());
}

}  // namespace ismd
