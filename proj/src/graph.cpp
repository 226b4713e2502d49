#include "ismd/graph.hpp"

#include <cmath>
#include <queue>
#include <random>
#include <sstream>

#include "ismd/csv.hpp"
#include "ismd/rng.hpp"

namespace ismd {

std::optional<std::string> check_doubly_stochastic(const Matrix& a, double tol) {
  const Index n = a.rows();
  if (n == 0 || a.cols() != n) {
    return "weight matrix must be square and non-empty (got " + std::to_string(a.rows()) + "x" +
           std::to_string(a.cols()) + ")";
  }
  if (!a.allFinite()) return std::string("weight matrix has non-finite entries");
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (a(i, j) < 0.0) {
        return "negative weight at (" + std::to_string(i) + ", " + std::to_string(j) + ")";
      }
      if (std::abs(a(i, j) - a(j, i)) > tol) {
        return "weight matrix not symmetric at (" + std::to_string(i) + ", " + std::to_string(j) +
               ")";
      }
    }
  }
  for (Index i = 0; i < n; ++i) {
    const double s = a.row(i).sum();
    if (std::abs(s - 1.0) > tol) {
      return "row " + std::to_string(i) + " sums to " + format_double(s) + ", expected 1";
    }
  }
  for (Index j = 0; j < n; ++j) {
    const double s = a.col(j).sum();
    if (std::abs(s - 1.0) > tol) {
      return "column " + std::to_string(j) + " sums to " + format_double(s) + ", expected 1";
    }
  }
  return std::nullopt;
}

int sinkhorn_balance(Matrix& a, double tol, int max_sweeps) {
  const Index n = a.rows();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    const Vector r = a.rowwise().sum();
    a = r.cwiseInverse().asDiagonal() * a;
    const Vector c = a.colwise().sum().transpose();
    a = a * c.cwiseInverse().asDiagonal();
    const double row_err = (a.rowwise().sum().array() - 1.0).abs().maxCoeff();
    if (row_err < tol) return sweep + 1;
  }
  throw GraphGenerationError("Sinkhorn balancing did not reach tolerance for N=" +
                             std::to_string(n));
}

InteractionGraph::InteractionGraph(Matrix weights, double theta, GraphStructure structure,
                                   double tol)
    : weights_(std::move(weights)), theta_(theta), structure_(structure) {
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    throw ValidationError("interaction strength theta must be positive");
  }
  if (auto err = check_doubly_stochastic(weights_, tol)) throw ValidationError(*err);
  finalize();
}

void InteractionGraph::finalize() {
  const Index n = weights_.rows();
  row_sums_ = weights_.rowwise().sum();
  laplacian_ = -weights_;
  laplacian_.diagonal() += row_sums_;
  // Exact zero row sums of L regardless of how A was rounded.
  for (Index i = 0; i < n; ++i) {
    double off = 0.0;
    for (Index j = 0; j < n; ++j)
      if (j != i) off += laplacian_(i, j);
    laplacian_(i, i) = -off;
  }
  offdiag_nnz_ = 0;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (i != j && weights_(i, j) != 0.0) ++offdiag_nnz_;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(theta_ * Eigen::MatrixXd(laplacian_),
                                                    Eigen::EigenvaluesOnly);
  spectrum_ = es.eigenvalues();
  lambda_max_ = spectrum_[n - 1];
  lambda_min_ = n >= 2 ? spectrum_[1] : 0.0;
  if (structure_ == GraphStructure::mean_field && n >= 2) {
    // Spectrum of theta (I - 11^T/N) is {0, theta}; report it exactly.
    lambda_min_ = theta_;
    lambda_max_ = theta_;
  }
  if (structure_ == GraphStructure::independent) {
    lambda_min_ = 0.0;
    lambda_max_ = 0.0;
  }
}

InteractionGraph InteractionGraph::mean_field(Index n, double theta) {
  if (n < 1) throw ValidationError("mean-field graph needs at least one particle");
  Matrix a = Matrix::Constant(n, n, 1.0 / static_cast<double>(n));
  return InteractionGraph(std::move(a), theta, GraphStructure::mean_field);
}

InteractionGraph InteractionGraph::independent(Index n) {
  if (n < 1) throw ValidationError("graph needs at least one particle");
  return InteractionGraph(Matrix::Identity(n, n), 1.0, GraphStructure::independent);
}

namespace {

bool is_connected(const Matrix& adj) {
  const Index n = adj.rows();
  std::vector<char> seen(n, 0);
  std::queue<Index> q;
  q.push(0);
  seen[0] = 1;
  Index count = 1;
  while (!q.empty()) {
    const Index u = q.front();
    q.pop();
    for (Index v = 0; v < n; ++v) {
      if (!seen[v] && adj(u, v) > 0.0) {
        seen[v] = 1;
        ++count;
        q.push(v);
      }
    }
  }
  return count == n;
}

}  // namespace

InteractionGraph InteractionGraph::erdos_renyi(Index n, double p, std::uint64_t seed, double theta,
                                               int max_retries) {
  if (n < 1) throw ValidationError("Erdos-Renyi graph needs at least one particle");
  if (!(p > 0.0 && p <= 1.0)) throw ValidationError("edge probability p must lie in (0, 1]");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    CounterRng rng(seed, Stream::graph, static_cast<std::uint64_t>(attempt));
    Matrix adj = Matrix::Identity(n, n);
    for (Index i = 0; i < n; ++i) {
      for (Index j = i + 1; j < n; ++j) {
        if (unif(rng) < p) adj(i, j) = adj(j, i) = 1.0;
      }
    }
    if (!is_connected(adj)) continue;
    sinkhorn_balance(adj, 1e-12);
    Matrix sym = 0.5 * (adj + adj.transpose());
    InteractionGraph g(std::move(sym), theta, GraphStructure::general, 1e-10);
    g.retries_ = attempt;
    return g;
  }
  std::ostringstream msg;
  msg << "graph generation failed: no connected Erdos-Renyi sample with p=" << p << ", N=" << n
      << ", seed=" << seed << " after " << max_retries << " retries";
  throw GraphGenerationError(msg.str());
}

InteractionGraph InteractionGraph::from_csv(const std::string& path, double theta) {
  Matrix a = read_csv_matrix(path);
  if (auto err = check_doubly_stochastic(a, 1e-9)) throw ValidationError(path + ": " + *err);
  return InteractionGraph(std::move(a), theta);
}

double InteractionGraph::algebraic_connectivity() const {
  if (singleton()) {
    throw ValidationError("algebraic connectivity undefined for a single particle");
  }
  return lambda_min_;
}

void InteractionGraph::drift(const Matrix& z, Matrix& out) const {
  if (z.rows() != size()) {
    throw ValidationError("interaction drift: state has " + std::to_string(z.rows()) +
                          " rows, graph has " + std::to_string(size()) + " particles");
  }
  out.resize(z.rows(), z.cols());
  switch (structure_) {
    case GraphStructure::independent:
      out.setZero();
      return;
    case GraphStructure::mean_field: {
      // Fixed ascending-index reduction for the mean.
      Vector mean = Vector::Zero(z.cols());
      for (Index i = 0; i < z.rows(); ++i) mean += z.row(i).transpose();
      mean /= static_cast<double>(z.rows());
      for (Index i = 0; i < z.rows(); ++i) out.row(i) = theta_ * (mean.transpose() - z.row(i));
      return;
    }
    case GraphStructure::general:
      out.noalias() = weights_ * z;
      out -= row_sums_.asDiagonal() * z;
      out *= theta_;
      return;
  }
}

Matrix InteractionGraph::drift(const Matrix& z) const {
  Matrix out;
  drift(z, out);
  return out;
}

}  // namespace ismd
