#include "ismd/bounds.hpp"

#include <cmath>
#include <sstream>

namespace ismd {

BoundInputs bound_inputs(const Objective& obj, const MirrorMap& map, const InteractionGraph& g,
                         double sigma) {
  BoundInputs in;
  in.L = obj.lipschitz();
  in.mu_phi = map.mu();
  in.d = static_cast<double>(map.dimension());
  in.N = static_cast<double>(g.size());
  in.sigma = sigma;
  in.D_phi = map.diameter();
  in.theta = g.theta();
  in.lambda_min = g.lambda_min_nonzero();
  in.laplacian_norm = g.laplacian_norm();
  in.conjugate_laplacian = map.conjugate_laplacian_bound();
  return in;
}

double smd_convex_bound(const BoundInputs& in) {
  if (!(in.T > 0.0)) throw ValidationError("smd_convex_bound: horizon T must be positive");
  // Entropy map: Laplacian of log-sum-exp is sum_i s_i (1 - s_i) <= 1.
  const double lap = in.conjugate_laplacian.value_or(1.0);
  return in.D_phi * in.D_phi / (2.0 * in.T) + 0.5 * in.sigma * in.sigma * lap;
}

double fluctuation_bound(const BoundInputs& in, double t, double initial_fluct_sq) {
  const double rate = in.kappa + in.lambda_min;
  if (!(rate > 0.0)) {
    throw VacuousBoundError(
        "fluctuation bound is vacuous: kappa + theta*lambda is zero (convex objective without "
        "interaction)");
  }
  const double decay = std::exp(-rate * t);
  return decay * initial_fluct_sq / in.N +
         in.d / rate * in.sigma * in.sigma * (in.N - 1.0) / in.N * (1.0 - decay);
}

StackedPotential stacked_potential(const Objective& obj, const MirrorMap& map,
                                   const InteractionGraph& g, const Matrix& z) {
  if (z.rows() != g.size() || z.cols() != map.dimension()) {
    throw ValidationError("stacked potential: state shape does not match graph and map");
  }
  StackedPotential out;
  out.gradient.resize(z.rows(), z.cols());
  out.metric_gradient.resize(z.rows(), z.cols());
  Vector x(z.cols()), gi(z.cols());
  for (Index i = 0; i < z.rows(); ++i) {
    map.grad_conjugate(z.row(i).transpose(), x);
    obj.gradient(x, gi);
    out.gradient.row(i) = gi.transpose();
    if (map.kind() == MirrorKind::entropy) {
      out.metric_gradient.row(i) = (x.array() * (gi.array() - x.dot(gi))).matrix().transpose();
    } else {
      out.metric_gradient.row(i) = gi.transpose();
    }
  }
  out.metric_gradient /= map.mu();
  // theta L Z = -drift.
  const Matrix drift = g.drift(z);
  out.gradient -= drift;
  out.metric_gradient -= drift;
  if (map.kind() == MirrorKind::euclidean && map.mu() == 1.0) {
    double v = 0.0;
    for (Index i = 0; i < z.rows(); ++i) v += obj.value(z.row(i).transpose());
    const Matrix lz = g.laplacian() * z;
    v += 0.5 * g.theta() * (z.array() * lz.array()).sum();
    out.value = v;
  }
  return out;
}

LogSobolevConstants log_sobolev_constants(const BoundInputs& in, double t, double C0) {
  if (in.kappa < 0.0) throw ValidationError("log-Sobolev constants need kappa >= 0");
  LogSobolevConstants out;
  out.rho = 0.5 * in.sigma * in.sigma * in.kappa;
  if (out.rho == 0.0) {
    out.C_t = 2.0 * t + C0;
  } else {
    const double decay = std::exp(-out.rho * t);
    // (1 - e^{-x}) / x via expm1 for small rho t.
    out.C_t = -2.0 * std::expm1(-out.rho * t) / out.rho + C0 * decay;
  }
  return out;
}

double mean_mode_gap_bound(const BoundInputs& in) {
  const double rho = 0.5 * in.sigma * in.sigma * in.kappa;
  if (!(rho > 0.0)) throw VacuousBoundError("mean-mode bound is vacuous for rho = 0");
  const double l_n = in.L / in.mu_phi + in.laplacian_norm;
  if (!(l_n > 0.0)) throw ValidationError("mean-mode bound needs L_N > 0");
  const double s2 = in.sigma * in.sigma;
  return 0.5 * s2 * (2.0 * in.d * in.N / rho - 0.5 * std::log(s2 / (2.0 * l_n)));
}

}  // namespace ismd
