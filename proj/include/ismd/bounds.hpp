#pragma once

#include <optional>

#include "ismd/graph.hpp"
#include "ismd/mirror.hpp"
#include "ismd/objective.hpp"

namespace ismd {

struct BoundInputs {
  double L = 0.0;            // Lipschitz constant of f
  double mu_phi = 1.0;       // strong convexity of Phi
  double mu_f = 0.0;         // strong convexity of f w.r.t. Phi
  double kappa = 0.0;        // strong convexity of the mirror-space potential V
  double lambda_min = 0.0;   // smallest nonzero eigenvalue of theta L
  double N = 1.0;
  double d = 1.0;
  double sigma = 0.0;
  double T = 1.0;
  double D_phi = 0.0;        // Phi-diameter of the constraint set
  double theta = 1.0;        // already folded into lambda_min and laplacian_norm
  double laplacian_norm = 0.0;  // largest eigenvalue of theta L
  // Bound on the Laplacian of Phi*; when unset it is taken from the map.
  std::optional<double> conjugate_laplacian;
};

/// Fills the map- and graph-derived fields (mu_phi, D_phi, d, N, lambda_min,
/// laplacian_norm, theta, conjugate_laplacian) and L from the objective.
BoundInputs bound_inputs(const Objective& obj, const MirrorMap& map, const InteractionGraph& g,
                         double sigma);

/// D^2 / (2T) + sigma^2 * lap / 2 (single-particle SMD, convex case).
double smd_convex_bound(const BoundInputs& in);

/// (1/N) e^{-(kappa+lambda) t} S0 + d/(kappa+lambda) sigma^2 (N-1)/N (1 - e^{-(kappa+lambda) t}),
/// with norm-equivalence constant 1. Throws VacuousBoundError if kappa + lambda = 0.
double fluctuation_bound(const BoundInputs& in, double t, double initial_fluct_sq);

struct StackedPotential {
  std::optional<double> value;  // only when V has a closed form
  Matrix gradient;              // rows grad f(grad Phi*(z_i)) + theta (L Z)_i
  // Rows Hess Phi*(z_i) grad f(x_i) + theta (L Z)_i. Under the entropy map the
  // first term is x_i * (g_i - <x_i, g_i>), which vanishes at boundary
  // minimizers where `gradient` does not; its sup norm is at most the
  // Frank-Wolfe gap.
  Matrix metric_gradient;
};

StackedPotential stacked_potential(const Objective& obj, const MirrorMap& map,
                                   const InteractionGraph& g, const Matrix& z);

struct LogSobolevConstants {
  double rho = 0.0;
  double C_t = 0.0;
};

/// rho = sigma^2 kappa / 2, C_t = (2/rho)(1 - e^{-rho t}) + C0 e^{-rho t}
/// (C_t = 2t + C0 when rho = 0).
LogSobolevConstants log_sobolev_constants(const BoundInputs& in, double t, double C0);

/// (sigma^2/2) (2 d N / rho - 0.5 log(sigma^2 / (2 L_N))), L_N = L/mu_phi + |theta L|.
double mean_mode_gap_bound(const BoundInputs& in);

}  // namespace ismd
