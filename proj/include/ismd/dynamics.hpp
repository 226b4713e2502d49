#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>

#include "ismd/graph.hpp"
#include "ismd/metrics.hpp"
#include "ismd/mirror.hpp"
#include "ismd/objective.hpp"

namespace ismd {

enum class ScheduleKind { constant, inverse_sqrt, power_decay };

std::optional<ScheduleKind> parse_schedule_kind(std::string_view token);
std::string_view to_string(ScheduleKind kind);

/// Step-indexed schedule: constant -> base, inverse_sqrt -> base / sqrt(k+1),
/// power_decay -> base / (k+1)^exponent.
struct Schedule {
  ScheduleKind kind = ScheduleKind::constant;
  double base = 0.0;
  double exponent = 0.5;

  double operator()(std::int64_t k) const;

  static Schedule constant(double v) { return {ScheduleKind::constant, v, 0.0}; }
  static Schedule inverse_sqrt(double v) { return {ScheduleKind::inverse_sqrt, v, 0.5}; }
  static Schedule power_decay(double v, double p) { return {ScheduleKind::power_decay, v, p}; }
};

enum class GradientMode { exact, sampled };

struct IntegratorConfig {
  double epsilon = 0.1;
  Schedule eta = Schedule::constant(1.0);
  Schedule sigma = Schedule::constant(0.0);
  std::int64_t n_steps = 0;
  std::uint64_t rng_seed = 0;
  GradientMode gradient = GradientMode::sampled;
  // Projected-gradient baseline: euclidean map, state projected onto the
  // simplex after every step.
  bool simplex_projection = false;
  // Added to the particle index when keying random draws, so particle i of a
  // single-particle run can reproduce particle i of a larger run.
  std::uint64_t particle_offset = 0;

  void validate() const;
};

struct ParticleEnsemble {
  Matrix z;  // N x d mirror-space states
  Matrix x;  // N x d primal images
  std::int64_t step = 0;
};

enum class InitMode { zeros, gaussian };

/// zeros -> Z = 0 (barycenter for entropy); gaussian -> i.i.d. N(0, scale^2).
Matrix initialize(const MirrorMap& map, Index n, InitMode mode, double scale, std::uint64_t seed);

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::int64_t step, Index particle, double max_abs)
      : Error(what), step_(step), particle_(particle), max_abs_(max_abs) {}
  std::int64_t step() const { return step_; }
  Index particle() const { return particle_; }
  double max_abs() const { return max_abs_; }
  RunTrace trace;  // rows recorded before the failure

 private:
  std::int64_t step_;
  Index particle_;
  double max_abs_;
};

/// Euler-Maruyama stepping of
///   z_i <- z_i - eta(k) eps g_i + eps theta sum_j A_ij (z_j - z_i) + sigma(k) sqrt(eps) xi_i
/// with all drifts evaluated at the pre-update state. eta scales only the
/// gradient term.
class Integrator {
 public:
  Integrator(const InteractionGraph& g, const Objective& obj, const MirrorMap& map,
             IntegratorConfig cfg);
  // The integrator keeps references; temporaries would dangle.
  Integrator(InteractionGraph&&, const Objective&, const MirrorMap&, IntegratorConfig) = delete;

  ParticleEnsemble make_ensemble(Matrix z0) const;
  void advance(ParticleEnsemble& ens);

  const IntegratorConfig& config() const { return cfg_; }
  // Buffers of the last step (pre-scaling): gradients g_i and unit noise xi_i.
  const Matrix& last_gradients() const { return grad_; }
  const Matrix& last_noise() const { return noise_; }
  bool warned() const { return warned_; }

 private:
  const InteractionGraph& g_;
  const Objective& obj_;
  const MirrorMap& map_;
  IntegratorConfig cfg_;
  Matrix grad_;
  Matrix drift_;
  Matrix noise_;
  bool warned_ = false;
};

/// One step applied to a copy of the ensemble.
ParticleEnsemble step(const ParticleEnsemble& ens, const InteractionGraph& g, const Objective& obj,
                      const MirrorMap& map, const IntegratorConfig& cfg);

struct RecordOptions {
  std::int64_t stride = 1;
  double f_star = 0.0;
  // Optional extra columns evaluated at each recorded row.
  std::vector<std::string> bound_names;
  std::function<std::vector<double>(const TraceRow&)> bounds;
};

/// Runs cfg.n_steps steps from `initial`, recording rows at k = 0, every
/// stride, and at the final step. Throws DivergenceError carrying the partial trace.
RunTrace run(const Matrix& initial, const InteractionGraph& g, const Objective& obj,
             const MirrorMap& map, const IntegratorConfig& cfg, const RecordOptions& opts = {});

/// One noiseless step with eps = 1 computed in mirror space and through the
/// entropic proximal form x_i+ = argmin g_i^T x + sum_j w_ij KL(x, x_j), where
/// w = (1 - theta) I + theta A are the effective weights of the mirror update.
/// Returns max_i |difference|_inf.
double bregman_consensus_step_check(const ParticleEnsemble& ens, const InteractionGraph& g,
                                    const Objective& obj, const MirrorMap& map, double eta = 1.0);

}  // namespace ismd
