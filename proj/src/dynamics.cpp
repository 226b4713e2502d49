#include "ismd/dynamics.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "ismd/rng.hpp"

namespace ismd {

std::optional<ScheduleKind> parse_schedule_kind(std::string_view token) {
  if (token == "constant") return ScheduleKind::constant;
  if (token == "inverse_sqrt") return ScheduleKind::inverse_sqrt;
  if (token == "power_decay") return ScheduleKind::power_decay;
  return std::nullopt;
}

std::string_view to_string(ScheduleKind kind) {
  switch (kind) {
    case ScheduleKind::constant: return "constant";
    case ScheduleKind::inverse_sqrt: return "inverse_sqrt";
    case ScheduleKind::power_decay: return "power_decay";
  }
  return "constant";
}

double Schedule::operator()(std::int64_t k) const {
  switch (kind) {
    case ScheduleKind::constant: return base;
    case ScheduleKind::inverse_sqrt: return base / std::sqrt(static_cast<double>(k + 1));
    case ScheduleKind::power_decay:
      return base / std::pow(static_cast<double>(k + 1), exponent);
  }
  return base;
}

void IntegratorConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ValidationError("time step epsilon must be positive");
  }
  if (n_steps < 0) throw ValidationError("number of steps must be non-negative");
  if (eta.base < 0.0 || sigma.base < 0.0) {
    throw ValidationError("eta and sigma schedules must be non-negative");
  }
  if (eta.kind == ScheduleKind::power_decay && eta.exponent < 0.0) {
    throw ValidationError("power-decay exponent must be non-negative");
  }
  if (sigma.kind == ScheduleKind::power_decay && sigma.exponent < 0.0) {
    throw ValidationError("power-decay exponent must be non-negative");
  }
}

Matrix initialize(const MirrorMap& map, Index n, InitMode mode, double scale, std::uint64_t seed) {
  if (n < 1) throw ValidationError("ensemble needs at least one particle");
  const Index d = map.dimension();
  Matrix z = Matrix::Zero(n, d);
  if (mode == InitMode::gaussian) {
    if (!(scale >= 0.0)) throw ValidationError("initial spread must be non-negative");
    for (Index i = 0; i < n; ++i) {
      CounterRng rng(seed, Stream::init, static_cast<std::uint64_t>(i));
      std::normal_distribution<double> normal(0.0, scale);
      for (Index j = 0; j < d; ++j) z(i, j) = normal(rng);
    }
  }
  return z;
}

Integrator::Integrator(const InteractionGraph& g, const Objective& obj, const MirrorMap& map,
                       IntegratorConfig cfg)
    : g_(g), obj_(obj), map_(map), cfg_(std::move(cfg)) {
  cfg_.validate();
  if (obj.dimension() != map.dimension()) {
    throw ValidationError("objective dimension " + std::to_string(obj.dimension()) +
                          " differs from mirror map dimension " +
                          std::to_string(map.dimension()));
  }
  if (cfg_.simplex_projection && map.kind() != MirrorKind::euclidean) {
    throw ValidationError("simplex projection is only defined for the euclidean map");
  }
  const Index n = g.size(), d = map.dimension();
  grad_.setZero(n, d);
  drift_.setZero(n, d);
  noise_.setZero(n, d);
}

ParticleEnsemble Integrator::make_ensemble(Matrix z0) const {
  if (z0.rows() != g_.size() || z0.cols() != map_.dimension()) {
    throw ValidationError("initial state must be " + std::to_string(g_.size()) + " x " +
                          std::to_string(map_.dimension()));
  }
  ParticleEnsemble ens;
  if (cfg_.simplex_projection) {
    for (Index i = 0; i < z0.rows(); ++i) z0.row(i) = project_to_simplex(z0.row(i).transpose());
  }
  ens.z = std::move(z0);
  ens.x.resize(ens.z.rows(), ens.z.cols());
  for (Index i = 0; i < ens.z.rows(); ++i) {
    ens.x.row(i) = map_.grad_conjugate(ens.z.row(i).transpose()).transpose();
  }
  return ens;
}

void Integrator::advance(ParticleEnsemble& ens) {
  const Index n = ens.z.rows(), d = ens.z.cols();
  const std::int64_t k = ens.step;
  const double eta = cfg_.eta(k);
  const double sigma = cfg_.sigma(k);
  const double eps = cfg_.epsilon;
  const double noise_scale = sigma * std::sqrt(eps);

  Vector xi(d), gi(d);
  for (Index i = 0; i < n; ++i) {
    const std::uint64_t pid = static_cast<std::uint64_t>(i) + cfg_.particle_offset;
    if (cfg_.gradient == GradientMode::exact) {
      obj_.gradient(ens.x.row(i).transpose(), gi);
    } else {
      obj_.sampled_gradient(ens.x.row(i).transpose(),
                            SampleKey{cfg_.rng_seed, static_cast<std::uint64_t>(k), pid}, gi);
    }
    grad_.row(i) = gi.transpose();
    if (noise_scale > 0.0) {
      CounterRng rng(cfg_.rng_seed, Stream::diffusion, static_cast<std::uint64_t>(k), pid);
      std::normal_distribution<double> normal;
      for (Index j = 0; j < d; ++j) xi[j] = normal(rng);
      noise_.row(i) = xi.transpose();
    } else {
      noise_.row(i).setZero();
    }
  }
  g_.drift(ens.z, drift_);

  // Commit: all terms above were computed from the pre-update state.
  ens.z.noalias() -= (eta * eps) * grad_;
  ens.z.noalias() += eps * drift_;
  if (noise_scale > 0.0) ens.z.noalias() += noise_scale * noise_;
  ++ens.step;

  for (Index i = 0; i < n; ++i) {
    if (!ens.z.row(i).allFinite()) {
      const double max_abs = ens.z.row(i).cwiseAbs().maxCoeff();
      std::ostringstream msg;
      msg << "divergence at step " << ens.step << ", particle " << i << " (max |z| = " << max_abs
          << "); reduce epsilon or eta";
      throw DivergenceError(msg.str(), ens.step, i, max_abs);
    }
    if (cfg_.simplex_projection) {
      ens.z.row(i) = project_to_simplex(ens.z.row(i).transpose()).transpose();
    }
    ens.x.row(i) = map_.grad_conjugate(ens.z.row(i).transpose()).transpose();
  }
  if (!warned_ && ens.z.cwiseAbs().maxCoeff() > 1e8) warned_ = true;
}

ParticleEnsemble step(const ParticleEnsemble& ens, const InteractionGraph& g, const Objective& obj,
                      const MirrorMap& map, const IntegratorConfig& cfg) {
  if (cfg.n_steps > 0 && ens.step >= cfg.n_steps) {
    throw ValidationError("ensemble already reached the configured number of steps");
  }
  Integrator integ(g, obj, map, cfg);
  ParticleEnsemble next = ens;
  integ.advance(next);
  return next;
}

namespace {

TraceRow record(const ParticleEnsemble& ens, const Objective& obj, const MirrorMap& map,
                const IntegratorConfig& cfg, const RecordOptions& opts) {
  TraceRow row = measure(obj, map, ens.z, ens.x, opts.f_star);
  row.k = ens.step;
  row.t = static_cast<double>(ens.step) * cfg.epsilon;
  row.eta = cfg.eta(ens.step);
  row.sigma = cfg.sigma(ens.step);
  if (opts.bounds) row.bounds = opts.bounds(row);
  return row;
}

}  // namespace

RunTrace run(const Matrix& initial, const InteractionGraph& g, const Objective& obj,
             const MirrorMap& map, const IntegratorConfig& cfg, const RecordOptions& opts) {
  if (opts.stride < 1) throw ValidationError("record stride must be at least 1");
  Integrator integ(g, obj, map, cfg);
  ParticleEnsemble ens = integ.make_ensemble(initial);
  RunTrace trace;
  trace.particles = g.size();
  trace.bound_names = opts.bound_names;
  trace.rows.reserve(static_cast<std::size_t>(cfg.n_steps / opts.stride + 2));
  trace.rows.push_back(record(ens, obj, map, cfg, opts));
  try {
    while (ens.step < cfg.n_steps) {
      integ.advance(ens);
      if (ens.step % opts.stride == 0 || ens.step == cfg.n_steps) {
        trace.rows.push_back(record(ens, obj, map, cfg, opts));
      }
    }
  } catch (DivergenceError& e) {
    e.trace = std::move(trace);
    throw;
  }
  if (integ.warned()) trace.warnings.push_back("mirror-space state exceeded 1e8 in magnitude");
  return trace;
}

double bregman_consensus_step_check(const ParticleEnsemble& ens, const InteractionGraph& g,
                                    const Objective& obj, const MirrorMap& map, double eta) {
  if (map.kind() != MirrorKind::entropy) {
    throw ValidationError("the proximal form of the interaction step needs the entropy map");
  }
  const Index n = ens.z.rows();
  IntegratorConfig cfg;
  cfg.epsilon = 1.0;
  cfg.eta = Schedule::constant(eta);
  cfg.sigma = Schedule::constant(0.0);
  cfg.gradient = GradientMode::exact;
  Integrator integ(g, obj, map, cfg);
  ParticleEnsemble mirror = ens;
  integ.advance(mirror);

  // Proximal form: log x_i+ = sum_j w_ij log x_j - eta g_i / c, normalized.
  Matrix w = g.theta() * g.weights();
  w.diagonal().array() += 1.0 - g.theta() * g.weights().rowwise().sum().array();
  const double c = map.mu();
  double worst = 0.0;
  for (Index i = 0; i < n; ++i) {
    Vector logx = -(eta / c) * obj.gradient(ens.x.row(i).transpose());
    for (Index j = 0; j < n; ++j) logx += w(i, j) * ens.x.row(j).transpose().array().log().matrix();
    Vector xp = (logx.array() - logx.maxCoeff()).exp();
    xp /= xp.sum();
    worst = std::max(worst, (xp - mirror.x.row(i).transpose()).cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace ismd
