#include "ismd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "ismd/bounds.hpp"
#include "ismd/csv.hpp"

namespace fs = std::filesystem;

namespace ismd {

// ---------------------------------------------------------------- problem files

std::string file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path);
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  char buf[4096];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

namespace {

void write_atomic(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_matrix_rows(std::ostream& os, const Eigen::MatrixXd& m) {
  Vector row(m.cols());
  for (Index i = 0; i < m.rows(); ++i) {
    row = m.row(i).transpose();
    write_csv_row(os, row);
  }
}

std::map<std::string, std::string> parse_metadata(const std::vector<std::string>& comments) {
  std::map<std::string, std::string> meta;
  for (const auto& c : comments) {
    const auto eq = c.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      s.erase(0, s.find_first_not_of(" \t"));
      s.erase(s.find_last_not_of(" \t\r") + 1);
      return s;
    };
    meta[trim(c.substr(0, eq))] = trim(c.substr(eq + 1));
  }
  return meta;
}

}  // namespace

void write_problem_csv(const std::string& path, const Objective& obj) {
  std::ostringstream os;
  os << "# ismd problem\n# kind = " << obj.kind() << "\n# dimension = " << obj.dimension() << '\n';
  if (const auto* ls = dynamic_cast<const LeastSquares*>(&obj)) {
    os << "# batch = " << ls->batch_size() << '\n';
    if (ls->shards() > 1) os << "# shards = " << ls->shards() << '\n';
    Eigen::MatrixXd m(ls->rows(), ls->dimension() + 1);
    m << ls->design(), ls->target();
    write_matrix_rows(os, m);
  } else if (const auto* q = dynamic_cast<const QuadraticObjective*>(&obj)) {
    Eigen::MatrixXd m(q->dimension(), q->dimension() + 1);
    m << q->hessian(), q->linear();
    write_matrix_rows(os, m);
  } else if (const auto* t = dynamic_cast<const TrafficObjective*>(&obj)) {
    os << "# edge_noise = " << format_double(t->edge_noise()) << '\n';
    Eigen::MatrixXd m(t->edges(), t->dimension() + 2);
    m << t->base_cost(), t->congestion(), t->incidence();
    write_matrix_rows(os, m);
  } else {
    throw ValidationError("objective kind '" + std::string(obj.kind()) + "' has no file format");
  }
  write_atomic(path, os.str());
}

std::unique_ptr<Objective> load_problem_csv(const std::string& path) {
  std::vector<std::string> comments;
  const Matrix m = read_csv_matrix(path, &comments);
  auto meta = parse_metadata(comments);
  const std::string kind = meta.count("kind") ? meta["kind"] : "";
  auto need_cols = [&](Index c) {
    if (m.cols() < c) throw ValidationError(path + ": too few columns for a " + kind + " problem");
  };
  if (kind == "least_squares") {
    need_cols(2);
    const Index batch = meta.count("batch") ? std::stol(meta["batch"]) : 0;
    auto ls = std::make_unique<LeastSquares>(Eigen::MatrixXd(m.leftCols(m.cols() - 1)),
                                             Vector(m.col(m.cols() - 1)), batch);
    if (meta.count("shards")) ls->set_shards(std::stol(meta["shards"]));
    return ls;
  }
  if (kind == "quadratic") {
    need_cols(2);
    if (m.rows() + 1 != m.cols()) throw ValidationError(path + ": quadratic rows must be [Q_i | c_i]");
    return std::make_unique<QuadraticObjective>(Eigen::MatrixXd(m.leftCols(m.rows())),
                                                Vector(m.col(m.cols() - 1)));
  }
  if (kind == "traffic") {
    need_cols(3);
    const double noise = meta.count("edge_noise") ? std::stod(meta["edge_noise"]) : 0.0;
    return std::make_unique<TrafficObjective>(Eigen::MatrixXd(m.rightCols(m.cols() - 2)),
                                              Vector(m.col(0)), Vector(m.col(1)), noise);
  }
  throw ValidationError(path + ": missing or unknown '# kind = ...' header");
}

Json certificate_to_json(const MinimizerCertificate& cert, const std::string& problem_hash) {
  Json j;
  j["problem_hash"] = problem_hash;
  j["f_star"] = cert.f_star;
  j["fw_gap"] = cert.fw_gap;
  j["tolerance"] = cert.tolerance;
  j["iterations"] = cert.iterations;
  j["x_star"] = std::vector<double>(cert.x_star.data(), cert.x_star.data() + cert.x_star.size());
  return j;
}

std::optional<MinimizerCertificate> load_certificate(const std::string& problem_path) {
  std::ifstream in(problem_path + ".cert.json");
  if (!in) return std::nullopt;
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
  if (j.value("problem_hash", std::string()) != file_hash(problem_path)) return std::nullopt;
  MinimizerCertificate c;
  c.f_star = j.at("f_star").get<double>();
  c.fw_gap = j.at("fw_gap").get<double>();
  c.tolerance = j.at("tolerance").get<double>();
  c.iterations = j.at("iterations").get<long>();
  const auto xs = j.at("x_star").get<std::vector<double>>();
  c.x_star = Eigen::Map<const Vector>(xs.data(), static_cast<Index>(xs.size()));
  return c;
}

// ---------------------------------------------------------------- building blocks

Problem build_problem(const ExperimentConfig& cfg, std::uint64_t run_seed) {
  const auto& pr = cfg.problem;
  const std::uint64_t seed = pr.reseed ? pr.seed + run_seed : pr.seed;
  Problem out;
  std::unique_ptr<Objective> obj;
  if (!pr.file.empty()) {
    obj = load_problem_csv(pr.file);
    if (obj->kind() != pr.kind) {
      throw ValidationError(pr.file + " holds a " + std::string(obj->kind()) + " problem, config says " +
                            pr.kind);
    }
    if (auto* ls = dynamic_cast<LeastSquares*>(obj.get())) {
      if (pr.batch > 0) ls->set_batch_size(pr.batch);
      if (pr.shards > 1) ls->set_shards(pr.shards);
    }
  } else if (pr.kind == "least_squares") {
    auto ls = generate_least_squares(pr.m, pr.d, pr.cond, seed, pr.batch, pr.singular_max);
    ls.set_shards(pr.shards);
    obj = std::make_unique<LeastSquares>(std::move(ls));
  } else if (pr.kind == "traffic") {
    TrafficSpec spec = pr.traffic;
    spec.seed = seed;
    auto inst = generate_traffic(spec);
    out.network = std::move(inst.network);
    obj = std::make_unique<TrafficObjective>(std::move(inst.objective));
  } else {
    obj = std::make_unique<QuadraticObjective>(pr.hessian, pr.linear);
  }

  if (pr.kind == "quadratic" && cfg.mirror.kind == MirrorKind::euclidean && !cfg.mirror.projection) {
    const auto& q = static_cast<const QuadraticObjective&>(*obj);
    if (!(q.strong_convexity() > 0.0)) {
      throw ValidationError("unconstrained quadratic problem needs a positive definite Hessian");
    }
    out.unconstrained = true;
    out.certificate.x_star = q.hessian().ldlt().solve(q.linear());
    out.certificate.f_star = q.value(out.certificate.x_star);
  } else if (!pr.file.empty()) {
    auto cert = load_certificate(pr.file);
    if (!cert || cert->tolerance > pr.tolerance) {
      throw CertificationError(pr.file + ": no stored certificate at tolerance " +
                                   format_double(pr.tolerance) + "; run `ismd oracle " + pr.file + "`",
                               cert ? cert->fw_gap : INFINITY);
    }
    out.certificate = *cert;
  } else {
    out.certificate = certify_minimizer(*obj, pr.tolerance);
  }
  out.objective = std::move(obj);
  return out;
}

InteractionGraph build_graph(const ExperimentConfig& cfg, std::uint64_t run_seed) {
  const auto& g = cfg.graph;
  if (g.structure == "mean_field") return InteractionGraph::mean_field(g.particles, g.theta);
  if (g.structure == "independent") return InteractionGraph::independent(g.particles);
  if (g.structure == "erdos_renyi") return InteractionGraph::erdos_renyi(g.particles, g.p, g.seed + run_seed, g.theta);
  auto graph = InteractionGraph::from_csv(g.file, g.theta);
  if (graph.size() != g.particles) {
    throw ValidationError(g.file + " has " + std::to_string(graph.size()) + " particles, config says " +
                          std::to_string(g.particles));
  }
  return graph;
}

// ---------------------------------------------------------------- one cell

namespace {

double kappa_for(const ExperimentConfig& cfg, const Problem& problem) {
  if (cfg.metrics.kappa) return *cfg.metrics.kappa;
  // Euclidean OU dynamics: V = eta f, strongly convex with eta * lambda_min(Q).
  if (problem.unconstrained && cfg.integrator.eta.kind == ScheduleKind::constant) {
    return cfg.integrator.eta.base * problem.objective->strong_convexity();
  }
  return 0.0;
}

Json nullable(const std::optional<std::int64_t>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

CellResult run_cell(const ExperimentConfig& cfg, const Problem& problem, std::uint64_t seed,
                    bool keep_trace, std::ostream* trace_csv) {
  CellResult cell;
  cell.seed = seed;
  const Objective& obj = *problem.objective;
  const InteractionGraph graph = build_graph(cfg, seed);
  const MirrorMap map(cfg.mirror.kind, obj.dimension(), cfg.mirror.scale);

  IntegratorConfig ic;
  ic.epsilon = cfg.integrator.epsilon;
  ic.eta = cfg.integrator.eta;
  ic.sigma = cfg.integrator.sigma;
  ic.n_steps = cfg.integrator.steps;
  ic.rng_seed = seed;
  ic.gradient = cfg.integrator.gradient;
  ic.simplex_projection = cfg.mirror.projection;

  const Matrix z0 = initialize(map, graph.size(), cfg.integrator.init, cfg.integrator.init_scale,
                               cfg.integrator.init_seed + seed);

  BoundInputs in = bound_inputs(obj, map, graph, cfg.integrator.sigma.base);
  in.kappa = kappa_for(cfg, problem);
  in.mu_f = cfg.metrics.mu_f;
  in.T = std::max(1.0, static_cast<double>(ic.n_steps)) * ic.epsilon;
  const bool fluct_ok = in.kappa + in.lambda_min > 0.0;

  RecordOptions opts;
  opts.stride = cfg.metrics.stride;
  opts.f_star = problem.certificate.f_star;
  if (cfg.metrics.bounds) {
    opts.bound_names.push_back("smd_convex_bound");
    if (fluct_ok) opts.bound_names.push_back("fluct_bound");
    const double s0 = static_cast<double>(graph.size()) * fluctuation_stats(z0).mean_sq;
    opts.bounds = [in, s0, fluct_ok](const TraceRow& row) {
      std::vector<double> b;
      BoundInputs at = in;
      at.sigma = row.sigma;
      at.T = row.t;
      b.push_back(row.t > 0.0 ? smd_convex_bound(at) : INFINITY);
      if (fluct_ok) b.push_back(fluctuation_bound(at, row.t, s0));
      return b;
    };
  }

  RunTrace trace;
  try {
    trace = run(z0, graph, obj, map, ic, opts);
  } catch (DivergenceError& e) {
    cell.status = 2;
    cell.error = e.what();
    trace = std::move(e.trace);
  }
  if (trace_csv) write_trace_csv(*trace_csv, trace, cfg.metrics.wide_csv);

  Json& s = cell.summary;
  s["particles"] = graph.size();
  s["dimension"] = obj.dimension();
  s["steps"] = ic.n_steps;
  s["f_star"] = problem.certificate.f_star;
  s["certificate_gap"] = problem.certificate.fw_gap;
  s["lambda_min"] = in.lambda_min;
  s["communication_per_round"] = graph.communication_per_round();
  if (!trace.rows.empty()) {
    const TraceRow& last = trace.rows.back();
    s["final_loss_gap"] = last.loss_gap_mean;
    s["final_loss_at_mean"] = last.loss_at_mean;
    s["final_consensus"] = last.consensus_mean;
    s["final_fluct_mean_sq"] = last.fluct_mean_sq;
  }
  const std::int64_t burn_in = cfg.metrics.burn_in;
  if (cell.status == 0 && !trace.rows.empty() && trace.rows.back().k >= burn_in) {
    s["burn_in"] = burn_in;
    s["stationary_loss_gap"] = post_burn_in_mean(trace, burn_in, &TraceRow::loss_gap_mean);
    s["stationary_loss_at_mean"] = post_burn_in_mean(trace, burn_in, &TraceRow::loss_at_mean);
    s["loss_variance"] = pooled_loss_variance(trace, burn_in);
    s["consensus_mean"] = post_burn_in_mean(trace, burn_in, &TraceRow::consensus_mean);
    s["fluct_mean_sq"] = post_burn_in_mean(trace, burn_in, &TraceRow::fluct_mean_sq);
  }
  if (cfg.metrics.threshold) {
    const auto hit = time_to_threshold(trace, *cfg.metrics.threshold);
    s["threshold"] = *cfg.metrics.threshold;
    s["time_to_threshold"] = nullable(hit);
    s["communication_cost"] = hit ? Json(communication_cost(graph, *hit)) : Json(nullptr);
  }
  s["total_communication"] = communication_cost(graph, trace.rows.empty() ? 0 : trace.rows.back().k);
  if (cfg.metrics.bounds) {
    Json b;
    b["smd_convex_bound"] = smd_convex_bound(in);
    if (fluct_ok) b["fluct_bound_stationary"] = fluctuation_bound(in, INFINITY, 0.0);
    b["kappa"] = in.kappa;
    if (in.kappa > 0.0 && in.sigma > 0.0) {
      const auto ls = log_sobolev_constants(in, in.T, 0.0);
      b["rho"] = ls.rho;
      b["mean_mode_gap_bound"] = mean_mode_gap_bound(in);
    }
    s["bounds"] = b;
  }
  if (!trace.warnings.empty()) s["warnings"] = trace.warnings;
  if (keep_trace) cell.trace = std::move(trace);
  return cell;
}

// ---------------------------------------------------------------- aggregation

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return NAN;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0 || v[hi] == v[lo]) return v[lo];  // avoids 0 * inf
  return v[lo] + frac * (v[hi] - v[lo]);
}

void attach_variance_reduction(std::vector<CellResult>& cells, const std::string& baseline) {
  if (baseline.empty()) return;
  std::map<std::pair<std::string, std::uint64_t>, double> base;
  for (const auto& c : cells) {
    if (c.variant == baseline && c.summary.contains("loss_variance")) {
      base[{c.axes.dump(), c.seed}] = c.summary["loss_variance"].get<double>();
    }
  }
  for (auto& c : cells) {
    if (c.variant == baseline || !c.summary.contains("loss_variance")) continue;
    const auto it = base.find({c.axes.dump(), c.seed});
    if (it == base.end() || !(it->second > 0.0)) continue;
    c.summary["variance_reduction_ratio"] =
        (it->second - c.summary["loss_variance"].get<double>()) / it->second;
  }
}

std::vector<SummaryRow> aggregate(const std::vector<CellResult>& cells) {
  static const char* const metrics[] = {
      "final_loss_gap",   "final_loss_at_mean", "final_consensus",      "stationary_loss_gap",
      "stationary_loss_at_mean", "loss_variance", "consensus_mean",     "fluct_mean_sq",
      "time_to_threshold", "communication_cost", "total_communication", "variance_reduction_ratio",
      "lambda_min"};
  std::vector<std::pair<std::string, Json>> order;
  std::map<std::string, std::map<std::string, std::vector<double>>> values;
  std::map<std::string, std::size_t> seeds;
  for (const auto& c : cells) {
    const std::string key = c.variant + '\x1f' + c.axes.dump();
    if (!values.count(key)) order.emplace_back(c.variant, c.axes);
    auto& bucket = values[key];
    ++seeds[key];
    for (const char* m : metrics) {
      if (!c.summary.contains(m)) continue;
      auto& v = bucket[m];  // a null threshold metric still creates the row
      if (c.summary[m].is_number()) v.push_back(c.summary[m].get<double>());
    }
  }
  std::vector<SummaryRow> rows;
  for (const auto& [variant, axes] : order) {
    const std::string key = variant + '\x1f' + axes.dump();
    for (const char* m : metrics) {
      const auto it = values[key].find(m);
      if (it == values[key].end()) continue;
      SummaryRow r;
      r.variant = variant;
      r.axes = axes;
      r.metric = m;
      r.n = it->second.size();
      // Runs that never reach a threshold count as +inf for the order statistics.
      std::vector<double> v = it->second;
      if (std::string(m) == "time_to_threshold" || std::string(m) == "communication_cost") {
        v.resize(seeds[key], INFINITY);
      } else if (v.empty()) {
        continue;
      }
      r.median = quantile(v, 0.5);
      r.q25 = quantile(v, 0.25);
      r.q75 = quantile(v, 0.75);
      rows.push_back(r);
    }
  }
  return rows;
}

void write_summary_csv(std::ostream& os, const std::vector<SummaryRow>& rows) {
  std::vector<std::string> axis_keys;
  for (const auto& r : rows)
    for (const auto& [k, v] : r.axes.items())
      if (std::find(axis_keys.begin(), axis_keys.end(), k) == axis_keys.end()) axis_keys.push_back(k);
  os << "variant";
  for (const auto& k : axis_keys) os << ',' << k;
  os << ",metric,median,q25,q75,n\n";
  for (const auto& r : rows) {
    os << (r.variant.empty() ? "base" : r.variant);
    for (const auto& k : axis_keys) {
      os << ',';
      if (r.axes.contains(k)) {
        const Json& v = r.axes[k];
        os << (v.is_string() ? v.get<std::string>() : v.is_number_float() ? format_double(v.get<double>()) : v.dump());
      }
    }
    os << ',' << r.metric << ',' << format_double(r.median) << ',' << format_double(r.q25) << ','
       << format_double(r.q75) << ',' << r.n << '\n';
  }
}

// ---------------------------------------------------------------- experiments

namespace {

struct CellPlan {
  std::string variant;
  Json axes = Json::object();
  std::uint64_t seed = 0;
  ExperimentConfig cfg;
};

std::string axes_tag(const Json& axes) {
  std::string tag;
  for (const auto& [k, v] : axes.items()) {
    if (!tag.empty()) tag += '_';
    const auto dot = k.find('.');
    tag += k.substr(dot + 1) + '=';
    tag += v.is_string() ? v.get<std::string>() : v.is_number_float() ? format_double(v.get<double>()) : v.dump();
  }
  return tag;
}

std::vector<Json> grid(const std::vector<SweepAxis>& axes) {
  std::vector<Json> cells{Json::object()};
  for (const auto& axis : axes) {
    std::vector<Json> next;
    for (const auto& c : cells)
      for (const auto& v : axis.values) {
        Json e = c;
        e[axis.key] = v;
        next.push_back(e);
      }
    cells = std::move(next);
  }
  return cells;
}

}  // namespace

ExperimentResult execute(const ConfigDocument& doc, const HarnessOptions& opts) {
  std::vector<Variant> variants = doc.variants;
  if (variants.empty()) variants.push_back({"", Json::object()});
  const std::vector<Json> cells_axes = opts.sweep ? grid(doc.sweep) : std::vector<Json>{Json::object()};

  // Resolve every cell first so configuration errors surface before any work.
  std::vector<CellPlan> plan;
  const ExperimentConfig base = resolve(doc);
  const std::vector<std::uint64_t> seeds = opts.seed ? std::vector<std::uint64_t>{*opts.seed} : base.run.seeds;
  for (const auto& v : variants) {
    for (const auto& axes : cells_axes) {
      Json ov = v.overrides;
      for (const auto& [k, val] : axes.items()) ov[k] = val;
      if (opts.bounds) ov["metrics.bounds"] = *opts.bounds;
      if (opts.wide_csv) ov["metrics.wide_csv"] = *opts.wide_csv;
      ExperimentConfig cfg = resolve(doc, ov);
      for (std::uint64_t s : seeds) plan.push_back({v.name, axes, s, cfg});
    }
  }

  ExperimentResult result;
  result.name = base.run.name;
  const fs::path root = fs::path(opts.out.empty() ? base.run.out : opts.out) / base.run.name;

  std::mutex cache_mutex, log_mutex;
  std::map<std::string, std::shared_future<Problem>> cache;
  auto problem_for = [&](const CellPlan& p) {
    const std::uint64_t pseed = p.cfg.problem.reseed ? p.seed : 0;
    const std::string key = p.cfg.resolved.value("problem", Json::object()).dump() + '|' +
                            p.cfg.resolved.value("mirror", Json::object()).dump() + '|' + std::to_string(pseed);
    std::promise<Problem> promise;
    std::shared_future<Problem> fut;
    bool owner = false;
    {
      std::lock_guard<std::mutex> lock(cache_mutex);
      auto it = cache.find(key);
      if (it == cache.end()) {
        fut = promise.get_future().share();
        cache.emplace(key, fut);
        owner = true;
      } else {
        fut = it->second;
      }
    }
    if (owner) {
      try {
        promise.set_value(build_problem(p.cfg, p.seed));
      } catch (...) {
        promise.set_exception(std::current_exception());
      }
    }
    return fut.get();
  };

  result.cells.resize(plan.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  auto worker = [&]() {
    for (std::size_t i = next++; i < plan.size(); i = next++) {
      const CellPlan& p = plan[i];
      CellResult cell;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        const Problem problem = problem_for(p);
        std::ostringstream csv;
        const bool traces = opts.write_files && p.cfg.metrics.traces;
        cell = run_cell(p.cfg, problem, p.seed, opts.keep_traces, traces ? &csv : nullptr);
        if (traces) {
          fs::path dir = root / "traces";
          if (!p.variant.empty()) dir /= p.variant;
          if (!p.axes.empty()) dir /= axes_tag(p.axes);
          write_atomic(dir / ("seed_" + std::to_string(p.seed) + ".csv"), csv.str());
        }
      } catch (const CertificationError& e) {
        cell.status = 3;
        cell.error = e.what();
      } catch (const GraphGenerationError& e) {
        cell.status = 1;
        cell.error = e.what();
      } catch (...) {
        std::lock_guard<std::mutex> lock(log_mutex);
        if (!fatal) fatal = std::current_exception();
        continue;
      }
      cell.variant = p.variant;
      cell.axes = p.axes;
      cell.seed = p.seed;
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      cell.summary["seconds"] = secs;
      if (opts.log) {
        std::lock_guard<std::mutex> lock(log_mutex);
        *opts.log << "[" << (i + 1) << "/" << plan.size() << "] " << (p.variant.empty() ? "base" : p.variant);
        if (!p.axes.empty()) *opts.log << ' ' << axes_tag(p.axes);
        *opts.log << " seed " << p.seed;
        if (cell.status != 0) {
          *opts.log << ": " << cell.error << '\n';
        } else {
          *opts.log << ": final gap " << cell.summary.value("final_loss_gap", NAN) << " ("
                    << std::fixed << std::setprecision(1) << secs << std::defaultfloat << std::setprecision(6)
                    << " s)\n";
        }
      }
      result.cells[i] = std::move(cell);
    }
  };
  const int jobs = std::max(1, std::min<int>(opts.jobs, static_cast<int>(plan.size())));
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (fatal) std::rethrow_exception(fatal);

  attach_variance_reduction(result.cells, base.run.baseline);
  for (const auto& c : result.cells) result.exit_code = std::max(result.exit_code, c.status);
  // Divergence (2) and certification (3) outrank graph failures reported as 1.
  for (const auto& c : result.cells)
    if (c.status == 3) result.exit_code = 3;

  if (opts.write_files) {
    Json echo;
    echo["source"] = doc.source;
    echo["config"] = base.resolved;
    for (const auto& v : doc.variants) echo["variants"][v.name] = v.overrides;
    if (opts.sweep)
      for (const auto& a : doc.sweep) echo["sweep"][a.key] = a.values;
    echo["seeds"] = seeds;
    write_atomic(root / "resolved_config.json", echo.dump(2) + "\n");

    Json all = Json::array();
    for (const auto& c : result.cells) {
      Json j;
      j["variant"] = c.variant;
      j["axes"] = c.axes;
      j["seed"] = c.seed;
      j["status"] = c.status;
      if (!c.error.empty()) j["error"] = c.error;
      Json s = c.summary;
      s.erase("seconds");  // keep the file deterministic
      j["summary"] = s;
      all.push_back(j);
    }
    write_atomic(root / "cells.json", all.dump(2) + "\n");
    std::ostringstream sum;
    write_summary_csv(sum, aggregate(result.cells));
    write_atomic(root / "summary.csv", sum.str());
  }
  return result;
}

std::vector<std::pair<std::string, std::string>> list_configs(const std::string& dir) {
  std::vector<std::pair<std::string, std::string>> out;
  if (!fs::is_directory(dir)) return out;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto ext = e.path().extension();
    if (e.is_regular_file() && (ext == ".ini" || ext == ".json")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    std::string desc;
    try {
      desc = resolve(load_config(f.string())).run.description;
    } catch (const Error& e) {
      desc = std::string("(invalid: ") + e.what() + ")";
    }
    out.emplace_back(f.stem().string(), desc);
  }
  return out;
}

}  // namespace ismd
