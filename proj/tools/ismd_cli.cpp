#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "ismd/csv.hpp"
#include "ismd/harness.hpp"
#include "ismd/verify.hpp"

#ifndef ISMD_CONFIG_DIR
#define ISMD_CONFIG_DIR "configs"
#endif

using namespace ismd;
namespace fs = std::filesystem;

namespace {

struct RunFlags {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool bounds = false;
  bool wide_csv = false;
  int jobs = 1;
  bool list = false;
  std::string config_dir = ISMD_CONFIG_DIR;
  bool quiet = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("config", f.config, "experiment config (.ini or .json)");
  cmd->add_option("--seed", f.seed, "run a single seed instead of run.seeds");
  cmd->add_option("--out", f.out, "output root (default: run.out)");
  cmd->add_flag("--bounds", f.bounds, "add theoretical bound columns to the traces");
  cmd->add_flag("--wide-csv", f.wide_csv, "per-particle columns in the traces");
  cmd->add_option("--jobs,-j", f.jobs, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_flag("--list", f.list, "list the shipped experiment configs");
  cmd->add_option("--configs", f.config_dir, "directory searched by --list");
  cmd->add_flag("--quiet,-q", f.quiet, "no per-cell progress");
}

int run_experiment(const RunFlags& f, bool sweep, CLI::App* cmd) {
  if (f.list) {
    for (const auto& [name, desc] : list_configs(f.config_dir)) std::cout << name << "  " << desc << '\n';
    return 0;
  }
  if (f.config.empty()) throw CLI::RequiredError("config");
  const ConfigDocument doc = load_config(f.config);
  HarnessOptions opts;
  opts.out = f.out;
  if (cmd->count("--seed")) opts.seed = f.seed;
  if (f.bounds) opts.bounds = true;
  if (f.wide_csv) opts.wide_csv = true;
  opts.jobs = f.jobs;
  opts.sweep = sweep;
  if (!f.quiet) opts.log = &std::cerr;
  const ExperimentResult r = execute(doc, opts);
  const fs::path root = fs::path(f.out.empty() ? resolve(doc).run.out : f.out) / r.name;
  std::size_t failed = 0;
  for (const auto& c : r.cells) {
    if (c.status == 0) continue;
    ++failed;
    std::cerr << (c.variant.empty() ? "base" : c.variant) << " seed " << c.seed << ": " << c.error << '\n';
  }
  std::cout << r.cells.size() << " cells, " << failed << " failed; outputs in " << root.string() << '\n';
  return r.exit_code;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << text;
}

Json ou_to_json(const OUStationary& st, double sigma, double eta, const InteractionGraph& g) {
  Json j;
  j["sigma"] = sigma;
  j["eta"] = eta;
  j["particles"] = g.size();
  j["theta"] = g.theta();
  j["mean"] = std::vector<double>(st.mean.data(), st.mean.data() + st.mean.size());
  j["covariance_trace"] = st.covariance.trace();
  j["lyapunov_residual"] = st.residual;
  Json rows = Json::array();
  for (Index i = 0; i < st.covariance.rows(); ++i) {
    const Vector r = st.covariance.row(i).transpose();
    rows.push_back(std::vector<double>(r.data(), r.data() + r.size()));
  }
  j["covariance"] = rows;
  return j;
}

struct OracleFlags {
  std::string target;
  double tolerance = 1e-10;
  std::string export_path;
  Index particles = 1;
  double theta = 1.0;
  double sigma = 0.0;
  double eta = 1.0;
};

int run_oracle(const OracleFlags& f, CLI::App* cmd) {
  const bool is_problem = fs::path(f.target).extension() == ".csv";
  std::unique_ptr<Objective> owned;
  std::string problem_path;
  double tol = f.tolerance;
  std::optional<InteractionGraph> graph;
  double sigma = f.sigma, eta = f.eta;
  if (is_problem) {
    problem_path = f.target;
    owned = load_problem_csv(problem_path);
    if (owned->kind() == std::string("quadratic")) graph = InteractionGraph::mean_field(f.particles, f.theta);
  } else {
    const ExperimentConfig cfg = resolve(load_config(f.target));
    if (!cmd->count("--tolerance")) tol = cfg.problem.tolerance;
    if (!cfg.problem.file.empty()) {
      problem_path = cfg.problem.file;
      owned = load_problem_csv(problem_path);
    } else {
      // Generated problem: export it so the certificate has a file to bind to.
      if (f.export_path.empty()) throw ValidationError("generated problem: pass --export <problem.csv>");
      ExperimentConfig gen = cfg;
      gen.problem.tolerance = 1e300;  // certification happens below
      Problem p = build_problem(gen, cfg.run.seeds.front());
      write_problem_csv(f.export_path, *p.objective);
      problem_path = f.export_path;
      owned = load_problem_csv(problem_path);
    }
    if (cfg.problem.kind == "quadratic") {
      graph = build_graph(cfg, cfg.run.seeds.front());
      if (!cmd->count("--sigma")) sigma = cfg.integrator.sigma.base;
      if (!cmd->count("--eta")) eta = cfg.integrator.eta.base;
    }
  }

  const auto cert = certify_minimizer(*owned, tol);
  write_text(problem_path + ".cert.json", certificate_to_json(cert, file_hash(problem_path)).dump(2) + "\n");
  std::cout << problem_path << ": f* = " << format_double(cert.f_star) << ", gap " << cert.fw_gap << " after "
            << cert.iterations << " iterations\n";
  if (graph) {
    const auto& q = static_cast<const QuadraticObjective&>(*owned);
    const auto st = ou_stationary(q, *graph, sigma, eta);
    write_text(problem_path + ".ou.json", ou_to_json(st, sigma, eta, *graph).dump(2) + "\n");
    std::cout << "OU stationary covariance trace " << format_double(st.covariance.trace()) << " (N = "
              << graph->size() << ", sigma = " << sigma << ")\n";
  }
  return 0;
}

struct GraphFlags {
  std::string config;
  std::string structure = "mean_field";
  std::string file;
  Index particles = 10;
  double p = 1.0;
  double theta = 1.0;
  std::uint64_t seed = 1;
  bool print_weights = false;
};

int run_graph_info(const GraphFlags& f) {
  InteractionGraph g = [&] {
    if (!f.config.empty()) return build_graph(resolve(load_config(f.config)), f.seed);
    if (!f.file.empty()) return InteractionGraph::from_csv(f.file, f.theta);
    if (f.structure == "mean_field") return InteractionGraph::mean_field(f.particles, f.theta);
    if (f.structure == "independent") return InteractionGraph::independent(f.particles);
    if (f.structure == "erdos_renyi") return InteractionGraph::erdos_renyi(f.particles, f.p, f.seed, f.theta);
    throw ValidationError("unknown structure '" + f.structure + "'");
  }();
  const Matrix& a = g.weights();
  std::cout << "particles                " << g.size() << '\n'
            << "theta                    " << g.theta() << '\n'
            << "connected                " << (g.connected() ? "yes" : "no") << '\n'
            << "lambda_min (theta L)     " << format_double(g.lambda_min_nonzero()) << '\n'
            << "|theta L|                " << format_double(g.laplacian_norm()) << '\n'
            << "messages per round       " << g.communication_per_round() << '\n'
            << "max |row sum - 1|        " << (a.rowwise().sum().array() - 1.0).abs().maxCoeff() << '\n'
            << "max |col sum - 1|        " << (a.colwise().sum().array() - 1.0).abs().maxCoeff() << '\n'
            << "sinkhorn retries         " << g.retries() << '\n';
  if (f.print_weights) {
    for (Index i = 0; i < a.rows(); ++i) write_csv_row(std::cout, a.row(i).transpose());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interacting stochastic mirror descent experiments"};
  app.require_subcommand(1);

  RunFlags run_flags, sweep_flags;
  auto* run = app.add_subcommand("run", "run one experiment over its seeds");
  add_run_flags(run, run_flags);
  auto* sweep = app.add_subcommand("sweep", "run the [sweep] grid of an experiment");
  add_run_flags(sweep, sweep_flags);

  OracleFlags oracle_flags;
  auto* oracle = app.add_subcommand("oracle", "certify f* for a problem file (and the OU law for quadratics)");
  oracle->add_option("target", oracle_flags.target, "problem .csv or experiment config")->required();
  oracle->add_option("--tolerance", oracle_flags.tolerance, "Frank-Wolfe gap to certify");
  oracle->add_option("--export", oracle_flags.export_path, "write a generated problem to this CSV");
  oracle->add_option("--particles", oracle_flags.particles, "OU law: mean-field particles");
  oracle->add_option("--theta", oracle_flags.theta, "OU law: interaction strength");
  oracle->add_option("--sigma", oracle_flags.sigma, "OU law: noise level");
  oracle->add_option("--eta", oracle_flags.eta, "OU law: learning rate");

  bool quick = false;
  std::string weights_file;
  auto* verify = app.add_subcommand("verify", "run the invariant and property suite");
  verify->add_flag("--quick", quick, "shorter OU run");
  verify->add_option("--weights", weights_file, "only check a weight matrix CSV");

  GraphFlags graph_flags;
  auto* info = app.add_subcommand("graph-info", "spectral summary of an interaction graph");
  info->add_option("config", graph_flags.config, "take the graph from an experiment config");
  info->add_option("--structure", graph_flags.structure, "mean_field, independent or erdos_renyi");
  info->add_option("--file", graph_flags.file, "weight matrix CSV");
  info->add_option("--particles,-n", graph_flags.particles, "number of particles");
  info->add_option("--p", graph_flags.p, "edge probability");
  info->add_option("--theta", graph_flags.theta, "interaction strength");
  info->add_option("--seed", graph_flags.seed, "graph seed (run seed for configs)");
  info->add_flag("--weights", graph_flags.print_weights, "print the weight matrix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) return run_experiment(run_flags, false, run);
    if (*sweep) return run_experiment(sweep_flags, true, sweep);
    if (*oracle) return run_oracle(oracle_flags, oracle);
    if (*info) return run_graph_info(graph_flags);
    if (*verify) {
      std::vector<CheckResult> results;
      if (!weights_file.empty()) {
        std::vector<std::string> comments;
        results.push_back(check_weights(read_csv_matrix(weights_file, &comments)));
      } else {
        results = run_verification(quick);
      }
      return print_report(std::cout, results) ? 0 : 1;
    }
  } catch (const CLI::RequiredError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return 2;
  } catch (const CertificationError& e) {
    std::cerr << "certification failed: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
