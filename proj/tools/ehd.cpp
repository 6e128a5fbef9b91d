// Command-line front end: simulate, fit, explain, bench, report.
//
// Exit codes: 0 success, 2 usage or validation error, 3 numerical failure.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ehd/bench.hpp"
#include "ehd/fitting.hpp"
#include "ehd/io.hpp"
#include "ehd/simulation.hpp"
#include "ehd/solver.hpp"

namespace fs = std::filesystem;
using ehd::io::json;

namespace {

constexpr int kUsageError = 2;
constexpr int kNumericalError = 3;

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("EHD_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ehd::ValidationError("EHD_SEED is not an unsigned integer");
    }
  }
  return 0;
}

std::string format_indices(const ehd::IndexSubset& s) {
  std::ostringstream out;
  out << '{';
  for (std::size_t i = 0; i < s.size(); ++i) out << (i ? ", " : "") << s.indices()[i];
  out << '}';
  return out.str();
}

// Thresholds and solver settings shared by explain and bench. Flags beat the
// config file, which beats the built-in defaults.
struct SolveFlags {
  std::optional<double> epsilon_d;
  std::optional<double> epsilon_l;
  std::optional<double> slack;
  std::optional<std::size_t> budget;
  std::optional<std::size_t> cap;
  std::string config_file;
  unsigned jobs{1};

  void attach(CLI::App* cmd) {
    cmd->add_option("--epsilon-d", epsilon_d, "factual threshold (default 0.9)");
    cmd->add_option("--epsilon-l", epsilon_l, "counterfactual threshold (default 0.5)");
    cmd->add_option("--slack", slack, "constraint slack in nats (default 0)");
    cmd->add_option("--budget", budget, "local search evaluation budget");
    cmd->add_option("--cap", cap, "longest history for exhaustive search");
    cmd->add_option("--config", config_file, "JSON file with default settings");
    cmd->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  }

  std::pair<ehd::EhdConfig, ehd::SolverOptions> resolve() const {
    ehd::EhdConfig config;
    ehd::SolverOptions options;
    if (!config_file.empty()) {
      const json j = ehd::io::read_json(config_file);
      config.epsilon_d = j.value("epsilon_d", config.epsilon_d);
      config.epsilon_l = j.value("epsilon_l", config.epsilon_l);
      config.slack = j.value("slack", config.slack);
      options.local_search_budget = j.value("budget", options.local_search_budget);
      options.brute_force_cap = j.value("cap", options.brute_force_cap);
    }
    if (epsilon_d) config.epsilon_d = *epsilon_d;
    if (epsilon_l) config.epsilon_l = *epsilon_l;
    if (slack) config.slack = *slack;
    if (budget) options.local_search_budget = *budget;
    if (cap) options.brute_force_cap = *cap;
    options.threads = jobs;
    config.validate();
    return {config, options};
  }
};

int run_simulate(const fs::path& model_path, std::size_t n, double horizon,
                 const std::optional<std::uint64_t>& seed_flag, const fs::path& out) {
  if (!(horizon > 0.0)) throw ehd::ValidationError("--horizon must be positive");
  if (n < 1) throw ehd::ValidationError("--n must be at least 1");
  const ehd::io::ModelFile model = ehd::io::read_model(model_path);
  const std::uint64_t seed = resolve_seed(seed_flag);
  std::vector<ehd::io::SequenceRecord> records;
  records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    records.push_back({"seq-" + std::to_string(i),
                       ehd::simulate(model.params, {0.0, horizon}, seed + i), {}});
  }
  ehd::io::write_text_atomic(out, ehd::io::sequences_to_jsonl(records));
  std::cout << "wrote " << n << " sequences to " << out.string() << "\n";
  return 0;
}

int run_fit(const fs::path& data, std::size_t marks, bool poisson, std::size_t max_iterations,
            double tolerance, const std::optional<std::uint64_t>& seed_flag, unsigned jobs,
            const fs::path& out, const fs::path& diag_path) {
  if (marks < 1) throw ehd::ValidationError("--marks must be positive");
  const auto records = ehd::io::read_sequences(data, marks);
  if (records.empty()) throw ehd::ValidationError("dataset " + data.string() + " is empty");
  std::vector<ehd::EventSequence> dataset;
  dataset.reserve(records.size());
  for (const auto& r : records) dataset.push_back(r.sequence);

  ehd::FitConfig config;
  config.fit_excitation = !poisson;
  config.max_iterations = max_iterations;
  config.gradient_tolerance = tolerance;
  config.threads = jobs;
  const ehd::FitResult fit = ehd::fit_mle(dataset, marks, config, resolve_seed(seed_flag));

  ehd::io::ModelFile model{poisson ? ehd::io::ModelFile::Kind::kPoisson
                                   : ehd::io::ModelFile::Kind::kHawkes,
                           fit.params};
  ehd::io::write_text_atomic(out, ehd::io::model_to_json(model).dump(2) + "\n");
  const json diag = {{"iterations", fit.iterations},
                     {"initial_nll", fit.initial_nll},
                     {"final_nll", fit.final_nll},
                     {"gradient_norm", fit.gradient_norm},
                     {"converged", fit.converged},
                     {"stationary", fit.stationary},
                     {"sequences", dataset.size()}};
  ehd::io::write_text_atomic(diag_path, diag.dump(2) + "\n");
  if (!fit.stationary) {
    std::cerr << "warning: fitted excitation matrix has spectral radius >= 1\n";
  }
  std::cout << "final NLL " << fit.final_nll << " after " << fit.iterations << " iterations\n";
  return 0;
}

int run_explain(const fs::path& model_path, const fs::path& instance_path,
                const std::string& solver_name, const SolveFlags& flags, const fs::path& out) {
  const auto solver = ehd::parse_solver(solver_name);
  if (!solver) throw ehd::ValidationError("unknown solver \"" + solver_name + "\"");
  const auto [config, options] = flags.resolve();
  const ehd::io::ModelFile model_file = ehd::io::read_model(model_path);
  const auto model = model_file.build();
  if (model_file.kind == ehd::io::ModelFile::Kind::kHawkes && !model_file.params.is_stationary()) {
    std::cerr << "warning: model is not stationary\n";
  }
  const ehd::io::InstanceFile inst = ehd::io::read_instance(instance_path, model->mark_count());
  const ehd::SolveReport report = ehd::run_solver(*solver, *model, inst.instance, config, options);

  const fs::path instance_dir = fs::absolute(instance_path).parent_path();
  const ehd::io::ReportMeta meta{instance_dir.parent_path().filename().string(),
                                 instance_dir.filename().string(), inst.ground_truth};
  if (!out.empty()) {
    ehd::io::write_text_atomic(out, ehd::io::report_to_json(report, config, meta, true).dump(2) + "\n");
  }
  std::cout << "H_d = " << format_indices(report.partition.d) << " (" << report.size() << " of "
            << inst.instance.history().size() << " events)\n"
            << "feasible: " << (report.ppl.feasible() ? "yes" : "no")
            << "  rational: " << (report.ppl.rational ? "yes" : "no") << "\n";
  return 0;
}

int run_bench(const fs::path& fixtures, const std::string& solvers, const SolveFlags& flags,
              const fs::path& out) {
  ehd::bench::BenchOptions options;
  options.fixtures = fixtures;
  options.out = out;
  std::stringstream list(solvers);
  for (std::string name; std::getline(list, name, ',');) {
    const auto kind = ehd::parse_solver(name);
    if (!kind) throw ehd::ValidationError("unknown solver \"" + name + "\"");
    options.solvers.push_back(*kind);
  }
  if (options.solvers.empty()) throw ehd::ValidationError("no solvers given");
  std::tie(options.config, options.solver_options) = flags.resolve();
  options.jobs = flags.jobs;
  const ehd::bench::BenchSummary summary = ehd::bench::run_bench(options);
  std::cout << "wrote " << summary.written << " reports, kept " << summary.skipped_existing
            << " existing\n";
  return 0;
}

int run_report(const fs::path& run_dir, const fs::path& out, const fs::path& plot_dir) {
  const ehd::bench::LoadedRun run = ehd::bench::load_run(run_dir);
  const ehd::bench::MetricsTable table = ehd::bench::aggregate(run.reports);
  ehd::io::write_text_atomic(out, ehd::bench::to_csv(table));
  if (!plot_dir.empty()) ehd::bench::write_plot_data(run.reports, plot_dir);

  std::size_t warnings = run.skipped.size();
  if (!run.skipped.empty()) {
    std::cerr << "skipped files:\n";
    for (const auto& s : run.skipped) std::cerr << "  " << s << "\n";
  }
  if (run.reports.empty()) {
    std::cerr << "warning: no reports found in " << run_dir.string() << "\n";
    ++warnings;
  }
  std::cout << table.rows.size() << " rows written to " << out.string();
  if (warnings > 0) std::cout << " (" << warnings << " warnings)";
  std::cout << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimal rational explanations of event histories for MTPP models"};
  app.require_subcommand(1);

  fs::path model_path, out, data, instance_path, fixtures, run_dir, plot_dir;
  fs::path diag_path = "fit_diag.json";
  std::size_t n = 1, marks = 0, max_iterations = 500;
  double horizon = 0.0, tolerance = 1e-5;
  std::optional<std::uint64_t> seed;
  bool poisson = false;
  std::string solver = "brute";
  std::string solvers = "brute,greedy,local";
  unsigned fit_jobs = 1;
  SolveFlags explain_flags, bench_flags;

  auto* sim = app.add_subcommand("simulate", "simulate sequences from a model file");
  sim->add_option("--model", model_path, "model JSON")->required();
  sim->add_option("--n", n, "number of sequences")->required();
  sim->add_option("--horizon", horizon, "window length")->required();
  sim->add_option("--seed", seed, "base seed (falls back to EHD_SEED)");
  sim->add_option("-o,--out", out, "output JSONL")->required();

  auto* fit = app.add_subcommand("fit", "maximum-likelihood fit of a Hawkes model");
  fit->add_option("--data", data, "input JSONL")->required();
  fit->add_option("--marks", marks, "mark count")->required();
  fit->add_flag("--poisson", poisson, "fit baseline rates only");
  fit->add_option("--max-iter", max_iterations, "iteration cap");
  fit->add_option("--tol", tolerance, "gradient norm tolerance");
  fit->add_option("--seed", seed, "seed (falls back to EHD_SEED)");
  fit->add_option("--jobs", fit_jobs, "worker threads")->check(CLI::PositiveNumber);
  fit->add_option("-o,--out", out, "output model JSON")->required();
  fit->add_option("--diag", diag_path, "fit diagnostics JSON");

  auto* explain = app.add_subcommand("explain", "explain one instance");
  explain->add_option("--model", model_path, "model JSON")->required();
  explain->add_option("--instance", instance_path, "instance JSON")->required();
  explain->add_option("--solver", solver, "brute, greedy, local, fa-only or ca-only");
  explain_flags.attach(explain);
  explain->add_option("-o,--out", out, "report JSON");

  auto* bench = app.add_subcommand("bench", "run solvers over a fixture directory");
  bench->add_option("--fixtures", fixtures, "fixture directory")->required();
  bench->add_option("--solvers", solvers, "comma-separated solver list");
  bench_flags.attach(bench);
  bench->add_option("-o,--out", out, "run directory")->required();

  auto* report = app.add_subcommand("report", "aggregate a run directory");
  report->add_option("--run", run_dir, "run directory")->required();
  report->add_option("-o,--out", out, "metrics CSV")->required();
  report->add_option("--plot-dir", plot_dir, "directory for plot-data CSVs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (sim->parsed()) return run_simulate(model_path, n, horizon, seed, out);
    if (fit->parsed()) {
      return run_fit(data, marks, poisson, max_iterations, tolerance, seed, fit_jobs, out, diag_path);
    }
    if (explain->parsed()) return run_explain(model_path, instance_path, solver, explain_flags, out);
    if (bench->parsed()) return run_bench(fixtures, solvers, bench_flags, out);
    if (report->parsed()) return run_report(run_dir, out, plot_dir);
  } catch (const ehd::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const ehd::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kNumericalError;
  }
  return kUsageError;
}
