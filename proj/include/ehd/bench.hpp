#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ehd/io.hpp"
#include "ehd/solver.hpp"

namespace ehd::bench {

/// One fixture directory: model.json, instance.json and optionally oracle.json.
struct Fixture {
  std::string dataset;
  std::string name;
  std::filesystem::path dir;
};

/// `root` is either one fixture directory or a directory of them. Results are
/// sorted by name.
std::vector<Fixture> discover_fixtures(const std::filesystem::path& root);

struct BenchOptions {
  std::filesystem::path fixtures;
  std::vector<SolverKind> solvers;
  std::filesystem::path out;
  unsigned jobs{1};
  EhdConfig config;
  SolverOptions solver_options;
  /// Timings go to "<report>.timing.json" so reports stay byte-reproducible.
  bool record_timing{true};
};

struct BenchSummary {
  std::size_t written{0};
  std::size_t skipped_existing{0};
};

std::string report_file_name(const Fixture& fixture, SolverKind solver);

/// One explain report per (fixture, solver). Existing reports are kept.
BenchSummary run_bench(const BenchOptions& options);

struct MetricsRow {
  std::string solver;
  std::string dataset;
  std::size_t instances{0};
  double mean_size_ratio{0.0};
  double feasibility_rate{0.0};
  double rationality_rate{0.0};
  /// Means over the finite margins only; NaN when none is finite.
  double mean_c1_margin{0.0};
  double mean_c2_margin{0.0};
  /// Ground-truth overlap, only for instances that carry a ground truth.
  std::optional<double> precision;
  std::optional<double> recall;
  double mean_evaluations{0.0};
  double mean_wall_time_s{0.0};

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

struct MetricsTable {
  std::vector<MetricsRow> rows;  // sorted by (solver, dataset)
};

struct LoadedRun {
  std::vector<io::StoredReport> reports;  // sorted by (dataset, instance, solver)
  std::vector<std::string> skipped;       // files that failed to parse
};

LoadedRun load_run(const std::filesystem::path& run_dir);
MetricsTable aggregate(const std::vector<io::StoredReport>& reports);

inline constexpr std::string_view kCsvHeader =
    "solver,dataset,instances,mean_size_ratio,feasibility_rate,rationality_rate,"
    "mean_c1_margin,mean_c2_margin,precision,recall,mean_evaluations,mean_wall_time_s";

std::string to_csv(const MetricsTable& table);
MetricsTable parse_csv(std::string_view text);

/// Writes plot_<solver>.csv per solver with columns
/// index,dataset,instance,c1_margin,c2_margin. Returns the files written.
std::vector<std::filesystem::path> write_plot_data(const std::vector<io::StoredReport>& reports,
                                                   const std::filesystem::path& out_dir);

}  // namespace ehd::bench
