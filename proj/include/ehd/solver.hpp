#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "ehd/event.hpp"
#include "ehd/model.hpp"
#include "ehd/perplexity.hpp"

namespace ehd {

/// Thresholds of the combined factual / counterfactual problem.
struct EhdConfig {
  double epsilon_d{0.9};
  double epsilon_l{0.5};
  /// Loosens both constraints by this many nats. Zero means exact comparisons.
  double slack{0.0};

  /// Requires 0 < epsilon_l < epsilon_d < 1 and slack >= 0.
  void validate() const;
};

/// H_d (the explanation) and H_l (everything else).
struct Partition {
  IndexSubset d;
  IndexSubset l;

  static Partition from_explanation(IndexSubset d);
  friend bool operator==(const Partition&, const Partition&) = default;
};

struct PplReport {
  double log_ppl_full{0.0};
  double log_ppl_d{0.0};
  double log_ppl_l{0.0};
  /// Counterfactual: log_ppl_full - log_ppl_l <= log epsilon_l.
  bool c1_satisfied{false};
  /// Factual: log_ppl_full - log_ppl_d >= log epsilon_d.
  bool c2_satisfied{false};
  bool rational{false};
  /// Slack in each constraint, log scale; non-negative iff satisfied.
  double c1_margin{0.0};
  double c2_margin{0.0};

  bool feasible() const { return c1_satisfied && c2_satisfied; }
  friend bool operator==(const PplReport&, const PplReport&) = default;
};

enum class SolverKind { kBrute, kGreedy, kLocal, kFaOnly, kCaOnly };

std::string_view solver_name(SolverKind kind);
/// Accepts the CLI spellings: brute, greedy, local, fa-only, ca-only.
std::optional<SolverKind> parse_solver(std::string_view name);

struct SolveReport {
  Partition partition;
  PplReport ppl;
  std::string solver;
  std::size_t evaluations{0};
  double wall_time_s{0.0};
  /// Set only by the exhaustive EHD search.
  bool optimal{false};

  std::size_t size() const { return partition.d.size(); }
};

struct SolverOptions {
  unsigned threads{1};
  /// Longest history the exhaustive searches accept.
  std::size_t brute_force_cap{22};
  /// Total evaluations allowed to local search, the greedy start included.
  std::size_t local_search_budget{2000};
};

PplReport evaluate_partition(const MtppModel& model, const Instance& instance,
                             const Partition& partition, const EhdConfig& config);
PplReport evaluate_partition(PerplexityEvaluator& evaluator, const Partition& partition,
                             const EhdConfig& config);

/// Strictly lower perplexity on the explanation side.
bool is_rational(const PplReport& report);

/// Smallest feasible H_d, scanning by size and then by ascending bitmask.
SolveReport brute_force_solve(const MtppModel& model, const Instance& instance,
                              const EhdConfig& config, const SolverOptions& options = {});

/// Backward elimination from the full history.
SolveReport greedy_solve(const MtppModel& model, const Instance& instance,
                         const EhdConfig& config, const SolverOptions& options = {});

/// Greedy start, then single removals and one-for-one swaps.
SolveReport local_search_solve(const MtppModel& model, const Instance& instance,
                               const EhdConfig& config, std::size_t budget,
                               const SolverOptions& options = {});

/// Baseline: smallest H_d meeting the factual constraint alone.
SolveReport fa_only_solve(const MtppModel& model, const Instance& instance,
                          const EhdConfig& config, const SolverOptions& options = {});

/// Baseline: smallest H_d meeting the counterfactual constraint alone.
SolveReport ca_only_solve(const MtppModel& model, const Instance& instance,
                          const EhdConfig& config, const SolverOptions& options = {});

SolveReport run_solver(SolverKind kind, const MtppModel& model, const Instance& instance,
                       const EhdConfig& config, const SolverOptions& options = {});

}  // namespace ehd
