#include "ehd/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <thread>
#include <vector>

namespace ehd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using Predicate = std::function<bool(const PplReport&)>;
using Score = std::function<double(const PplReport&)>;

bool ehd_feasible(const PplReport& r) { return r.feasible(); }
bool factual_only(const PplReport& r) { return r.c2_satisfied; }
bool counterfactual_only(const PplReport& r) { return r.c1_satisfied; }
double c1_margin(const PplReport& r) { return r.c1_margin; }
double c2_margin(const PplReport& r) { return r.c2_margin; }
double weakest_margin(const PplReport& r) { return std::min(r.c1_margin, r.c2_margin); }

// Runs body(i) for i in [0, n), striding work over `threads` workers.
template <typename Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) body(i);
    });
  }
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

PplReport evaluate_mask(PerplexityEvaluator& evaluator, std::uint64_t mask, const EhdConfig& config) {
  return evaluate_partition(
      evaluator, Partition::from_explanation(IndexSubset::from_mask(mask, evaluator.history_size())),
      config);
}

// All masks over n bits with exactly k set, in ascending numeric order.
std::vector<std::uint64_t> combinations(std::size_t n, std::size_t k) {
  std::vector<std::uint64_t> out;
  if (k == 0) {
    out.push_back(0);
    return out;
  }
  const std::uint64_t limit = std::uint64_t{1} << n;
  std::uint64_t v = (std::uint64_t{1} << k) - 1;
  while (v < limit) {
    out.push_back(v);
    const std::uint64_t low = v & (~v + 1);
    const std::uint64_t ripple = v + low;
    v = (((ripple ^ v) >> 2) / low) | ripple;
  }
  return out;
}

struct SearchOutcome {
  std::uint64_t mask{0};
  std::size_t evaluations{0};
};

// First mask (by size, then value) accepted by `accept`. The evaluation count
// is what a sequential scan would spend, whatever the thread count.
SearchOutcome exhaustive_search(PerplexityEvaluator& evaluator, const EhdConfig& config,
                                const Predicate& accept, unsigned threads) {
  const std::size_t n = evaluator.history_size();
  const std::size_t chunk = threads <= 1 ? 1 : std::size_t{256} * threads;
  std::size_t spent = 0;
  for (std::size_t k = 0; k <= n; ++k) {
    const std::vector<std::uint64_t> masks = combinations(n, k);
    for (std::size_t begin = 0; begin < masks.size(); begin += chunk) {
      const std::size_t len = std::min(chunk, masks.size() - begin);
      std::vector<char> hit(len, 0);
      parallel_for(len, threads, [&](std::size_t i) {
        hit[i] = accept(evaluate_mask(evaluator, masks[begin + i], config)) ? 1 : 0;
      });
      for (std::size_t i = 0; i < len; ++i) {
        if (hit[i]) return {masks[begin + i], spent + begin + i + 1};
      }
    }
    spent += masks.size();
  }
  // Unreachable for the EHD and single-constraint predicates: the full
  // history always satisfies them.
  return {n == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1, spent};
}

struct EliminationOutcome {
  IndexSubset d;
  std::size_t evaluations{0};
};

EliminationOutcome backward_elimination(PerplexityEvaluator& evaluator, const EhdConfig& config,
                                        const Predicate& accept, const Score& score,
                                        unsigned threads) {
  const std::size_t n = evaluator.history_size();
  IndexSubset d = IndexSubset::full(n);
  evaluate_partition(evaluator, Partition::from_explanation(d), config);
  std::size_t evaluations = 1;
  while (!d.empty()) {
    const std::vector<std::size_t> members = d.indices();
    std::vector<PplReport> reports(members.size());
    parallel_for(members.size(), threads, [&](std::size_t i) {
      reports[i] = evaluate_partition(evaluator, Partition::from_explanation(d.without(members[i])),
                                      config);
    });
    evaluations += members.size();
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (!accept(reports[i])) continue;
      if (!best || score(reports[i]) > score(reports[*best])) best = i;
    }
    if (!best) break;
    d = d.without(members[*best]);
  }
  return {std::move(d), evaluations};
}

void require_within_cap(std::size_t n, const SolverOptions& options) {
  const std::size_t cap = std::min<std::size_t>(options.brute_force_cap, 62);
  if (n > cap) {
    throw ValidationError("history of " + std::to_string(n) +
                          " events exceeds the exhaustive-search cap of " + std::to_string(cap) +
                          "; use the greedy or local solver");
  }
}

SolveReport finish(PerplexityEvaluator& evaluator, IndexSubset d, const EhdConfig& config,
                   std::string_view solver, std::size_t evaluations, const Stopwatch& clock,
                   bool optimal) {
  SolveReport report;
  report.partition = Partition::from_explanation(std::move(d));
  report.ppl = evaluate_partition(evaluator, report.partition, config);
  report.solver = std::string(solver);
  report.evaluations = evaluations;
  report.optimal = optimal;
  report.wall_time_s = clock.seconds();
  return report;
}

SolveReport single_constraint_solve(const MtppModel& model, const Instance& instance,
                                    const EhdConfig& config, const SolverOptions& options,
                                    SolverKind kind) {
  config.validate();
  const Stopwatch clock;
  PerplexityEvaluator evaluator(model, instance);
  const std::size_t n = instance.history().size();
  const bool factual = kind == SolverKind::kFaOnly;
  const Predicate accept = factual ? Predicate(factual_only) : Predicate(counterfactual_only);
  if (n <= std::min<std::size_t>(options.brute_force_cap, 62)) {
    const SearchOutcome found = exhaustive_search(evaluator, config, accept, options.threads);
    return finish(evaluator, IndexSubset::from_mask(found.mask, n), config, solver_name(kind),
                  found.evaluations, clock, false);
  }
  const Score score = factual ? Score(c2_margin) : Score(c1_margin);
  EliminationOutcome out = backward_elimination(evaluator, config, accept, score, options.threads);
  return finish(evaluator, std::move(out.d), config, solver_name(kind), out.evaluations, clock,
                false);
}

}  // namespace

void EhdConfig::validate() const {
  if (!(epsilon_l > 0.0 && epsilon_l < 1.0)) throw ValidationError("epsilon_l must lie in (0, 1)");
  if (!(epsilon_d > 0.0 && epsilon_d < 1.0)) throw ValidationError("epsilon_d must lie in (0, 1)");
  if (!(epsilon_d > epsilon_l)) throw ValidationError("epsilon_d must exceed epsilon_l");
  if (!(slack >= 0.0)) throw ValidationError("slack must be non-negative");
}

Partition Partition::from_explanation(IndexSubset d) {
  Partition p;
  p.l = d.complement();
  p.d = std::move(d);
  return p;
}

std::string_view solver_name(SolverKind kind) {
  switch (kind) {
    case SolverKind::kBrute: return "brute";
    case SolverKind::kGreedy: return "greedy";
    case SolverKind::kLocal: return "local";
    case SolverKind::kFaOnly: return "fa-only";
    case SolverKind::kCaOnly: return "ca-only";
  }
  return "unknown";
}

std::optional<SolverKind> parse_solver(std::string_view name) {
  for (SolverKind k : {SolverKind::kBrute, SolverKind::kGreedy, SolverKind::kLocal,
                       SolverKind::kFaOnly, SolverKind::kCaOnly}) {
    if (solver_name(k) == name) return k;
  }
  return std::nullopt;
}

PplReport evaluate_partition(PerplexityEvaluator& evaluator, const Partition& partition,
                             const EhdConfig& config) {
  const std::size_t n = evaluator.history_size();
  if (partition.d.universe() != n || partition.l.universe() != n ||
      partition.d.complement() != partition.l) {
    throw ValidationError("partition does not split the history into two complementary parts");
  }
  PplReport r;
  r.log_ppl_full = evaluator.log_ppl(IndexSubset::full(n));
  r.log_ppl_d = evaluator.log_ppl(partition.d);
  r.log_ppl_l = evaluator.log_ppl(partition.l);

  const double log_eps_l = std::log(config.epsilon_l);
  const double log_eps_d = std::log(config.epsilon_d);
  // With H_l empty its perplexity is +inf, so the counterfactual gap is -inf.
  const double lost = std::isinf(r.log_ppl_l) && std::isfinite(r.log_ppl_full)
                          ? -kInf
                          : r.log_ppl_full - r.log_ppl_l;
  const double kept = std::isinf(r.log_ppl_d) && std::isfinite(r.log_ppl_full)
                          ? -kInf
                          : r.log_ppl_full - r.log_ppl_d;
  r.c1_satisfied = lost <= log_eps_l + config.slack;
  r.c2_satisfied = kept >= log_eps_d - config.slack;
  r.c1_margin = log_eps_l - lost;
  r.c2_margin = kept - log_eps_d;
  r.rational = is_rational(r);
  return r;
}

PplReport evaluate_partition(const MtppModel& model, const Instance& instance,
                             const Partition& partition, const EhdConfig& config) {
  config.validate();
  PerplexityEvaluator evaluator(model, instance);
  return evaluate_partition(evaluator, partition, config);
}

bool is_rational(const PplReport& report) { return report.log_ppl_d < report.log_ppl_l; }

SolveReport brute_force_solve(const MtppModel& model, const Instance& instance,
                              const EhdConfig& config, const SolverOptions& options) {
  config.validate();
  const std::size_t n = instance.history().size();
  require_within_cap(n, options);
  const Stopwatch clock;
  PerplexityEvaluator evaluator(model, instance);
  const SearchOutcome found = exhaustive_search(evaluator, config, ehd_feasible, options.threads);
  return finish(evaluator, IndexSubset::from_mask(found.mask, n), config, "brute",
                found.evaluations, clock, true);
}

SolveReport greedy_solve(const MtppModel& model, const Instance& instance,
                         const EhdConfig& config, const SolverOptions& options) {
  config.validate();
  const Stopwatch clock;
  PerplexityEvaluator evaluator(model, instance);
  EliminationOutcome out =
      backward_elimination(evaluator, config, ehd_feasible, c2_margin, options.threads);
  return finish(evaluator, std::move(out.d), config, "greedy", out.evaluations, clock, false);
}

SolveReport local_search_solve(const MtppModel& model, const Instance& instance,
                               const EhdConfig& config, std::size_t budget,
                               const SolverOptions& options) {
  config.validate();
  if (budget < 1) throw ValidationError("local search budget must be at least 1");
  const Stopwatch clock;
  PerplexityEvaluator evaluator(model, instance);
  EliminationOutcome start =
      backward_elimination(evaluator, config, ehd_feasible, c2_margin, options.threads);
  IndexSubset d = std::move(start.d);
  std::size_t used = start.evaluations;
  PplReport current = evaluate_partition(evaluator, Partition::from_explanation(d), config);

  auto try_candidate = [&](const IndexSubset& candidate) {
    ++used;
    return evaluate_partition(evaluator, Partition::from_explanation(candidate), config);
  };

  // Greedy stops only when no single removal is feasible, so the first round
  // goes straight to swaps.
  bool removals_exhausted = true;
  bool improved = true;
  while (improved && used < budget) {
    improved = false;
    if (!removals_exhausted) {
      for (std::size_t i : d.indices()) {
        if (used >= budget) break;
        const IndexSubset candidate = d.without(i);
        const PplReport r = try_candidate(candidate);
        if (r.feasible()) {
          d = candidate;
          current = r;
          improved = true;
          break;
        }
      }
      removals_exhausted = true;
      if (improved) {
        removals_exhausted = false;
        continue;
      }
    }
    const IndexSubset outside = d.complement();
    for (std::size_t out : d.indices()) {
      for (std::size_t in : outside.indices()) {
        if (used >= budget) break;
        const IndexSubset candidate = d.without(out).with(in);
        const PplReport r = try_candidate(candidate);
        if (r.feasible() && weakest_margin(r) > weakest_margin(current)) {
          d = candidate;
          current = r;
          improved = true;
          break;
        }
      }
      if (improved || used >= budget) break;
    }
    if (improved) removals_exhausted = false;
  }
  return finish(evaluator, std::move(d), config, "local", used, clock, false);
}

SolveReport fa_only_solve(const MtppModel& model, const Instance& instance,
                          const EhdConfig& config, const SolverOptions& options) {
  return single_constraint_solve(model, instance, config, options, SolverKind::kFaOnly);
}

SolveReport ca_only_solve(const MtppModel& model, const Instance& instance,
                          const EhdConfig& config, const SolverOptions& options) {
  return single_constraint_solve(model, instance, config, options, SolverKind::kCaOnly);
}

SolveReport run_solver(SolverKind kind, const MtppModel& model, const Instance& instance,
                       const EhdConfig& config, const SolverOptions& options) {
  switch (kind) {
    case SolverKind::kBrute: return brute_force_solve(model, instance, config, options);
    case SolverKind::kGreedy: return greedy_solve(model, instance, config, options);
    case SolverKind::kLocal:
      return local_search_solve(model, instance, config, options.local_search_budget, options);
    case SolverKind::kFaOnly: return fa_only_solve(model, instance, config, options);
    case SolverKind::kCaOnly: return ca_only_solve(model, instance, config, options);
  }
  throw ValidationError("unknown solver");
}

}  // namespace ehd
