#pragma once

// Slow, direct re-derivations used as oracles by the test suites.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <vector>

#include "ehd/event.hpp"
#include "ehd/model.hpp"
#include "ehd/perplexity.hpp"
#include "ehd/solver.hpp"

namespace ehd::testing {

inline std::filesystem::path fixtures_dir() { return EHD_FIXTURES_DIR; }

inline HawkesParams hawkes(std::vector<double> mu, std::vector<std::vector<double>> alpha,
                           double beta) {
  HawkesParams p;
  const auto m = static_cast<Eigen::Index>(mu.size());
  p.mu = std::move(mu);
  p.alpha = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index k = 0; k < m; ++k) {
    for (Eigen::Index j = 0; j < m; ++j) p.alpha(k, j) = alpha[k][j];
  }
  p.beta = beta;
  return p;
}

// mu_m + sum over earlier events of alpha * beta * exp(-beta * lag), summed
// term by term.
inline double naive_intensity(const HawkesParams& p, const std::vector<Event>& past, Mark m,
                              double t) {
  double lambda = p.mu[m];
  for (const Event& e : past) {
    if (e.time < t) lambda += p.alpha(e.mark, m) * p.beta * std::exp(-p.beta * (t - e.time));
  }
  return lambda;
}

// Integral of the total intensity over [a, b], one kernel at a time.
inline double naive_compensator(const HawkesParams& p, const std::vector<Event>& past, double a,
                                double b) {
  double total = 0.0;
  for (double mu : p.mu) total += mu * (b - a);
  for (const Event& e : past) {
    if (e.time >= b) continue;
    const double from = std::max(a, e.time);
    const double out = p.alpha.row(e.mark).sum();
    total += out * (std::exp(-p.beta * (from - e.time)) - std::exp(-p.beta * (b - e.time)));
  }
  return total;
}

// Log-perplexity straight from the definition: each target conditioned on
// the chosen history plus earlier targets, survival of the first target from
// the last history event.
inline double naive_log_ppl(const HawkesParams& p, const Instance& inst, const IndexSubset& s) {
  if (s.empty()) return std::numeric_limits<double>::infinity();
  std::vector<Event> past;
  for (std::size_t i : s.indices()) past.push_back(inst.history()[i]);
  double from = inst.history().events().back().time;
  double sum = 0.0;
  for (const Event& x : inst.target().events()) {
    const double lambda = naive_intensity(p, past, x.mark, x.time);
    if (lambda <= 0.0) return std::numeric_limits<double>::infinity();
    sum += std::log(lambda) - naive_compensator(p, past, from, x.time);
    past.push_back(x);
    from = x.time;
  }
  return -sum / static_cast<double>(inst.target().size());
}

// Constraint check from the raw definitions, no margins or slack.
inline bool naive_feasible(double full, double d, double l, const EhdConfig& c) {
  return full - l <= std::log(c.epsilon_l) && full - d >= std::log(c.epsilon_d);
}

// Sizes of all feasible explanations by exhaustive enumeration.
inline std::vector<std::size_t> feasible_count_by_size(const HawkesParams& p,
                                                        const Instance& inst,
                                                        const EhdConfig& c) {
  const std::size_t n = inst.history().size();
  const double full = naive_log_ppl(p, inst, IndexSubset::full(n));
  std::vector<std::size_t> counts(n + 1, 0);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    const IndexSubset d = IndexSubset::from_mask(mask, n);
    if (naive_feasible(full, naive_log_ppl(p, inst, d), naive_log_ppl(p, inst, d.complement()), c)) {
      ++counts[d.size()];
    }
  }
  return counts;
}

inline double relative_error(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

}  // namespace ehd::testing
