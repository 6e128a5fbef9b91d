#pragma once

#include <cstddef>
#include <cstdint>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

#include "ehd/event.hpp"
#include "ehd/model.hpp"

namespace ehd {

/// Log-perplexity of a target sequence under some history subset.
///
/// value = -(1/|x|) * sum_i log p(x_i | x_<i, H_subset), or +inf when the
/// subset is empty or any target event has zero density. Perplexity itself is
/// exp(value) and carries units of 1/time, so only differences of log values
/// are meaningful across instances.
struct LogPpl {
  double value{0.0};
  std::vector<double> event_logliks;

  bool finite() const;
};

/// Each target event is conditioned on the selected history events plus all
/// earlier targets. The first target's survival term runs from the last
/// event of the full history, whatever the subset, so dropping events that
/// excite nothing leaves the value unchanged.
LogPpl log_perplexity(const MtppModel& model, const Instance& instance, const IndexSubset& subset);

double perplexity(const MtppModel& model, const Instance& instance, const IndexSubset& subset);

/// Subset-keyed cache of log-perplexity values for one (model, instance)
/// pair. Histories longer than 64 events bypass the cache. Safe to call from
/// several threads at once.
class PerplexityEvaluator {
 public:
  static constexpr std::size_t kDefaultCapacity = std::size_t{1} << 20;

  PerplexityEvaluator(const MtppModel& model, const Instance& instance,
                      std::size_t capacity = kDefaultCapacity);

  const MtppModel& model() const { return model_; }
  const Instance& instance() const { return instance_; }
  std::size_t history_size() const { return instance_.history().size(); }

  double log_ppl(const IndexSubset& subset);
  double log_ppl_mask(std::uint64_t mask);
  /// Full diagnostics, always computed afresh.
  LogPpl evaluate(const IndexSubset& subset) const;

  std::size_t cached() const;

 private:
  double compute(const IndexSubset& subset) const;

  const MtppModel& model_;
  const Instance& instance_;
  std::size_t capacity_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::uint64_t, double> memo_;
};

}  // namespace ehd
