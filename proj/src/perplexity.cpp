#include "ehd/perplexity.hpp"

#include <cmath>
#include <limits>
#include <mutex>

namespace ehd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

bool LogPpl::finite() const { return std::isfinite(value); }

LogPpl log_perplexity(const MtppModel& model, const Instance& instance, const IndexSubset& subset) {
  const EventSequence kept = ehd::subset(instance.history(), subset);
  LogPpl out;
  if (kept.empty()) {
    out.value = kInf;
    return out;
  }
  out.event_logliks =
      model.sequential_logliks(kept.view(), instance.target().view(), instance.anchor_time());
  double sum = 0.0;
  for (double v : out.event_logliks) sum += v;
  out.value = std::isfinite(sum) ? -sum / static_cast<double>(out.event_logliks.size()) : kInf;
  return out;
}

double perplexity(const MtppModel& model, const Instance& instance, const IndexSubset& subset) {
  return std::exp(log_perplexity(model, instance, subset).value);
}

PerplexityEvaluator::PerplexityEvaluator(const MtppModel& model, const Instance& instance,
                                         std::size_t capacity)
    : model_(model), instance_(instance), capacity_(capacity) {}

double PerplexityEvaluator::compute(const IndexSubset& subset) const {
  return log_perplexity(model_, instance_, subset).value;
}

LogPpl PerplexityEvaluator::evaluate(const IndexSubset& subset) const {
  return log_perplexity(model_, instance_, subset);
}

double PerplexityEvaluator::log_ppl(const IndexSubset& subset) {
  const auto mask = subset.mask();
  if (!mask) return compute(subset);
  {
    std::shared_lock lock(mutex_);
    if (auto it = memo_.find(*mask); it != memo_.end()) return it->second;
  }
  const double value = compute(subset);
  std::unique_lock lock(mutex_);
  if (memo_.size() < capacity_) memo_.emplace(*mask, value);
  return value;
}

double PerplexityEvaluator::log_ppl_mask(std::uint64_t mask) {
  return log_ppl(IndexSubset::from_mask(mask, history_size()));
}

std::size_t PerplexityEvaluator::cached() const {
  std::shared_lock lock(mutex_);
  return memo_.size();
}

}  // namespace ehd
