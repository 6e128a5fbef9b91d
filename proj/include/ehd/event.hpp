#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ehd {

/// Input that violates a documented precondition or data invariant.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine failed to reach its accuracy target.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Mark = std::uint32_t;

struct Event {
  Mark mark{0};
  double time{0.0};

  friend bool operator==(const Event&, const Event&) = default;
};

/// Closed observation interval [start, end].
struct TimeWindow {
  double start{0.0};
  double end{0.0};

  double length() const { return end - start; }
  bool contains(double t) const { return t >= start && t <= end; }
  friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

/// Strictly time-ordered events inside a closed window. Immutable once built.
class EventSequence {
 public:
  EventSequence() = default;

  /// Checks ordering, window membership and non-negativity. Mark range is
  /// checked by validate_sequence, which knows the mark count.
  EventSequence(std::vector<Event> events, TimeWindow window);

  const std::vector<Event>& events() const { return events_; }
  std::span<const Event> view() const { return events_; }
  const TimeWindow& window() const { return window_; }
  std::size_t size() const { return events_.size(); }
  bool empty() const { return events_.empty(); }
  const Event& operator[](std::size_t i) const { return events_[i]; }

  /// Largest mark id plus one, or 0 for an empty sequence.
  std::size_t mark_span() const;

  /// Time of the last event, or the window start when empty.
  double last_time_or_start() const;

  friend bool operator==(const EventSequence&, const EventSequence&) = default;

 private:
  std::vector<Event> events_;
  TimeWindow window_;
};

/// Builds a sequence and rejects anything that is not a simple MTPP
/// realisation over `mark_count` marks.
EventSequence validate_sequence(std::vector<Event> events, TimeWindow window,
                                std::size_t mark_count);

/// A history H followed by the target sequence x it is meant to explain.
class Instance {
 public:
  Instance(EventSequence history, EventSequence target);

  const EventSequence& history() const { return history_; }
  const EventSequence& target() const { return target_; }

  /// The last history event time. The survival term of the first target
  /// event is measured from here for every history subset.
  double anchor_time() const { return history_.events().back().time; }

 private:
  EventSequence history_;
  EventSequence target_;
};

/// Splits at `split_time`; events at exactly `split_time` go to the target.
Instance split_instance(const EventSequence& seq, double split_time);

/// Set of history positions, kept sorted and duplicate-free.
class IndexSubset {
 public:
  IndexSubset() = default;
  IndexSubset(std::vector<std::size_t> indices, std::size_t universe);

  static IndexSubset full(std::size_t universe);
  static IndexSubset none(std::size_t universe);
  /// Bit i of `mask` selects position i. Requires universe <= 64.
  static IndexSubset from_mask(std::uint64_t mask, std::size_t universe);

  const std::vector<std::size_t>& indices() const { return indices_; }
  std::size_t universe() const { return universe_; }
  std::size_t size() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }
  bool contains(std::size_t index) const;

  IndexSubset complement() const;
  IndexSubset without(std::size_t index) const;
  IndexSubset with(std::size_t index) const;

  /// Bitmask form, available when universe <= 64.
  std::optional<std::uint64_t> mask() const;

  friend bool operator==(const IndexSubset&, const IndexSubset&) = default;

 private:
  std::vector<std::size_t> indices_;
  std::size_t universe_{0};
};

/// Materialises the selected events; the window is kept as is.
EventSequence subset(const EventSequence& history, const IndexSubset& idx);

}  // namespace ehd
