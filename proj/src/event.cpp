#include "ehd/event.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace ehd {

namespace {

std::string describe(const Event& e) {
  return "(mark " + std::to_string(e.mark) + ", t=" + std::to_string(e.time) + ")";
}

}  // namespace

EventSequence::EventSequence(std::vector<Event> events, TimeWindow window)
    : events_(std::move(events)), window_(window) {
  if (!std::isfinite(window_.start) || !std::isfinite(window_.end)) {
    throw ValidationError("sequence window must be finite");
  }
  if (window_.start > window_.end) {
    throw ValidationError("sequence window start exceeds its end");
  }
  for (std::size_t i = 0; i < events_.size(); ++i) {
    const Event& e = events_[i];
    if (!std::isfinite(e.time) || e.time < 0.0) {
      throw ValidationError("event time must be finite and non-negative: " + describe(e));
    }
    if (!window_.contains(e.time)) {
      throw ValidationError("event lies outside the observation window: " + describe(e));
    }
    if (i > 0) {
      const double prev = events_[i - 1].time;
      if (e.time == prev) {
        throw ValidationError("duplicate event time " + std::to_string(e.time) +
                              " (at most one event per instant)");
      }
      if (e.time < prev) {
        throw ValidationError("event times are not increasing at index " + std::to_string(i));
      }
    }
  }
}

std::size_t EventSequence::mark_span() const {
  std::size_t span = 0;
  for (const Event& e : events_) span = std::max<std::size_t>(span, e.mark + 1);
  return span;
}

double EventSequence::last_time_or_start() const {
  return events_.empty() ? window_.start : events_.back().time;
}

EventSequence validate_sequence(std::vector<Event> events, TimeWindow window,
                                std::size_t mark_count) {
  for (const Event& e : events) {
    if (e.mark >= mark_count) {
      throw ValidationError("mark " + std::to_string(e.mark) + " out of range for " +
                            std::to_string(mark_count) + " marks");
    }
  }
  return EventSequence(std::move(events), window);
}

Instance::Instance(EventSequence history, EventSequence target)
    : history_(std::move(history)), target_(std::move(target)) {
  if (history_.empty()) throw ValidationError("instance history is empty");
  if (target_.empty()) throw ValidationError("instance target is empty");
  if (history_.window().end != target_.window().start) {
    throw ValidationError("history window must end where the target window begins");
  }
  if (history_.events().back().time >= target_.events().front().time) {
    throw ValidationError("history events must precede every target event");
  }
}

Instance split_instance(const EventSequence& seq, double split_time) {
  const TimeWindow& w = seq.window();
  if (!(split_time > w.start && split_time < w.end)) {
    throw ValidationError("split time must lie strictly inside the window");
  }
  const auto& events = seq.events();
  const auto pivot = std::lower_bound(
      events.begin(), events.end(), split_time,
      [](const Event& e, double t) { return e.time < t; });
  std::vector<Event> history(events.begin(), pivot);
  std::vector<Event> target(pivot, events.end());
  if (history.empty()) throw ValidationError("split leaves the history empty");
  if (target.empty()) throw ValidationError("split leaves the target empty");
  return Instance(EventSequence(std::move(history), {w.start, split_time}),
                  EventSequence(std::move(target), {split_time, w.end}));
}

IndexSubset::IndexSubset(std::vector<std::size_t> indices, std::size_t universe)
    : indices_(std::move(indices)), universe_(universe) {
  std::sort(indices_.begin(), indices_.end());
  if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end()) {
    throw ValidationError("index subset contains duplicates");
  }
  if (!indices_.empty() && indices_.back() >= universe_) {
    throw ValidationError("index " + std::to_string(indices_.back()) +
                          " out of range for history of length " + std::to_string(universe_));
  }
}

IndexSubset IndexSubset::full(std::size_t universe) {
  std::vector<std::size_t> all(universe);
  std::iota(all.begin(), all.end(), std::size_t{0});
  return IndexSubset(std::move(all), universe);
}

IndexSubset IndexSubset::none(std::size_t universe) { return IndexSubset({}, universe); }

IndexSubset IndexSubset::from_mask(std::uint64_t mask, std::size_t universe) {
  if (universe > 64) throw ValidationError("bitmask subsets support at most 64 positions");
  if (universe < 64 && (mask >> universe) != 0) {
    throw ValidationError("bitmask selects positions beyond the history length");
  }
  std::vector<std::size_t> picked;
  for (std::size_t i = 0; i < universe; ++i) {
    if ((mask >> i) & 1u) picked.push_back(i);
  }
  IndexSubset s;
  s.indices_ = std::move(picked);
  s.universe_ = universe;
  return s;
}

bool IndexSubset::contains(std::size_t index) const {
  return std::binary_search(indices_.begin(), indices_.end(), index);
}

IndexSubset IndexSubset::complement() const {
  std::vector<std::size_t> rest;
  rest.reserve(universe_ - indices_.size());
  std::size_t j = 0;
  for (std::size_t i = 0; i < universe_; ++i) {
    if (j < indices_.size() && indices_[j] == i) {
      ++j;
    } else {
      rest.push_back(i);
    }
  }
  IndexSubset s;
  s.indices_ = std::move(rest);
  s.universe_ = universe_;
  return s;
}

IndexSubset IndexSubset::without(std::size_t index) const {
  IndexSubset s = *this;
  auto it = std::lower_bound(s.indices_.begin(), s.indices_.end(), index);
  if (it != s.indices_.end() && *it == index) s.indices_.erase(it);
  return s;
}

IndexSubset IndexSubset::with(std::size_t index) const {
  if (index >= universe_) throw ValidationError("index out of range");
  IndexSubset s = *this;
  auto it = std::lower_bound(s.indices_.begin(), s.indices_.end(), index);
  if (it == s.indices_.end() || *it != index) s.indices_.insert(it, index);
  return s;
}

std::optional<std::uint64_t> IndexSubset::mask() const {
  if (universe_ > 64) return std::nullopt;
  std::uint64_t m = 0;
  for (std::size_t i : indices_) m |= std::uint64_t{1} << i;
  return m;
}

EventSequence subset(const EventSequence& history, const IndexSubset& idx) {
  if (idx.universe() != history.size()) {
    throw ValidationError("index subset universe does not match the history length");
  }
  std::vector<Event> picked;
  picked.reserve(idx.size());
  for (std::size_t i : idx.indices()) picked.push_back(history[i]);
  return EventSequence(std::move(picked), history.window());
}

}  // namespace ehd
