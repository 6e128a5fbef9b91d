#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "ehd/event.hpp"
#include "ehd/model.hpp"

namespace ehd {

/// Portable random stream: std::mt19937_64 (whose output sequence is fixed by
/// the C++ standard) with variates derived by hand, so results do not depend
/// on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double exponential(double rate) { return -std::log(uniform()) / rate; }
  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

 private:
  std::mt19937_64 engine_;
};

struct SimulateOptions {
  std::size_t max_events{1'000'000};
};

/// Ogata thinning over `window`, starting from an empty past.
EventSequence simulate(const HawkesParams& params, TimeWindow window, std::uint64_t seed,
                       const SimulateOptions& options = {});

/// Hawkes parameters with zero excitation, i.e. a homogeneous Poisson process.
HawkesParams poisson_params(std::vector<double> rates);

/// Compensator increments between consecutive events, the first measured from
/// the window start. Unit exponential when `model` generated `seq`.
std::vector<double> time_rescale(const MtppModel& model, const EventSequence& seq);

struct KsResult {
  double statistic{0.0};
  double p_value{1.0};
};

/// One-sample Kolmogorov-Smirnov test against Exp(1).
KsResult ks_test_unit_exponential(std::vector<double> samples);

struct PlantedInstance {
  HawkesParams model;
  Instance instance;
  /// History positions whose mark has a non-zero excitation row.
  IndexSubset ground_truth;
};

struct PlantedOptions {
  double influential_rate{0.005};
  double noise_rate{0.2};
  double branching{0.8};
  double beta{2.0};
  std::size_t attempts{500};
};

/// Builds a Hawkes model in which only some marks excite anything, then
/// simulates until a window with both kinds of history event turns up.
PlantedInstance make_planted_instance(std::size_t mark_count, std::size_t history_len,
                                      std::size_t target_len, double influence_fraction,
                                      std::uint64_t seed, const PlantedOptions& options = {});

struct RandomInstanceOptions {
  std::size_t max_marks{3};
  std::size_t max_history{8};
  std::size_t max_target{5};
};

struct RandomInstance {
  HawkesParams model;
  Instance instance;
};

/// Random stationary Hawkes model plus an instance cut from its simulation.
RandomInstance make_random_instance(std::uint64_t seed, const RandomInstanceOptions& options = {});

}  // namespace ehd
