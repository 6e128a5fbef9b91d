#include "ehd/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace ehd {

namespace {

// Kolmogorov limiting survival function Q(lambda) = P(K > lambda).
double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    const double pi = std::numbers::pi;
    double s = 0.0;
    for (int j = 1; j <= 50; ++j) {
      const double odd = 2.0 * j - 1.0;
      s += std::exp(-odd * odd * pi * pi / (8.0 * lambda * lambda));
    }
    return std::clamp(1.0 - std::sqrt(2.0 * pi) / lambda * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    s += (j % 2 == 1) ? term : -term;
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

// Exclusive window boundaries for a slice [first, last] of a simulated run.
struct SliceWindows {
  double start;
  double split;
  double end;
};

SliceWindows slice_windows(const std::vector<Event>& events, std::size_t first,
                           std::size_t history_len, std::size_t target_len, double horizon) {
  const std::size_t split_at = first + history_len;
  const std::size_t last = split_at + target_len - 1;
  SliceWindows w{};
  w.start = first == 0 ? 0.0 : events[first - 1].time;
  w.split = 0.5 * (events[split_at - 1].time + events[split_at].time);
  w.end = last + 1 < events.size() ? 0.5 * (events[last].time + events[last + 1].time) : horizon;
  return w;
}

Instance cut_instance(const std::vector<Event>& events, std::size_t first,
                      std::size_t history_len, std::size_t target_len, double horizon) {
  const SliceWindows w = slice_windows(events, first, history_len, target_len, horizon);
  const auto begin = events.begin() + static_cast<std::ptrdiff_t>(first);
  const auto mid = begin + static_cast<std::ptrdiff_t>(history_len);
  const auto end = mid + static_cast<std::ptrdiff_t>(target_len);
  return Instance(EventSequence(std::vector<Event>(begin, mid), {w.start, w.split}),
                  EventSequence(std::vector<Event>(mid, end), {w.split, w.end}));
}

double stationary_event_rate(const HawkesParams& p) {
  const std::size_t m = p.mark_count();
  const Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(m, m) - p.alpha.transpose();
  const Eigen::VectorXd mu = Eigen::Map<const Eigen::VectorXd>(p.mu.data(), m);
  return lhs.colPivHouseholderQr().solve(mu).sum();
}

}  // namespace

EventSequence simulate(const HawkesParams& params, TimeWindow window, std::uint64_t seed,
                       const SimulateOptions& options) {
  params.validate();
  if (!params.is_stationary()) {
    throw ValidationError("cannot simulate a non-stationary model (spectral radius " +
                          std::to_string(params.spectral_radius()) + ")");
  }
  if (window.start > window.end) throw ValidationError("simulation window is reversed");

  const std::size_t m = params.mark_count();
  const double beta = params.beta;
  const double total_mu = std::accumulate(params.mu.begin(), params.mu.end(), 0.0);
  std::vector<double> outgoing(m);
  for (std::size_t k = 0; k < m; ++k) outgoing[k] = params.alpha.row(k).sum();

  Rng rng(seed);
  std::vector<double> decayed(m, 0.0);
  std::vector<Event> events;
  auto total_intensity = [&] {
    double s = 0.0;
    for (std::size_t k = 0; k < m; ++k) s += outgoing[k] * decayed[k];
    return total_mu + beta * s;
  };

  double t = window.start;
  // Between events the intensity only decays, so its current value bounds
  // the future until the next acceptance.
  double bound = total_intensity();
  while (true) {
    const double candidate = t + rng.exponential(bound);
    if (candidate > window.end) break;
    const double decay = std::exp(-beta * (candidate - t));
    for (double& d : decayed) d *= decay;
    t = candidate;
    const double lambda = total_intensity();
    if (rng.uniform() * bound <= lambda) {
      double pick = rng.uniform() * lambda;
      Mark mark = static_cast<Mark>(m - 1);
      for (std::size_t j = 0; j < m; ++j) {
        double lam_j = params.mu[j];
        for (std::size_t k = 0; k < m; ++k) lam_j += beta * params.alpha(k, j) * decayed[k];
        if (pick < lam_j) {
          mark = static_cast<Mark>(j);
          break;
        }
        pick -= lam_j;
      }
      if (events.empty() || t > events.back().time) {
        events.push_back({mark, t});
        decayed[mark] += 1.0;
        if (events.size() > options.max_events) {
          throw ValidationError("simulation exceeded the event cap of " +
                                std::to_string(options.max_events));
        }
      }
    }
    bound = total_intensity();
  }
  return EventSequence(std::move(events), window);
}

HawkesParams poisson_params(std::vector<double> rates) {
  HawkesParams p;
  const auto m = static_cast<Eigen::Index>(rates.size());
  p.mu = std::move(rates);
  p.alpha = Eigen::MatrixXd::Zero(m, m);
  p.beta = 1.0;
  return p;
}

std::vector<double> time_rescale(const MtppModel& model, const EventSequence& seq) {
  std::vector<double> out;
  out.reserve(seq.size());
  const auto events = seq.view();
  double prev = seq.window().start;
  for (std::size_t i = 0; i < events.size(); ++i) {
    out.push_back(model.total_compensator(events.first(i), prev, events[i].time));
    prev = events[i].time;
  }
  return out;
}

KsResult ks_test_unit_exponential(std::vector<double> samples) {
  KsResult r;
  if (samples.empty()) return r;
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double cdf = -std::expm1(-samples[i]);
    d = std::max({d, cdf - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - cdf});
  }
  const double root = std::sqrt(n);
  r.statistic = d;
  r.p_value = kolmogorov_survival((root + 0.12 + 0.11 / root) * d);
  return r;
}

PlantedInstance make_planted_instance(std::size_t mark_count, std::size_t history_len,
                                      std::size_t target_len, double influence_fraction,
                                      std::uint64_t seed, const PlantedOptions& options) {
  if (mark_count < 2) throw ValidationError("planted instances need at least two marks");
  if (history_len < 2) throw ValidationError("planted instances need history_len >= 2");
  if (target_len < 1) throw ValidationError("planted instances need target_len >= 1");
  if (!(influence_fraction > 0.0 && influence_fraction < 1.0)) {
    throw ValidationError("influence_fraction must lie in (0, 1)");
  }

  Rng rng(seed);
  const auto rounded = static_cast<std::size_t>(
      std::lround(influence_fraction * static_cast<double>(mark_count)));
  const std::size_t n_influential = std::clamp<std::size_t>(rounded, 1, mark_count - 1);

  std::vector<Mark> order(mark_count);
  std::iota(order.begin(), order.end(), Mark{0});
  for (std::size_t i = mark_count - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);
  std::vector<bool> influential(mark_count, false);
  for (std::size_t i = 0; i < n_influential; ++i) influential[order[i]] = true;

  HawkesParams params;
  params.mu.resize(mark_count);
  params.alpha = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(mark_count),
                                       static_cast<Eigen::Index>(mark_count));
  params.beta = options.beta;
  for (std::size_t k = 0; k < mark_count; ++k) {
    const double jitter = rng.uniform(0.75, 1.25);
    params.mu[k] = (influential[k] ? options.influential_rate : options.noise_rate) * jitter;
    if (!influential[k]) continue;
    double row = 0.0;
    for (std::size_t j = 0; j < mark_count; ++j) {
      if (!influential[j]) continue;
      params.alpha(k, j) = rng.uniform(0.5, 1.5);
      row += params.alpha(k, j);
    }
    params.alpha.row(k) *= options.branching / row;
  }

  const std::size_t span = history_len + target_len;
  const double horizon = 8.0 * static_cast<double>(span) / stationary_event_rate(params);
  for (std::size_t attempt = 0; attempt < options.attempts; ++attempt) {
    const EventSequence run = simulate(params, {0.0, horizon}, rng.next());
    const auto& events = run.events();
    if (events.size() < span) continue;
    const std::size_t slots = events.size() - span + 1;
    const std::size_t offset = rng.below(slots);
    for (std::size_t step = 0; step < slots; ++step) {
      const std::size_t first = (offset + step) % slots;
      std::size_t infl_history = 0;
      for (std::size_t i = first; i < first + history_len; ++i) {
        infl_history += influential[events[i].mark] ? 1 : 0;
      }
      if (infl_history == 0 || infl_history == history_len) continue;
      std::size_t infl_target = 0;
      for (std::size_t i = first + history_len; i < first + span; ++i) {
        infl_target += influential[events[i].mark] ? 1 : 0;
      }
      // Targets that nothing could have excited make the instance uninformative.
      if (2 * infl_target < target_len) continue;

      Instance instance = cut_instance(events, first, history_len, target_len, horizon);
      std::vector<std::size_t> truth;
      for (std::size_t i = 0; i < history_len; ++i) {
        if (influential[instance.history()[i].mark]) truth.push_back(i);
      }
      return PlantedInstance{params, std::move(instance), IndexSubset(std::move(truth), history_len)};
    }
  }
  throw ValidationError("planted instance generation budget exhausted");
}

RandomInstance make_random_instance(std::uint64_t seed, const RandomInstanceOptions& options) {
  Rng rng(seed);
  const std::size_t m = 1 + rng.below(options.max_marks);
  HawkesParams params;
  params.mu.resize(m);
  params.alpha = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  for (std::size_t k = 0; k < m; ++k) {
    params.mu[k] = rng.uniform(0.1, 1.0);
    for (std::size_t j = 0; j < m; ++j) {
      if (rng.uniform() < 0.6) params.alpha(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = rng.uniform();
    }
  }
  const double radius = params.spectral_radius();
  const double target_radius = rng.uniform(0.2, 0.9);
  // Nilpotent matrices report round-off sized radii; leave those unscaled.
  if (radius > 1e-4) params.alpha *= target_radius / radius;
  params.beta = rng.uniform(0.5, 3.0);

  const std::size_t history_len = 1 + rng.below(options.max_history);
  const std::size_t target_len = 1 + rng.below(options.max_target);
  const std::size_t span = history_len + target_len;
  const double horizon = 4.0 * static_cast<double>(span) / stationary_event_rate(params) + 1.0;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const EventSequence run = simulate(params, {0.0, horizon}, rng.next());
    const auto& events = run.events();
    if (events.size() < span) continue;
    const std::size_t first = rng.below(events.size() - span + 1);
    return RandomInstance{params, cut_instance(events, first, history_len, target_len, horizon)};
  }
  throw ValidationError("random instance generation budget exhausted");
}

}  // namespace ehd
