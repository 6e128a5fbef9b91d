#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ehd/event.hpp"

namespace ehd {

/// Black-box marked temporal point process.
///
/// Implementations answer questions about the conditional intensity given a
/// set of past events. In every method only the events of `conditioning`
/// that are strictly earlier than the query time contribute. Models are
/// immutable and every method is pure, so one instance can be shared freely
/// across threads.
class MtppModel {
 public:
  virtual ~MtppModel() = default;

  virtual std::size_t mark_count() const = 0;

  /// lambda*(mark, t).
  virtual double intensity(std::span<const Event> conditioning, Mark mark, double t) const = 0;

  /// Sum over marks of the integral of lambda* over [a, b].
  virtual double total_compensator(std::span<const Event> conditioning, double a,
                                   double b) const = 0;

  /// A positive lower bound on the total intensity at any time and history.
  virtual double total_rate_floor() const = 0;

  /// Log density of each target event given `prefix` plus all earlier
  /// targets. The survival term of target 0 starts at `observed_until`; each
  /// later one starts at the previous target. The generic version composes
  /// intensity() and total_compensator(); models with a recursive form
  /// override it.
  virtual std::vector<double> sequential_logliks(std::span<const Event> prefix,
                                                 std::span<const Event> targets,
                                                 double observed_until) const;
};

/// Exponential-kernel Hawkes parameters. alpha(k, m) is the branching ratio
/// from source mark k to target mark m; the kernel is alpha * beta * exp(-beta * tau).
struct HawkesParams {
  std::vector<double> mu;
  Eigen::MatrixXd alpha;
  double beta{1.0};

  std::size_t mark_count() const { return mu.size(); }

  /// Throws ValidationError unless mu > 0, alpha >= 0, beta > 0 and shapes agree.
  void validate() const;
  double spectral_radius() const;
  bool is_stationary() const { return spectral_radius() < 1.0; }
};

class HawkesModel final : public MtppModel {
 public:
  explicit HawkesModel(HawkesParams params);

  const HawkesParams& params() const { return params_; }

  std::size_t mark_count() const override { return params_.mark_count(); }
  double intensity(std::span<const Event> conditioning, Mark mark, double t) const override;
  double total_compensator(std::span<const Event> conditioning, double a,
                           double b) const override;
  double total_rate_floor() const override { return total_mu_; }
  std::vector<double> sequential_logliks(std::span<const Event> prefix,
                                         std::span<const Event> targets,
                                         double observed_until) const override;

 private:
  HawkesParams params_;
  std::vector<double> outgoing_;  // row sums of alpha
  double total_mu_{0.0};
};

/// Homogeneous Poisson process with one rate per mark.
class PoissonModel final : public MtppModel {
 public:
  explicit PoissonModel(std::vector<double> rates);

  const std::vector<double>& rates() const { return rates_; }

  std::size_t mark_count() const override { return rates_.size(); }
  double intensity(std::span<const Event> conditioning, Mark mark, double t) const override;
  double total_compensator(std::span<const Event> conditioning, double a,
                           double b) const override;
  double total_rate_floor() const override { return total_; }

 private:
  std::vector<double> rates_;
  double total_{0.0};
};

struct Prediction {
  double t_bar{0.0};
  Mark m_bar{0};
  /// (time, total density) samples over the integration range.
  std::vector<std::pair<double, double>> density_grid;
  double tail_mass{0.0};
};

struct PredictOptions {
  /// The expectation integrates over (t_l, t_l + horizon_scale / total_rate_floor].
  double horizon_scale{40.0};
  double max_tail_mass{1e-6};
  double relative_tolerance{1e-10};
};

double intensity_at(const MtppModel& model, const EventSequence& conditioning, Mark mark,
                    double t);

double compensator(const MtppModel& model, const EventSequence& conditioning, double a,
                   double b);

/// p*(mark, t): intensity times survival since the last observation time.
/// That is the last conditioning event, or the window start when there is
/// none, unless `observed_until` overrides it.
double next_event_density(const MtppModel& model, const EventSequence& conditioning, Mark mark,
                          double t, std::optional<double> observed_until = std::nullopt);

/// log p*(event); -inf when the density vanishes.
double event_loglik(const MtppModel& model, const EventSequence& conditioning,
                    const Event& event, std::optional<double> observed_until = std::nullopt);

/// Negative log-likelihood of `seq` over its window. Conditioning events
/// excite but contribute no log-intensity terms. +inf if an observed event has
/// zero intensity.
double sequence_nll(const MtppModel& model, const EventSequence& conditioning,
                    const EventSequence& seq);

Prediction predict_next(const MtppModel& model, const EventSequence& conditioning,
                        const PredictOptions& options = {});

}  // namespace ehd
