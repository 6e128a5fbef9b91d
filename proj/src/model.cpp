#include "ehd/model.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>

namespace ehd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double safe_log(double x) { return x > 0.0 ? std::log(x) : -kInf; }

void require_after(const EventSequence& conditioning, double t) {
  if (!conditioning.empty() && !(t > conditioning.events().back().time)) {
    throw ValidationError("query time must be strictly after every conditioning event");
  }
}

}  // namespace

std::vector<double> MtppModel::sequential_logliks(std::span<const Event> prefix,
                                                  std::span<const Event> targets,
                                                  double observed_until) const {
  std::vector<Event> conditioning(prefix.begin(), prefix.end());
  conditioning.reserve(prefix.size() + targets.size());
  std::vector<double> out;
  out.reserve(targets.size());
  double since = observed_until;
  for (const Event& e : targets) {
    const double lambda = intensity(conditioning, e.mark, e.time);
    out.push_back(safe_log(lambda) - total_compensator(conditioning, since, e.time));
    conditioning.push_back(e);
    since = e.time;
  }
  return out;
}

void HawkesParams::validate() const {
  const std::size_t m = mu.size();
  if (m == 0) throw ValidationError("Hawkes model needs at least one mark");
  if (static_cast<std::size_t>(alpha.rows()) != m || static_cast<std::size_t>(alpha.cols()) != m) {
    throw ValidationError("alpha must be an M x M matrix");
  }
  for (double v : mu) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("baseline rates must be positive");
  }
  if (!alpha.allFinite() || (alpha.array() < 0.0).any()) {
    throw ValidationError("excitation matrix must be finite and non-negative");
  }
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ValidationError("decay must be positive");
}

double HawkesParams::spectral_radius() const {
  if (alpha.size() == 0) return 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(alpha, /*computeEigenvectors=*/false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

HawkesModel::HawkesModel(HawkesParams params) : params_(std::move(params)) {
  params_.validate();
  const std::size_t m = params_.mark_count();
  outgoing_.resize(m);
  for (std::size_t k = 0; k < m; ++k) outgoing_[k] = params_.alpha.row(k).sum();
  total_mu_ = std::accumulate(params_.mu.begin(), params_.mu.end(), 0.0);
}

double HawkesModel::intensity(std::span<const Event> conditioning, Mark mark, double t) const {
  const double beta = params_.beta;
  double excitation = 0.0;
  for (const Event& e : conditioning) {
    if (!(e.time < t)) break;
    excitation += params_.alpha(e.mark, mark) * std::exp(-beta * (t - e.time));
  }
  return params_.mu[mark] + beta * excitation;
}

double HawkesModel::total_compensator(std::span<const Event> conditioning, double a,
                                      double b) const {
  const double beta = params_.beta;
  double total = total_mu_ * (b - a);
  for (const Event& e : conditioning) {
    if (!(e.time < b)) break;
    const double from = std::max(a, e.time);
    total += outgoing_[e.mark] * (std::exp(-beta * (from - e.time)) - std::exp(-beta * (b - e.time)));
  }
  return total;
}

std::vector<double> HawkesModel::sequential_logliks(std::span<const Event> prefix,
                                                    std::span<const Event> targets,
                                                    double observed_until) const {
  const std::size_t m = mark_count();
  const double beta = params_.beta;
  // decayed[k] = sum over seen events of mark k of exp(-beta * (now - t_j)).
  std::vector<double> decayed(m, 0.0);
  for (const Event& e : prefix) decayed[e.mark] += std::exp(-beta * (observed_until - e.time));

  std::vector<double> out;
  out.reserve(targets.size());
  double now = observed_until;
  for (const Event& e : targets) {
    const double gap = e.time - now;
    const double decay = std::exp(-beta * gap);
    double carried = 0.0;  // compensator contribution of pending excitation
    double excitation = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      carried += outgoing_[k] * decayed[k];
      excitation += params_.alpha(k, e.mark) * decayed[k];
    }
    const double lambda = params_.mu[e.mark] + beta * excitation * decay;
    const double comp = total_mu_ * gap + carried * (1.0 - decay);
    out.push_back(safe_log(lambda) - comp);
    for (double& d : decayed) d *= decay;
    decayed[e.mark] += 1.0;
    now = e.time;
  }
  return out;
}

PoissonModel::PoissonModel(std::vector<double> rates) : rates_(std::move(rates)) {
  if (rates_.empty()) throw ValidationError("Poisson model needs at least one mark");
  for (double r : rates_) {
    if (!(r > 0.0) || !std::isfinite(r)) throw ValidationError("Poisson rates must be positive");
  }
  total_ = std::accumulate(rates_.begin(), rates_.end(), 0.0);
}

double PoissonModel::intensity(std::span<const Event>, Mark mark, double) const {
  return rates_[mark];
}

double PoissonModel::total_compensator(std::span<const Event>, double a, double b) const {
  return total_ * (b - a);
}

double intensity_at(const MtppModel& model, const EventSequence& conditioning, Mark mark,
                    double t) {
  if (mark >= model.mark_count()) throw ValidationError("mark out of range");
  require_after(conditioning, t);
  return model.intensity(conditioning.view(), mark, t);
}

double compensator(const MtppModel& model, const EventSequence& conditioning, double a,
                   double b) {
  if (a > b) throw ValidationError("compensator interval is reversed");
  if (a < conditioning.window().start) {
    throw ValidationError("compensator interval starts before the conditioning window");
  }
  if (a == b) return 0.0;
  return model.total_compensator(conditioning.view(), a, b);
}

double event_loglik(const MtppModel& model, const EventSequence& conditioning,
                    const Event& event, std::optional<double> observed_until) {
  if (event.mark >= model.mark_count()) throw ValidationError("mark out of range");
  require_after(conditioning, event.time);
  const double since = observed_until.value_or(conditioning.last_time_or_start());
  if (since > event.time) throw ValidationError("observation time lies after the event");
  if (!conditioning.empty() && since < conditioning.events().back().time) {
    throw ValidationError("observation time precedes the last conditioning event");
  }
  const double lambda = model.intensity(conditioning.view(), event.mark, event.time);
  return safe_log(lambda) - model.total_compensator(conditioning.view(), since, event.time);
}

double next_event_density(const MtppModel& model, const EventSequence& conditioning, Mark mark,
                          double t, std::optional<double> observed_until) {
  const double since = observed_until.value_or(conditioning.last_time_or_start());
  if (!(t > since)) throw ValidationError("density query must lie after the last observation");
  const Event e{mark, t};
  if (mark >= model.mark_count()) throw ValidationError("mark out of range");
  require_after(conditioning, t);
  const double lambda = model.intensity(conditioning.view(), e.mark, e.time);
  return lambda * std::exp(-model.total_compensator(conditioning.view(), since, t));
}

double sequence_nll(const MtppModel& model, const EventSequence& conditioning,
                    const EventSequence& seq) {
  if (!conditioning.empty() && !seq.empty() &&
      !(conditioning.events().back().time < seq.events().front().time)) {
    throw ValidationError("sequence must lie after the conditioning events");
  }
  if (!conditioning.empty() && conditioning.events().back().time > seq.window().start) {
    throw ValidationError("conditioning events must precede the sequence window");
  }
  std::vector<Event> all(conditioning.events());
  all.reserve(conditioning.size() + seq.size());
  double nll = 0.0;
  for (const Event& e : seq.events()) {
    if (e.mark >= model.mark_count()) throw ValidationError("mark out of range");
    const double lambda = model.intensity(all, e.mark, e.time);
    if (!(lambda > 0.0)) return kInf;
    nll -= std::log(lambda);
    all.push_back(e);
  }
  nll += model.total_compensator(all, seq.window().start, seq.window().end);
  return nll;
}

Prediction predict_next(const MtppModel& model, const EventSequence& conditioning,
                        const PredictOptions& options) {
  using boost::math::quadrature::gauss_kronrod;
  const std::span<const Event> past = conditioning.view();
  const std::size_t marks = model.mark_count();
  const double t_last = conditioning.last_time_or_start();
  const double floor = model.total_rate_floor();
  const double horizon = options.horizon_scale / floor;

  auto total_intensity = [&](double t) {
    double s = 0.0;
    for (Mark m = 0; m < marks; ++m) s += model.intensity(past, m, t);
    return s;
  };
  auto density = [&](double tau) {
    if (tau <= 0.0) tau = std::numeric_limits<double>::min();
    const double t = t_last + tau;
    return total_intensity(t) * std::exp(-model.total_compensator(past, t_last, t));
  };

  // Break points concentrate effort where excitation decays fastest.
  std::vector<double> cuts{0.0};
  for (double c : {0.5 / floor, 2.0 / floor, 8.0 / floor}) {
    if (c < horizon) cuts.push_back(c);
  }
  cuts.push_back(horizon);

  double mean_offset = 0.0;
  double mass = 0.0;
  double error = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    double piece_error = 0.0;
    mean_offset += gauss_kronrod<double, 61>::integrate(
        [&](double tau) { return tau * density(tau); }, cuts[i], cuts[i + 1], 20,
        options.relative_tolerance, &piece_error);
    error += piece_error;
    mass += gauss_kronrod<double, 61>::integrate(density, cuts[i], cuts[i + 1], 20,
                                                 options.relative_tolerance);
  }

  const double tail = std::exp(-model.total_compensator(past, t_last, t_last + horizon));
  if (tail > options.max_tail_mass) {
    std::ostringstream msg;
    msg << "predict_next: tail mass " << tail << " beyond horizon " << horizon
        << " exceeds " << options.max_tail_mass;
    throw NumericalError(msg.str());
  }
  if (!std::isfinite(mean_offset) || error > 1e-6 * std::max(1.0, std::abs(mean_offset)) ||
      std::abs(mass + tail - 1.0) > 1e-6) {
    std::ostringstream msg;
    msg << "predict_next: quadrature did not converge (estimate " << mean_offset
        << ", error " << error << ", mass " << mass << ", tail " << tail << ")";
    throw NumericalError(msg.str());
  }
  // Survival beyond the horizon is dominated by exp(-floor * tau).
  mean_offset += tail * (horizon + 1.0 / floor);

  Prediction p;
  p.t_bar = t_last + mean_offset;
  p.tail_mass = tail;
  double best = -1.0;
  for (Mark m = 0; m < marks; ++m) {
    const double lambda = model.intensity(past, m, p.t_bar);
    if (lambda > best) {
      best = lambda;
      p.m_bar = m;
    }
  }
  constexpr int kGrid = 32;
  p.density_grid.reserve(kGrid + 1);
  for (int i = 0; i <= kGrid; ++i) {
    const double frac = static_cast<double>(i) / kGrid;
    const double tau = horizon * frac * frac;
    p.density_grid.emplace_back(t_last + tau, density(tau));
  }
  return p;
}

}  // namespace ehd
