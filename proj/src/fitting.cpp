#include "ehd/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "ehd/simulation.hpp"

namespace ehd {

namespace {

Objective sequence_objective(const HawkesParams& p, const ParameterLayout& layout,
                             const EventSequence& seq) {
  const std::size_t m = p.mark_count();
  const double beta = p.beta;
  const double t0 = seq.window().start;
  const double t_end = seq.window().end;

  std::vector<double> g_mu(m, 0.0);
  Eigen::MatrixXd g_alpha = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m),
                                                  static_cast<Eigen::Index>(m));
  double g_beta = 0.0;
  double value = 0.0;

  // decayed[k] = sum_j exp(-beta (t - t_j)); lagged[k] = sum_j (t - t_j) exp(-beta (t - t_j)).
  std::vector<double> decayed(m, 0.0);
  std::vector<double> lagged(m, 0.0);
  double prev = t0;
  for (const Event& e : seq.events()) {
    const double gap = e.time - prev;
    const double decay = std::exp(-beta * gap);
    for (std::size_t k = 0; k < m; ++k) {
      lagged[k] = decay * (lagged[k] + gap * decayed[k]);
      decayed[k] *= decay;
    }
    double excitation = 0.0;
    double d_beta = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const double a = p.alpha(static_cast<Eigen::Index>(k), e.mark);
      excitation += a * decayed[k];
      d_beta += a * (decayed[k] - beta * lagged[k]);
    }
    const double lambda = p.mu[e.mark] + beta * excitation;
    value -= std::log(lambda);
    g_mu[e.mark] -= 1.0 / lambda;
    for (std::size_t k = 0; k < m; ++k) {
      g_alpha(static_cast<Eigen::Index>(k), e.mark) -= beta * decayed[k] / lambda;
    }
    g_beta -= d_beta / lambda;
    decayed[e.mark] += 1.0;
    prev = e.time;
  }

  const double length = t_end - t0;
  for (std::size_t k = 0; k < m; ++k) {
    value += p.mu[k] * length;
    g_mu[k] += length;
  }
  for (const Event& e : seq.events()) {
    const double tail = t_end - e.time;
    const double decay = std::exp(-beta * tail);
    const double outgoing = p.alpha.row(e.mark).sum();
    value += outgoing * (1.0 - decay);
    g_alpha.row(e.mark).array() += 1.0 - decay;
    g_beta += outgoing * tail * decay;
  }

  Objective out;
  out.value = value;
  out.gradient = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.size()));
  Eigen::Index at = 0;
  for (std::size_t k = 0; k < m; ++k) out.gradient[at++] = p.mu[k] * g_mu[k];
  for (std::size_t flat : layout.free_alpha()) {
    const auto r = static_cast<Eigen::Index>(flat / m);
    const auto c = static_cast<Eigen::Index>(flat % m);
    out.gradient[at++] = p.alpha(r, c) * g_alpha(r, c);
  }
  if (layout.has_excitation()) out.gradient[at] = beta * g_beta;
  return out;
}

HawkesParams initial_params(std::span<const EventSequence> dataset, std::size_t mark_count,
                            const FitConfig& config, std::uint64_t seed) {
  std::vector<double> counts(mark_count, 0.0);
  double observed = 0.0;
  for (const EventSequence& s : dataset) {
    observed += s.window().length();
    for (const Event& e : s.events()) counts[e.mark] += 1.0;
  }
  HawkesParams p;
  p.mu.resize(mark_count);
  const auto m = static_cast<Eigen::Index>(mark_count);
  p.alpha = config.fit_excitation ? Eigen::MatrixXd::Constant(m, m, 0.1)
                                  : Eigen::MatrixXd::Zero(m, m);
  p.beta = 1.0;
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  for (std::size_t k = 0; k < mark_count; ++k) {
    // Unseen marks start at a small share of the overall rate.
    p.mu[k] = counts[k] > 0.0 ? counts[k] / observed : 0.01 * total / observed;
  }
  if (config.init == InitStrategy::kJittered) {
    Rng rng(seed);
    for (double& v : p.mu) v *= rng.uniform(0.5, 1.5);
    for (Eigen::Index i = 0; i < p.alpha.size(); ++i) p.alpha.data()[i] *= rng.uniform(0.5, 1.5);
    p.beta *= rng.uniform(0.5, 1.5);
  }
  return p;
}

}  // namespace

ParameterLayout::ParameterLayout(const HawkesParams& shape)
    : marks_(shape.mark_count()), fixed_beta_(shape.beta) {
  for (std::size_t r = 0; r < marks_; ++r) {
    for (std::size_t c = 0; c < marks_; ++c) {
      if (shape.alpha(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) > 0.0) {
        free_alpha_.push_back(r * marks_ + c);
      }
    }
  }
  size_ = marks_ + free_alpha_.size() + (free_alpha_.empty() ? 0 : 1);
}

Eigen::VectorXd ParameterLayout::pack(const HawkesParams& params) const {
  Eigen::VectorXd theta(static_cast<Eigen::Index>(size_));
  Eigen::Index at = 0;
  for (double v : params.mu) theta[at++] = std::log(v);
  for (std::size_t flat : free_alpha_) {
    theta[at++] = std::log(params.alpha(static_cast<Eigen::Index>(flat / marks_),
                                        static_cast<Eigen::Index>(flat % marks_)));
  }
  if (has_excitation()) theta[at] = std::log(params.beta);
  return theta;
}

HawkesParams ParameterLayout::unpack(const Eigen::VectorXd& theta) const {
  HawkesParams p;
  const auto m = static_cast<Eigen::Index>(marks_);
  p.mu.resize(marks_);
  p.alpha = Eigen::MatrixXd::Zero(m, m);
  Eigen::Index at = 0;
  for (std::size_t k = 0; k < marks_; ++k) p.mu[k] = std::exp(theta[at++]);
  for (std::size_t flat : free_alpha_) {
    p.alpha(static_cast<Eigen::Index>(flat / marks_), static_cast<Eigen::Index>(flat % marks_)) =
        std::exp(theta[at++]);
  }
  p.beta = has_excitation() ? std::exp(theta[at]) : fixed_beta_;
  return p;
}

Objective nll_objective(const HawkesParams& params, std::span<const EventSequence> dataset,
                        unsigned threads) {
  params.validate();
  const ParameterLayout layout(params);
  for (const EventSequence& s : dataset) {
    if (s.mark_span() > params.mark_count()) throw ValidationError("mark out of range in dataset");
  }

  std::vector<Objective> terms(dataset.size());
  const std::size_t workers =
      std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(1, dataset.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      terms[i] = sequence_objective(params, layout, dataset[i]);
    }
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < dataset.size(); i += workers) {
          terms[i] = sequence_objective(params, layout, dataset[i]);
        }
      });
    }
  }

  // Reduce in an order that does not depend on how the dataset was listed.
  std::vector<std::size_t> order(terms.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (terms[a].value != terms[b].value) return terms[a].value < terms[b].value;
    const auto& ga = terms[a].gradient;
    const auto& gb = terms[b].gradient;
    return std::lexicographical_compare(ga.data(), ga.data() + ga.size(), gb.data(),
                                        gb.data() + gb.size());
  });
  Objective total;
  total.gradient = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.size()));
  for (std::size_t i : order) {
    total.value += terms[i].value;
    total.gradient += terms[i].gradient;
  }
  return total;
}

FitResult fit_mle(std::span<const EventSequence> dataset, std::size_t mark_count,
                  const FitConfig& config, std::uint64_t seed) {
  if (config.max_iterations < 1) throw ValidationError("max_iterations must be at least 1");
  if (!(config.gradient_tolerance > 0.0)) throw ValidationError("gradient_tolerance must be positive");
  if (dataset.empty()) throw ValidationError("cannot fit an empty dataset");
  if (mark_count == 0) throw ValidationError("mark count must be positive");
  bool any_event = false;
  for (const EventSequence& s : dataset) {
    if (s.mark_span() > mark_count) throw ValidationError("dataset mark exceeds the mark count");
    any_event = any_event || !s.empty();
  }
  if (!any_event) throw ValidationError("every sequence in the dataset is empty");

  const HawkesParams start =
      config.initial ? *config.initial : initial_params(dataset, mark_count, config, seed);
  if (start.mark_count() != mark_count) throw ValidationError("initial parameters have the wrong size");
  const ParameterLayout layout(start);

  Eigen::VectorXd theta = layout.pack(start);
  Objective current = nll_objective(start, dataset, config.threads);
  FitResult result;
  result.initial_nll = current.value;

  const auto n = static_cast<Eigen::Index>(layout.size());
  Eigen::MatrixXd inverse_hessian = Eigen::MatrixXd::Identity(n, n);
  std::size_t iteration = 0;
  for (; iteration < config.max_iterations; ++iteration) {
    if (current.gradient.norm() <= config.gradient_tolerance) {
      result.converged = true;
      break;
    }
    Eigen::VectorXd direction = -inverse_hessian * current.gradient;
    double slope = current.gradient.dot(direction);
    if (!(slope < 0.0)) {
      inverse_hessian.setIdentity();
      direction = -current.gradient;
      slope = current.gradient.dot(direction);
    }
    const double largest = direction.cwiseAbs().maxCoeff();
    double step = largest > config.max_step ? config.max_step / largest : 1.0;

    bool accepted = false;
    Eigen::VectorXd next_theta;
    Objective next;
    for (std::size_t b = 0; b < config.max_backtracks; ++b, step *= config.backtrack) {
      next_theta = theta + step * direction;
      next = nll_objective(layout.unpack(next_theta), dataset, config.threads);
      if (std::isfinite(next.value) && next.value <= current.value + config.armijo * step * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;

    const Eigen::VectorXd s = next_theta - theta;
    const Eigen::VectorXd y = next.gradient - current.gradient;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
      inverse_hessian = (eye - rho * s * y.transpose()) * inverse_hessian *
                            (eye - rho * y * s.transpose()) +
                        rho * s * s.transpose();
    }
    theta = next_theta;
    current = std::move(next);
  }
  if (!result.converged && current.gradient.norm() <= config.gradient_tolerance) {
    result.converged = true;
  }

  result.params = layout.unpack(theta);
  if (iteration == 0) result.params = start;
  result.final_nll = current.value;
  result.gradient_norm = current.gradient.norm();
  result.iterations = iteration;
  result.stationary = result.params.is_stationary();
  return result;
}

}  // namespace ehd
