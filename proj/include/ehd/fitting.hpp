#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ehd/event.hpp"
#include "ehd/model.hpp"

namespace ehd {

/// Maps HawkesParams to the unconstrained vector the optimizer works on:
/// log mu for every mark, then log alpha for every strictly positive entry
/// of alpha (row-major), then log beta when any alpha entry is free. Zero
/// alpha entries stay fixed at zero.
class ParameterLayout {
 public:
  explicit ParameterLayout(const HawkesParams& shape);

  std::size_t size() const { return size_; }
  std::size_t mark_count() const { return marks_; }
  bool has_excitation() const { return !free_alpha_.empty(); }

  Eigen::VectorXd pack(const HawkesParams& params) const;
  HawkesParams unpack(const Eigen::VectorXd& theta) const;

  const std::vector<std::size_t>& free_alpha() const { return free_alpha_; }

 private:
  std::size_t marks_{0};
  std::vector<std::size_t> free_alpha_;  // flat row-major positions
  double fixed_beta_{1.0};
  std::size_t size_{0};
};

struct Objective {
  double value{0.0};
  Eigen::VectorXd gradient;
};

/// Total NLL over `dataset` (each sequence with an empty past) and its
/// gradient with respect to the layout's log-parameters.
Objective nll_objective(const HawkesParams& params, std::span<const EventSequence> dataset,
                        unsigned threads = 1);

enum class InitStrategy { kEmpirical, kJittered };

struct FitConfig {
  std::size_t max_iterations{500};
  double gradient_tolerance{1e-5};
  double armijo{1e-4};
  double backtrack{0.5};
  std::size_t max_backtracks{60};
  /// Largest change of any log-parameter in one step.
  double max_step{3.0};
  bool fit_excitation{true};
  InitStrategy init{InitStrategy::kEmpirical};
  /// Starting point; overrides `init` when set.
  std::optional<HawkesParams> initial;
  unsigned threads{1};
};

struct FitResult {
  HawkesParams params;
  double initial_nll{0.0};
  double final_nll{0.0};
  double gradient_norm{0.0};
  std::size_t iterations{0};
  bool converged{false};
  /// Spectral radius of the fitted alpha below one. Not enforced.
  bool stationary{true};
};

FitResult fit_mle(std::span<const EventSequence> dataset, std::size_t mark_count,
                  const FitConfig& config = {}, std::uint64_t seed = 0);

}  // namespace ehd
