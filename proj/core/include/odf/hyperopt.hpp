// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace odf {

struct Dimension {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  bool is_integer = false;
};

/// Bounded box of hyperparameters. Distances used by the optimizer are
/// measured after mapping every dimension onto [0, 1].
class SearchSpace {
 public:
  SearchSpace() = default;
  /// Throws Error{invalid_spec} on empty, duplicate-named or inverted dims.
  explicit SearchSpace(std::vector<Dimension> dims);

  std::size_t size() const noexcept { return dims_.size(); }
  const std::vector<Dimension>& dims() const noexcept { return dims_; }
  const Dimension& operator[](std::size_t i) const noexcept { return dims_[i]; }

  bool contains(std::span<const double> point) const;
  std::vector<double> to_unit(std::span<const double> point) const;
  std::vector<double> from_unit(std::span<const double> unit) const;

 private:
  std::vector<Dimension> dims_;
};

/// The bounds ANCHOR_PER_GRID, NMS_THRESH, LEARNING_RATE and WEIGHT_DECAY
/// were tuned over for the SqueezeDet retraining.
SearchSpace table3_space();

/// Integer dims rounded half away from zero, then clamped into bounds.
std::vector<double> round_integers(std::span<const double> point, const SearchSpace& space);

struct Trial {
  std::vector<double> point;
  double value = 0.0;  ///< maximized
  std::size_t seq = 0;
};

/// Smallest (1 + alpha)^i, i integer, that bounds every pairwise slope
/// |f(a) - f(b)| / |a - b| over trials at distinct points; 0 without such
/// pairs or when every slope is 0.
double lipschitz_estimate(std::span<const Trial> trials, double alpha);

/// Number of coefficients of a full quadratic in d variables.
constexpr std::size_t quadratic_terms(std::size_t d) noexcept { return (d + 1) * (d + 2) / 2; }

/// Quadratic surrogate around the best trial.
///
/// Coefficients are stored in the local basis u = (z - c) / scale, where z is
/// the unit-cube image of a point and c that of `center`, ordered
/// [1, u_0..u_{d-1}, u_i*u_j for i <= j].
struct TrustRegionModel {
  std::vector<double> center;  ///< best point, original coordinates
  double radius = 0.0;         ///< unit-cube units
  double scale = 1.0;
  std::vector<double> quad_coeffs;
  std::vector<std::size_t> fit_points;  ///< trial indices used in the fit
  std::vector<double> lo, span;         ///< per-dim bounds used for the unit map

  double value(std::span<const double> point) const;
  /// Derivatives with respect to the original coordinates.
  std::vector<double> gradient(std::span<const double> point) const;
  std::vector<std::vector<double>> hessian() const;
};

struct OptimizerOptions {
  double exploration_p = 0.1;
  double alpha = 0.5;
  double noise_eps = 0.0;
  std::uint64_t seed = 0;
};

enum class Phase { global, local };

enum class AskKind { initial, explore, exploit, exploit_fallback, local };

/// Ask/tell optimizer. Odd-numbered asks are global AdaLipo draws; once a
/// quadratic can be fitted, even-numbered asks maximize the surrogate inside
/// the trust region. Not thread-safe.
class Optimizer {
 public:
  Optimizer(SearchSpace space, OptimizerOptions opts = {});

  std::vector<double> ask();
  void tell(std::span<const double> point, double value);

  const SearchSpace& space() const noexcept { return space_; }
  const OptimizerOptions& options() const noexcept { return opts_; }
  const std::vector<Trial>& trials() const noexcept { return trials_; }
  double lipschitz_k() const noexcept { return lipschitz_k_; }
  double tr_radius() const noexcept { return tr_radius_; }
  Phase phase() const noexcept { return phase_; }
  AskKind last_ask_kind() const noexcept { return last_kind_; }
  bool has_pending() const noexcept { return pending_.has_value(); }
  /// Fitted model behind the last local ask, if any.
  const std::optional<TrustRegionModel>& tr() const noexcept { return tr_; }
  /// Number of local asks that fell back to global because the fit was
  /// rank deficient.
  std::size_t rank_deficient_fits() const noexcept { return rank_deficient_; }

  /// Max-value trial, earliest on ties. Throws Error{precondition} if empty.
  const Trial& best() const;

  /// Upper bound min_j(f_j + k * |z - z_j|) + noise_eps in unit coordinates.
  double lipschitz_upper_bound(std::span<const double> point) const;

  std::string to_json() const;
  static Optimizer from_json(const std::string& text);

 private:
  friend std::optional<TrustRegionModel> fit_quadratic_tr(const Optimizer& state);

  std::vector<double> random_point();
  std::vector<double> global_candidate();
  std::optional<std::vector<double>> local_candidate();
  std::vector<Trial> unit_trials() const;

  SearchSpace space_;
  OptimizerOptions opts_;
  std::vector<Trial> trials_;
  std::size_t best_idx_ = 0;
  double lipschitz_k_ = 0.0;
  double tr_radius_ = 0.0;
  Phase phase_ = Phase::global;
  AskKind last_kind_ = AskKind::initial;
  std::optional<std::vector<double>> pending_;
  std::optional<TrustRegionModel> tr_;
  std::size_t rank_deficient_ = 0;
  std::mt19937_64 rng_;
};

Optimizer new_optimizer(SearchSpace space, OptimizerOptions opts = {});

/// Least-squares quadratic over the nearest min(2 * terms, all) trials to the
/// best one, counting repeated points once. Throws Error{precondition} with
/// fewer than quadratic_terms(d) trials; returns nullopt when the design
/// matrix is rank deficient.
std::optional<TrustRegionModel> fit_quadratic_tr(const Optimizer& state);

using Objective = std::function<double(std::span<const double>)>;

/// Named analytic objectives for the CLI and tests:
///   sphere        -sum((z_i - t_i)^2), z the unit image, t = 0.3, 0.7, 0.3, ...
///   table3-proxy  -sum of squared unit distances to (15, 0.487, 0.01, 0.000521)
/// Throws Error{parameter} for unknown names or mismatched dimensions.
Objective builtin_objective(const std::string& name, const SearchSpace& space);

// JSON surfaces.
SearchSpace parse_search_space(const std::string& json_text);
std::string dump_search_space(const SearchSpace& space);
/// {"seq":..,"point":[..],"value":..,"best_so_far":..}
std::string trial_log_line(const Trial& t, double best_so_far);

}  // namespace odf
