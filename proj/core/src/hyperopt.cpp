// SPDX-License-Identifier: Apache-2.0
#include "odf/hyperopt.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "odf/error.hpp"

namespace odf {

namespace {

constexpr std::size_t kMaxExploitDraws = 10000;
constexpr double kInitialRadiusFraction = 0.1;
constexpr double kRadiusFloorFraction = 1e-6;
constexpr double kRankThreshold = 1e-10;

double unit_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Quadratic basis [1, u_i, u_i u_j (i <= j)].
Eigen::VectorXd quadratic_features(const Eigen::VectorXd& u) {
  const auto d = static_cast<std::size_t>(u.size());
  Eigen::VectorXd f(static_cast<Eigen::Index>(quadratic_terms(d)));
  Eigen::Index k = 0;
  f(k++) = 1.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) f(k++) = u(i);
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    for (Eigen::Index j = i; j < u.size(); ++j) f(k++) = u(i) * u(j);
  }
  return f;
}

// Gradient and Hessian of the quadratic in u at u = 0.
void local_derivatives(const std::vector<double>& coeffs, std::size_t d, Eigen::VectorXd& g,
                       Eigen::MatrixXd& h) {
  const auto n = static_cast<Eigen::Index>(d);
  g.resize(n);
  h.setZero(n, n);
  std::size_t k = 1;
  for (Eigen::Index i = 0; i < n; ++i) g(i) = coeffs[k++];
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const double c = coeffs[k++];
      if (i == j) {
        h(i, i) = 2.0 * c;
      } else {
        h(i, j) = c;
        h(j, i) = c;
      }
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// SearchSpace

SearchSpace::SearchSpace(std::vector<Dimension> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw Error(Errc::invalid_spec, "search space has no dimensions");
  std::set<std::string> names;
  for (const auto& d : dims_) {
    if (d.name.empty()) throw Error(Errc::invalid_spec, "search space dimension without a name");
    if (!names.insert(d.name).second) {
      throw Error(Errc::invalid_spec, "duplicate search space dimension '" + d.name + "'");
    }
    if (!std::isfinite(d.lo) || !std::isfinite(d.hi) || !(d.lo < d.hi)) {
      throw Error(Errc::invalid_spec, "dimension '" + d.name + "' needs finite lo < hi");
    }
  }
}

bool SearchSpace::contains(std::span<const double> point) const {
  if (point.size() != dims_.size()) return false;
  for (std::size_t i = 0; i < point.size(); ++i) {
    if (!(point[i] >= dims_[i].lo && point[i] <= dims_[i].hi)) return false;
    if (dims_[i].is_integer && point[i] != std::round(point[i])) return false;
  }
  return true;
}

std::vector<double> SearchSpace::to_unit(std::span<const double> point) const {
  std::vector<double> z(point.size());
  for (std::size_t i = 0; i < point.size(); ++i) {
    z[i] = (point[i] - dims_[i].lo) / (dims_[i].hi - dims_[i].lo);
  }
  return z;
}

std::vector<double> SearchSpace::from_unit(std::span<const double> unit) const {
  std::vector<double> x(unit.size());
  for (std::size_t i = 0; i < unit.size(); ++i) {
    x[i] = std::clamp(dims_[i].lo + unit[i] * (dims_[i].hi - dims_[i].lo), dims_[i].lo,
                      dims_[i].hi);
  }
  return x;
}

SearchSpace table3_space() {
  return SearchSpace({{"ANCHOR_PER_GRID", 1.0, 16.0, true},
                      {"NMS_THRESH", 0.0, 1.0, false},
                      {"LEARNING_RATE", 0.01, 0.10, false},
                      {"WEIGHT_DECAY", 0.00001, 0.00100, false}});
}

std::vector<double> round_integers(std::span<const double> point, const SearchSpace& space) {
  if (point.size() != space.size()) {
    throw Error(Errc::parameter, "point dimension does not match the search space");
  }
  std::vector<double> out(point.begin(), point.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (space[i].is_integer) out[i] = std::clamp(std::round(out[i]), space[i].lo, space[i].hi);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lipschitz constant

double lipschitz_estimate(std::span<const Trial> trials, double alpha) {
  if (!(alpha > 0.0)) throw Error(Errc::parameter, "alpha must be positive");
  double slope = 0.0;
  for (std::size_t a = 0; a < trials.size(); ++a) {
    for (std::size_t b = a + 1; b < trials.size(); ++b) {
      const double dist = unit_distance(trials[a].point, trials[b].point);
      if (dist > 0.0) slope = std::max(slope, std::abs(trials[a].value - trials[b].value) / dist);
    }
  }
  if (!(slope > 0.0)) return 0.0;
  const double base = 1.0 + alpha;
  auto i = static_cast<int>(std::ceil(std::log(slope) / std::log(base)));
  // log/pow rounding can land one step off either way.
  while (std::pow(base, i) < slope) ++i;
  while (std::pow(base, i - 1) >= slope) --i;
  return std::pow(base, i);
}

// ---------------------------------------------------------------------------
// TrustRegionModel

double TrustRegionModel::value(std::span<const double> point) const {
  const auto d = static_cast<Eigen::Index>(center.size());
  Eigen::VectorXd u(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    u(i) = (point[i] - center[i]) / span[i] / scale;
  }
  const Eigen::VectorXd f = quadratic_features(u);
  return f.dot(Eigen::Map<const Eigen::VectorXd>(quad_coeffs.data(), f.size()));
}

std::vector<double> TrustRegionModel::gradient(std::span<const double> point) const {
  Eigen::VectorXd g;
  Eigen::MatrixXd h;
  local_derivatives(quad_coeffs, center.size(), g, h);
  const auto d = static_cast<Eigen::Index>(center.size());
  Eigen::VectorXd u(d);
  for (Eigen::Index i = 0; i < d; ++i) u(i) = (point[i] - center[i]) / span[i] / scale;
  const Eigen::VectorXd gu = g + h * u;
  std::vector<double> out(center.size());
  for (Eigen::Index i = 0; i < d; ++i) out[i] = gu(i) / (span[i] * scale);
  return out;
}

std::vector<std::vector<double>> TrustRegionModel::hessian() const {
  Eigen::VectorXd g;
  Eigen::MatrixXd h;
  local_derivatives(quad_coeffs, center.size(), g, h);
  const std::size_t d = center.size();
  std::vector<std::vector<double>> out(d, std::vector<double>(d));
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      out[i][j] = h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) /
                  (span[i] * span[j] * scale * scale);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Optimizer

Optimizer::Optimizer(SearchSpace space, OptimizerOptions opts)
    : space_(std::move(space)), opts_(opts), rng_(opts.seed) {
  if (space_.size() == 0) throw Error(Errc::invalid_spec, "search space has no dimensions");
  if (!(opts_.exploration_p >= 0.0 && opts_.exploration_p <= 1.0)) {
    throw Error(Errc::parameter, "exploration probability must lie in [0, 1]");
  }
  if (!(opts_.alpha > 0.0) || !std::isfinite(opts_.alpha)) {
    throw Error(Errc::parameter, "alpha must be positive and finite");
  }
  if (!(opts_.noise_eps >= 0.0) || !std::isfinite(opts_.noise_eps)) {
    throw Error(Errc::parameter, "noise_eps must be non-negative and finite");
  }
  tr_radius_ = kInitialRadiusFraction * std::sqrt(static_cast<double>(space_.size()));
}

Optimizer new_optimizer(SearchSpace space, OptimizerOptions opts) {
  return Optimizer(std::move(space), opts);
}

const Trial& Optimizer::best() const {
  if (trials_.empty()) throw Error(Errc::precondition, "no trials recorded yet");
  return trials_[best_idx_];
}

std::vector<Trial> Optimizer::unit_trials() const {
  std::vector<Trial> out = trials_;
  for (auto& t : out) t.point = space_.to_unit(t.point);
  return out;
}

double Optimizer::lipschitz_upper_bound(std::span<const double> point) const {
  const auto z = space_.to_unit(point);
  double bound = std::numeric_limits<double>::infinity();
  for (const auto& t : trials_) {
    bound = std::min(bound, t.value + lipschitz_k_ * unit_distance(z, space_.to_unit(t.point)));
  }
  return bound + opts_.noise_eps;
}

std::vector<double> Optimizer::random_point() {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> z(space_.size());
  for (auto& v : z) v = unit(rng_);
  return round_integers(space_.from_unit(z), space_);
}

std::vector<double> Optimizer::global_candidate() {
  if (trials_.empty()) {
    last_kind_ = AskKind::initial;
    return random_point();
  }
  if (std::bernoulli_distribution(opts_.exploration_p)(rng_)) {
    last_kind_ = AskKind::explore;
    return random_point();
  }
  const double target = best().value;
  for (std::size_t draw = 0; draw < kMaxExploitDraws; ++draw) {
    auto x = random_point();
    if (lipschitz_upper_bound(x) >= target) {
      last_kind_ = AskKind::exploit;
      return x;
    }
  }
  // The best point always satisfies the bound.
  last_kind_ = AskKind::exploit_fallback;
  return best().point;
}

std::optional<TrustRegionModel> fit_quadratic_tr(const Optimizer& state) {
  const std::size_t d = state.space_.size();
  const std::size_t terms = quadratic_terms(d);
  const auto& trials = state.trials_;
  if (trials.size() < terms) {
    throw Error(Errc::precondition, "quadratic fit needs " + std::to_string(terms) +
                                        " trials, have " + std::to_string(trials.size()));
  }

  const Trial& best = state.best();
  const auto center_z = state.space_.to_unit(best.point);
  std::vector<double> dist(trials.size());
  for (std::size_t i = 0; i < trials.size(); ++i) {
    dist[i] = unit_distance(state.space_.to_unit(trials[i].point), center_z);
  }
  std::vector<std::size_t> order(trials.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
  // Repeated points add no information to the fit; keep the first of each.
  std::vector<std::size_t> picked;
  for (const std::size_t i : order) {
    if (picked.size() == 2 * terms) break;
    const bool repeat = std::any_of(picked.begin(), picked.end(), [&](std::size_t j) {
      return trials[j].point == trials[i].point;
    });
    if (!repeat) picked.push_back(i);
  }
  order = std::move(picked);
  const std::size_t m = order.size();
  if (m < terms) return std::nullopt;

  double scale = 0.0;
  for (const std::size_t i : order) scale = std::max(scale, dist[i]);
  if (!(scale > 0.0)) return std::nullopt;

  Eigen::MatrixXd design(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(terms));
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(m));
  for (std::size_t r = 0; r < m; ++r) {
    const auto z = state.space_.to_unit(trials[order[r]].point);
    Eigen::VectorXd u(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) u(static_cast<Eigen::Index>(i)) = (z[i] - center_z[i]) / scale;
    design.row(static_cast<Eigen::Index>(r)) = quadratic_features(u).transpose();
    rhs(static_cast<Eigen::Index>(r)) = trials[order[r]].value;
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(kRankThreshold);
  if (qr.rank() < static_cast<Eigen::Index>(terms)) return std::nullopt;
  const Eigen::VectorXd coeffs = qr.solve(rhs);

  TrustRegionModel model;
  model.center = best.point;
  model.radius = state.tr_radius_;
  model.scale = scale;
  model.quad_coeffs.assign(coeffs.data(), coeffs.data() + coeffs.size());
  model.fit_points = std::move(order);
  for (const auto& dim : state.space_.dims()) {
    model.lo.push_back(dim.lo);
    model.span.push_back(dim.hi - dim.lo);
  }
  return model;
}

std::optional<std::vector<double>> Optimizer::local_candidate() {
  auto model = fit_quadratic_tr(*this);
  if (!model) {
    ++rank_deficient_;
    return std::nullopt;
  }

  // Work in unit coordinates around the center: m(s) = g.s + s.H.s / 2.
  const std::size_t d = space_.size();
  const auto n = static_cast<Eigen::Index>(d);
  Eigen::VectorXd gu;
  Eigen::MatrixXd hu;
  local_derivatives(model->quad_coeffs, d, gu, hu);
  const Eigen::VectorXd g = gu / model->scale;
  const Eigen::MatrixXd h = hu / (model->scale * model->scale);
  const auto cz = space_.to_unit(model->center);
  const Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(cz.data(), n);
  const double radius = tr_radius_;

  auto project = [&](Eigen::VectorXd s) {
    const double norm = s.norm();
    if (norm > radius) s *= radius / norm;
    for (Eigen::Index i = 0; i < n; ++i) s(i) = std::clamp(c(i) + s(i), 0.0, 1.0) - c(i);
    return s;
  };
  auto model_gain = [&](const Eigen::VectorXd& s) { return g.dot(s) + 0.5 * s.dot(h * s); };

  std::vector<Eigen::VectorXd> candidates;
  candidates.push_back(Eigen::VectorXd::Zero(n));
  Eigen::LLT<Eigen::MatrixXd> neg_h(-h);
  if (neg_h.info() == Eigen::Success) candidates.push_back(project(neg_h.solve(g)));
  if (g.norm() > 0.0) candidates.push_back(project(g * (radius / g.norm())));

  // Projected gradient ascent.
  const double lipschitz = std::max(h.norm(), g.norm() / radius);
  if (lipschitz > 0.0) {
    Eigen::VectorXd s = Eigen::VectorXd::Zero(n);
    for (int it = 0; it < 300; ++it) s = project(s + (g + h * s) / lipschitz);
    candidates.push_back(s);
  }

  const auto best_step = *std::max_element(
      candidates.begin(), candidates.end(),
      [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return model_gain(a) < model_gain(b); });

  std::vector<double> z(d);
  for (std::size_t i = 0; i < d; ++i) {
    z[i] = c(static_cast<Eigen::Index>(i)) + best_step(static_cast<Eigen::Index>(i));
  }
  model->radius = radius;
  tr_ = std::move(model);
  return round_integers(space_.from_unit(z), space_);
}

std::vector<double> Optimizer::ask() {
  if (pending_) throw Error(Errc::protocol, "ask called again before tell");
  const std::size_t iteration = trials_.size() + 1;
  const bool local_turn = iteration % 2 == 0 && trials_.size() >= quadratic_terms(space_.size());

  std::optional<std::vector<double>> candidate;
  if (local_turn) {
    candidate = local_candidate();
    if (candidate) {
      phase_ = Phase::local;
      last_kind_ = AskKind::local;
    }
  }
  if (!candidate) {
    phase_ = Phase::global;
    candidate = global_candidate();
  }
  pending_ = *candidate;
  return *candidate;
}

void Optimizer::tell(std::span<const double> point, double value) {
  if (!pending_) throw Error(Errc::protocol, "tell without a pending ask");
  if (!std::equal(point.begin(), point.end(), pending_->begin(), pending_->end())) {
    throw Error(Errc::protocol, "told point differs from the pending ask");
  }
  if (!std::isfinite(value)) throw Error(Errc::parameter, "objective value must be finite");

  const bool improved = trials_.empty() || value > trials_[best_idx_].value + opts_.noise_eps;
  const bool new_best = trials_.empty() || value > trials_[best_idx_].value;
  trials_.push_back({*pending_, value, trials_.size()});
  pending_.reset();
  if (new_best) best_idx_ = trials_.size() - 1;

  const double diagonal = std::sqrt(static_cast<double>(space_.size()));
  tr_radius_ = std::clamp(improved ? 2.0 * tr_radius_ : 0.5 * tr_radius_,
                          kRadiusFloorFraction * diagonal, diagonal);
  lipschitz_k_ = lipschitz_estimate(unit_trials(), opts_.alpha);
}

// ---------------------------------------------------------------------------
// Builtin objectives

Objective builtin_objective(const std::string& name, const SearchSpace& space) {
  if (name == "sphere") {
    return [space](std::span<const double> x) {
      const auto z = space.to_unit(x);
      double s = 0.0;
      for (std::size_t i = 0; i < z.size(); ++i) {
        const double t = i % 2 == 0 ? 0.3 : 0.7;
        s += (z[i] - t) * (z[i] - t);
      }
      return -s;
    };
  }
  if (name == "table3-proxy") {
    if (space.size() != 4) {
      throw Error(Errc::parameter, "table3-proxy needs a four-dimensional space");
    }
    const std::vector<double> target = {15.0, 0.487, 0.01, 0.000521};
    const auto tz = space.to_unit(target);
    return [space, tz](std::span<const double> x) {
      const auto z = space.to_unit(x);
      double s = 0.0;
      for (std::size_t i = 0; i < z.size(); ++i) s += (z[i] - tz[i]) * (z[i] - tz[i]);
      return -s;
    };
  }
  throw Error(Errc::parameter, "unknown builtin objective '" + name + "'");
}

}  // namespace odf
