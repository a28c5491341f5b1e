#include "laftr/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "laftr/error.hpp"

namespace laftr {

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kArmijo = 1e-4;
constexpr int kMaxHalvings = 60;
constexpr double kMinCurvature = 1.0;  // below this the scaled step is a plain gradient step
constexpr double kNewtonDamping = 1e-8;  // mu = kNewtonDamping * max(1, max diag H)
constexpr int kMaxDampingRetries = 8;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double penalty(std::size_t k_plus, double lambda) {
  return static_cast<double>(k_plus) * lambda * lambda;
}

// NLL at logits + step * direction.
double nll_along(const AdjacencyMatrix& y, const ObservationMask& mask, const RealMatrix& logits,
                 const RealMatrix& direction, double step) {
  double total = 0.0;
  for (std::size_t i = 0; i < y.n(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < y.n(); ++j)
      if (mask(i, j)) row += entry_loss(logits(i, j) + step * direction(i, j), y(i, j));
    total += row;
  }
  return total;
}

// Z D Z^T on observed entries (others left at 0).
RealMatrix lift_direction(const ObservationMask& mask, const std::vector<std::vector<std::size_t>>& active,
                          std::size_t k, const RealMatrix& d) {
  const std::size_t n = active.size();
  RealMatrix dz(n, k, 0.0);  // dz(j, a) = sum_b d(a, b) z(j, b)
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t a = 0; a < k; ++a) {
      double s = 0.0;
      for (std::size_t b : active[j]) s += d(a, b);
      dz(j, a) = s;
    }
  RealMatrix lifted(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (active[i].empty()) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (!mask(i, j) || active[j].empty()) continue;
      double s = 0.0;
      for (std::size_t a : active[i]) s += dz(j, a);
      lifted(i, j) = s;
    }
  }
  return lifted;
}

// Gradient and full Hessian of the NLL in W, entries indexed a * k + b:
//   H[(a, b), (c, d)] = sum over observed (i, j) of p (1 - p) z_ia z_jb z_ic z_jd.
void newton_system(const AdjacencyMatrix& y, const ObservationMask& mask,
                   const std::vector<std::vector<std::size_t>>& active, const RealMatrix& logits,
                   std::size_t k, RealMatrix& grad, Eigen::MatrixXd& hessian) {
  const std::size_t n = active.size();
  grad = RealMatrix(k, k, 0.0);
  hessian = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k * k), static_cast<Eigen::Index>(k * k));
  std::vector<double> residual_sum(k);
  RealMatrix block(k, k);  // block(b, d) = sum_j p (1 - p) z_jb z_jd for the current row
  for (std::size_t i = 0; i < n; ++i) {
    if (active[i].empty()) continue;
    std::fill(residual_sum.begin(), residual_sum.end(), 0.0);
    block.fill(0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (!mask(i, j) || active[j].empty()) continue;
      const double p = sigmoid(logits(i, j));
      const double r = p - static_cast<double>(y(i, j));
      const double v = p * (1.0 - p);
      for (std::size_t b : active[j]) {
        residual_sum[b] += r;
        for (std::size_t d : active[j]) block(b, d) += v;
      }
    }
    for (std::size_t a : active[i]) {
      for (std::size_t b = 0; b < k; ++b) grad(a, b) += residual_sum[b];
      for (std::size_t c : active[i])
        for (std::size_t b = 0; b < k; ++b)
          for (std::size_t d = 0; d < k; ++d)
            hessian(static_cast<Eigen::Index>(a * k + b), static_cast<Eigen::Index>(c * k + d)) += block(b, d);
    }
  }
}

// -(H + mu I)^{-1} g, raising mu until the factorization succeeds. Returns
// false if it never does.
bool damped_newton_direction(const RealMatrix& grad, Eigen::MatrixXd hessian, RealMatrix& direction) {
  const Eigen::Index p = hessian.rows();
  const Eigen::Map<const Eigen::VectorXd> g(grad.flat().data(), p);
  double mu = kNewtonDamping * std::max(1.0, hessian.diagonal().maxCoeff());
  for (int attempt = 0; attempt < kMaxDampingRetries; ++attempt, mu *= 100.0) {
    Eigen::MatrixXd damped = hessian;
    damped.diagonal().array() += mu;
    const Eigen::LLT<Eigen::MatrixXd> llt(damped);
    if (llt.info() != Eigen::Success) continue;
    const Eigen::VectorXd d = -llt.solve(g);
    if (!d.allFinite() || d.dot(g) >= 0.0) continue;
    std::copy(d.data(), d.data() + p, direction.flat().begin());
    return true;
  }
  return false;
}

void sweep_column_to_fixed_point(const AdjacencyMatrix& y, const ObservationMask& mask,
                                 ModelState& state, std::size_t feature) {
  bool improved = true;
  while (improved) {
    improved = false;
    for (std::size_t node = 0; node < state.n(); ++node) {
      if (delta_objective_flip(y, mask, state, node, feature) < -kImprovementMargin) {
        state.flip(node, feature);
        improved = true;
      }
    }
  }
}

}  // namespace

void FitConfig::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ArgumentError("lambda must be > 0");
  if (!(sigma_w > 0.0) || !std::isfinite(sigma_w)) throw ArgumentError("sigma_w must be > 0");
  if (k_init < 1) throw ArgumentError("k_init must be >= 1");
  if (max_outer_iters < 1) throw ArgumentError("max_outer_iters must be >= 1");
  if (!(rel_tol > 0.0)) throw ArgumentError("rel_tol must be > 0");
  if (w_max_steps < 1) throw ArgumentError("w_max_steps must be >= 1");
  if (!(w_grad_tol > 0.0)) throw ArgumentError("w_grad_tol must be > 0");
  if (!(w_rel_tol >= 0.0)) throw ArgumentError("w_rel_tol must be >= 0");
}

ModelState init_state(std::size_t n, const FitConfig& config) {
  config.validate();
  if (n < 1) throw ArgumentError("init_state: n must be >= 1");
  std::mt19937_64 rng(config.seed);
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> gauss(0.0, config.sigma_w);
  BinaryMatrix z(n, config.k_init, 0);
  for (auto& v : z.flat()) v = coin(rng) ? 1 : 0;
  RealMatrix w(config.k_init, config.k_init, 0.0);
  for (auto& v : w.flat()) v = gauss(rng);
  return ModelState(std::move(z), std::move(w), config.lambda);
}

double delta_objective_flip(const AdjacencyMatrix& y, const ObservationMask& mask,
                            const ModelState& state, std::size_t node, std::size_t feature) {
  if (node >= state.n() || feature >= state.k_plus())
    throw ArgumentError("flip (" + std::to_string(node) + ", " + std::to_string(feature) +
                        ") out of range");
  const double sign = state.z()(node, feature) ? -1.0 : 1.0;
  const auto& logits = state.logits();
  const auto& left = state.left_cache();
  const auto& right = state.right_cache();
  double delta = 0.0;
  for (std::size_t j = 0; j < state.n(); ++j) {
    if (j == node) continue;
    if (mask(node, j)) {
      const double a = logits(node, j);
      delta += entry_loss(a + sign * left(j, feature), y(node, j)) - entry_loss(a, y(node, j));
    }
    if (mask(j, node)) {
      const double a = logits(j, node);
      delta += entry_loss(a + sign * right(j, feature), y(j, node)) - entry_loss(a, y(j, node));
    }
  }
  if (mask(node, node)) {
    const double a = logits(node, node);
    const double shifted =
        a + sign * (left(node, feature) + right(node, feature)) + state.w()(feature, feature);
    delta += entry_loss(shifted, y(node, node)) - entry_loss(a, y(node, node));
  }
  return delta;
}

bool sweep_z(const AdjacencyMatrix& y, const ObservationMask& mask, ModelState& state) {
  check_dimensions(y, mask, state);
  bool improved = false;
  for (std::size_t node = 0; node < state.n(); ++node) {
    for (std::size_t feature = 0; feature < state.k_plus(); ++feature) {
      if (delta_objective_flip(y, mask, state, node, feature) < -kImprovementMargin) {
        state.flip(node, feature);
        improved = true;
      }
    }
  }
  return improved;
}

std::size_t sweep_z_to_fixed_point(const AdjacencyMatrix& y, const ObservationMask& mask,
                                   ModelState& state) {
  std::size_t passes = 0;
  while (sweep_z(y, mask, state)) ++passes;
  return passes;
}

void optimize_w(const AdjacencyMatrix& y, const ObservationMask& mask, ModelState& state,
                const FitConfig& config) {
  check_dimensions(y, mask, state);
  const std::size_t k = state.k_plus();
  if (k == 0) return;

  const double start_objective = objective(y, mask, state);
  const double fixed_penalty = penalty(k, state.lambda());
  const auto active = detail::active_features(state.z());
  RealMatrix w = state.w();
  RealMatrix logits = state.logits();
  double current = start_objective;
  if (!std::isfinite(current)) throw NumericalError("optimize_w: non-finite starting objective");

  const bool newton = config.w_step == WStep::newton && k * k <= kMaxNewtonParams;
  auto gradient_small = [&](const RealMatrix& grad) {
    double grad_inf = 0.0;
    for (double g : grad.flat()) grad_inf = std::max(grad_inf, std::abs(g));
    if (!std::isfinite(grad_inf)) throw NumericalError("optimize_w: non-finite gradient");
    return grad_inf < config.w_grad_tol;
  };

  std::size_t step = 0;
  for (; step < config.w_max_steps; ++step) {
    RealMatrix grad, curvature;
    RealMatrix direction(k, k);
    bool solved = false;
    if (newton) {
      Eigen::MatrixXd hessian;
      newton_system(y, mask, active, logits, k, grad, hessian);
      if (!gradient_small(grad)) solved = damped_newton_direction(grad, std::move(hessian), direction);
    } else {
      grad = detail::nll_gradient_from_logits(y, mask, state.z(), logits,
                                              config.w_step == WStep::gradient ? nullptr : &curvature);
    }
    if (gradient_small(grad)) break;
    if (!solved) {
      // Plain or diagonally scaled gradient; also the fallback when the Newton system cannot be factored.
      for (std::size_t idx = 0; idx < grad.flat().size(); ++idx) {
        const double scale = curvature.empty() ? 1.0 : std::max(curvature.flat()[idx], kMinCurvature);
        direction.flat()[idx] = -grad.flat()[idx] / scale;
      }
    }
    double descent = 0.0;  // -grad . direction > 0
    for (std::size_t idx = 0; idx < grad.flat().size(); ++idx) descent -= grad.flat()[idx] * direction.flat()[idx];
    const RealMatrix lifted = lift_direction(mask, active, k, direction);

    double t = 1.0;
    bool accepted = false;
    bool stalled = false;
    for (int halving = 0; halving < kMaxHalvings; ++halving, t *= 0.5) {
      const double trial = nll_along(y, mask, logits, lifted, t) + fixed_penalty;
      if (!std::isfinite(trial))
        throw NumericalError("optimize_w: non-finite objective at step size " + std::to_string(t));
      if (trial < current && trial <= current - kArmijo * t * descent) {
        stalled = current - trial <= config.w_rel_tol * std::abs(current);
        current = trial;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    for (std::size_t idx = 0; idx < w.flat().size(); ++idx) w.flat()[idx] += t * direction.flat()[idx];
    for (std::size_t idx = 0; idx < logits.flat().size(); ++idx) logits.flat()[idx] += t * lifted.flat()[idx];
    if (stalled) break;
  }

  // Rebuild from the final W and keep it only if the exact recompute agrees
  // that it did not go uphill (the incremental logits carry rounding).
  RealMatrix previous = state.w();
  state.set_w(std::move(w));
  const double final_objective = objective(y, mask, state);
  if (!std::isfinite(final_objective)) throw NumericalError("optimize_w: non-finite final objective");
  if (final_objective > start_objective) state.set_w(std::move(previous));
}

ModelState propose_feature(const AdjacencyMatrix& y, const ObservationMask& mask,
                           const ModelState& state, const FitConfig& config, std::mt19937_64& rng) {
  check_dimensions(y, mask, state);
  const std::size_t n = state.n();
  const std::size_t k = state.k_plus();
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::normal_distribution<double> gauss(0.0, config.sigma_w);

  std::vector<std::uint8_t> column(n, 0);
  column[pick(rng)] = 1;
  std::vector<double> w_row(k + 1), w_col(k + 1);
  for (auto& v : w_row) v = gauss(rng);
  for (std::size_t a = 0; a < k; ++a) w_col[a] = gauss(rng);
  w_col[k] = w_row[k];

  ModelState candidate = state;
  candidate.append_feature(column, w_row, w_col);
  optimize_w(y, mask, candidate, config);
  if (config.birth_sweep == BirthSweep::full)
    sweep_z_to_fixed_point(y, mask, candidate);
  else
    sweep_column_to_fixed_point(y, mask, candidate, k);
  return candidate;
}

std::size_t prune_empty_features(ModelState& state) {
  std::size_t removed = 0;
  for (std::size_t feature = state.k_plus(); feature-- > 0;) {
    bool empty = true;
    for (std::size_t node = 0; node < state.n() && empty; ++node) empty = !state.z()(node, feature);
    if (empty) {
      state.remove_feature(feature);
      ++removed;
    }
  }
  return removed;
}

std::size_t remove_unprofitable_features(const AdjacencyMatrix& y, const ObservationMask& mask,
                                         ModelState& state) {
  check_dimensions(y, mask, state);
  std::size_t removed = 0;
  const double saving = state.lambda() * state.lambda();
  for (std::size_t feature = state.k_plus(); feature-- > 0;) {
    const auto& z = state.z();
    const auto& logits = state.logits();
    const auto& left = state.left_cache();
    const auto& right = state.right_cache();
    const double self = state.w()(feature, feature);
    double delta = -saving;
    for (std::size_t i = 0; i < state.n(); ++i) {
      for (std::size_t j = 0; j < state.n(); ++j) {
        if (!mask(i, j)) continue;
        const bool zi = z(i, feature) != 0;
        const bool zj = z(j, feature) != 0;
        if (!zi && !zj) continue;
        double contribution = 0.0;
        if (zi) contribution += left(j, feature);
        if (zj) contribution += right(i, feature);
        if (zi && zj) contribution -= self;
        const double a = logits(i, j);
        delta += entry_loss(a - contribution, y(i, j)) - entry_loss(a, y(i, j));
      }
    }
    if (delta < -kImprovementMargin) {
      state.remove_feature(feature);
      ++removed;
    }
  }
  return removed;
}

FitReport fit(const AdjacencyMatrix& y, const ObservationMask& mask, const FitConfig& config,
              const IterationObserver& observer) {
  config.validate();
  if (y.n() != mask.n()) throw ArgumentError("fit: Y and mask disagree on n");
  if (y.n() == 0) throw ArgumentError("fit: empty graph");
  const ObservationMask effective = config.include_diagonal ? mask : mask.without_diagonal();
  const auto start = Clock::now();

  FitReport report;
  ModelState state = init_state(y.n(), config);
  // Births draw from their own stream so that k_init does not shift them.
  std::seed_seq birth_seed{config.seed, std::uint64_t{0xB1B7}};
  std::mt19937_64 birth_rng(birth_seed);

  double previous = objective(y, effective, state);
  for (std::size_t iteration = 1; iteration <= config.max_outer_iters; ++iteration) {
    const auto iteration_start = Clock::now();
    sweep_z_to_fixed_point(y, effective, state);
    optimize_w(y, effective, state, config);
    std::size_t pruned = prune_empty_features(state);
    if (config.feature_removal) pruned += remove_unprofitable_features(y, effective, state);
    double current = objective(y, effective, state);

    bool accepted = false;
    for (std::size_t b = 0; b < config.births_per_iter; ++b) {
      ModelState candidate = propose_feature(y, effective, state, config, birth_rng);
      prune_empty_features(candidate);
      const double candidate_objective = objective(y, effective, candidate);
      if (candidate_objective < current - kImprovementMargin) {
        state = std::move(candidate);
        current = candidate_objective;
        accepted = true;
      }
    }

    report.objective_trace.push_back(current);
    report.k_trace.push_back(state.k_plus());
    report.accepted_births.push_back(accepted);
    report.pruned.push_back(pruned);
    report.elapsed.push_back(seconds_since(iteration_start));
    if (observer)
      observer({iteration, current, state.k_plus(), accepted, pruned, seconds_since(start)}, state);

    const double scale = std::max(std::abs(previous), std::numeric_limits<double>::min());
    const double relative_gain = (previous - current) / scale;
    previous = current;
    if (relative_gain < config.rel_tol && !accepted) {
      report.converged = true;
      break;
    }
  }

  // The last optimize_w/birth may leave single flips on the table; finish at a
  // one-flip local minimum with no empty or unprofitable features.
  std::size_t removed = 0;
  do {
    sweep_z_to_fixed_point(y, effective, state);
    removed = prune_empty_features(state);
    if (config.feature_removal) removed += remove_unprofitable_features(y, effective, state);
    report.pruned.back() += removed;
  } while (removed > 0);
  report.objective_trace.back() = objective(y, effective, state);
  report.k_trace.back() = state.k_plus();

  report.final_state = std::move(state);
  return report;
}

}  // namespace laftr
