#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "laftr/graph.hpp"
#include "laftr/model.hpp"

namespace laftr {

/// Strict-improvement margin for flips, births and feature removal.
inline constexpr double kImprovementMargin = 1e-12;

/// Descent direction used by optimize_w.
enum class WStep {
  gradient,  // -g
  diagonal,  // -g / max(diag H, 1)
  newton,    // -(H + mu I)^{-1} g; falls back to diagonal when K^2 > kMaxNewtonParams
};

/// Largest number of W entries solved with a dense Newton system.
inline constexpr std::size_t kMaxNewtonParams = 1024;

enum class BirthSweep {
  full,        // sweep every coordinate of the candidate Z to a fixed point
  new_column,  // only the appended column
};

struct FitConfig {
  double lambda = 0.5;
  double sigma_w = 1.0;        // scale of the Gaussian used to initialize and grow W
  std::size_t k_init = 1;
  std::size_t max_outer_iters = 100;
  double rel_tol = 1e-6;
  std::size_t w_max_steps = 200;
  double w_grad_tol = 1e-6;
  double w_rel_tol = 1e-10;        // stop once a W step gains less than this fraction of Q (0 disables)
  WStep w_step = WStep::newton;
  std::uint64_t seed = 0;
  std::size_t births_per_iter = 1;
  bool include_diagonal = false;
  BirthSweep birth_sweep = BirthSweep::full;
  bool feature_removal = true;  // try dropping whole features whose removal lowers Q

  /// Throws ArgumentError when a field is out of range.
  void validate() const;
};

/// One outer iteration, as seen by an observer.
struct IterationInfo {
  std::size_t iteration = 0;   // 1-based
  double objective = 0.0;
  std::size_t k_plus = 0;
  bool birth_accepted = false;  // any proposal this iteration was kept
  std::size_t pruned = 0;
  double seconds = 0.0;        // cumulative wall clock since fit() started
};

struct FitReport {
  std::vector<double> objective_trace;
  std::vector<std::size_t> k_trace;
  std::vector<bool> accepted_births;  // per iteration: any proposal kept
  std::vector<std::size_t> pruned;
  std::vector<double> elapsed;  // per-iteration wall clock, seconds
  bool converged = false;
  ModelState final_state;
};

using IterationObserver = std::function<void(const IterationInfo&, const ModelState&)>;

/// Fair-coin Z (n x k_init) and Gaussian(0, sigma_w^2) W, seeded from config.seed.
ModelState init_state(std::size_t n, const FitConfig& config);

/// Q(state with z(node, feature) flipped) - Q(state), in O(N) from the caches.
/// The penalty term does not change (the column count is unchanged).
double delta_objective_flip(const AdjacencyMatrix& y, const ObservationMask& mask,
                            const ModelState& state, std::size_t node, std::size_t feature);

/// One row-major pass over all (n, k); flips whenever the delta is below
/// -kImprovementMargin. Returns true if anything flipped.
bool sweep_z(const AdjacencyMatrix& y, const ObservationMask& mask, ModelState& state);

/// Repeat sweep_z until no flip happens. Returns the number of flips made.
std::size_t sweep_z_to_fixed_point(const AdjacencyMatrix& y, const ObservationMask& mask,
                                   ModelState& state);

/// Descent on W (Z fixed) with Armijo backtracking: initial step 1, halving,
/// along the direction chosen by config.w_step. Stops on
/// ||grad||_inf < w_grad_tol, when an accepted step lowers Q by at most
/// w_rel_tol * |Q|, or after w_max_steps.
/// Throws NumericalError if the objective becomes non-finite.
void optimize_w(const AdjacencyMatrix& y, const ObservationMask& mask, ModelState& state,
                const FitConfig& config);

/// Candidate with one extra feature held by a single random node, new W
/// entries drawn from Gaussian(0, sigma_w^2), then W optimized and Z swept.
/// The input state is left untouched; the candidate is not pruned.
ModelState propose_feature(const AdjacencyMatrix& y, const ObservationMask& mask,
                           const ModelState& state, const FitConfig& config, std::mt19937_64& rng);

/// Remove all-zero columns of Z with their W row/column. Returns the count removed.
std::size_t prune_empty_features(ModelState& state);

/// Greedily drop whole features whose removal lowers Q by more than the
/// improvement margin (the saved lambda^2 outweighs the lost fit). Returns the
/// count removed.
std::size_t remove_unprofitable_features(const AdjacencyMatrix& y, const ObservationMask& mask,
                                         ModelState& state);

/// The full alternating loop: sweep Z to a fixed point, optimize W, prune,
/// then propose births and keep each one only if it lowers Q.
FitReport fit(const AdjacencyMatrix& y, const ObservationMask& mask, const FitConfig& config,
              const IterationObserver& observer = {});

}  // namespace laftr
