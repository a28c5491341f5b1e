#pragma once

#include <cstddef>
#include <vector>

#include "laftr/graph.hpp"
#include "laftr/matrix.hpp"

namespace laftr {

/// Logits are clamped to this magnitude before any exp().
inline constexpr double kLogitClamp = 500.0;

double sigmoid(double x);
/// log(1 + e^x), as max(x, 0) + log1p(exp(-|x|)).
double softplus(double x);
/// Per-entry Bernoulli negative log-likelihood in logit form: softplus(a) - y a,
/// with a clamped to [-kLogitClamp, kLogitClamp].
double entry_loss(double logit, std::uint8_t y);

/// Z (N x K binary), W (K x K real), the penalty weight lambda, and the caches
///
///   logits(i, j)      = z_i^T W z_j
///   left_cache(j, k)  = W[k, :] . z_j
///   right_cache(i, k) = z_i . W[:, k]
///
/// All mutation goes through member functions so the caches never go stale.
/// Single-coordinate flips update the caches incrementally (O(N K)); everything
/// else rebuilds them.
class ModelState {
 public:
  ModelState() = default;
  /// Throws ArgumentError on shape mismatch, non-binary z, or lambda < 0.
  ModelState(BinaryMatrix z, RealMatrix w, double lambda);

  std::size_t n() const { return z_.rows(); }
  std::size_t k_plus() const { return z_.cols(); }
  double lambda() const { return lambda_; }

  const BinaryMatrix& z() const { return z_; }
  const RealMatrix& w() const { return w_; }
  const RealMatrix& logits() const { return logits_; }
  const RealMatrix& left_cache() const { return left_; }
  const RealMatrix& right_cache() const { return right_; }

  /// Flip z(node, feature) and patch row/column `node` of the logits plus
  /// row `node` of both feature caches.
  void flip(std::size_t node, std::size_t feature);

  void set_w(RealMatrix w);
  void set_lambda(double lambda);

  /// Append a feature column `column` (length N) with new W row `w_row` and
  /// column `w_col` (both length K+1; they share the new diagonal entry, taken from w_row).
  void append_feature(std::span<const std::uint8_t> column, std::span<const double> w_row,
                      std::span<const double> w_col);

  /// Drop feature k: column k of Z, row and column k of W.
  void remove_feature(std::size_t feature);

  /// Recompute all caches from Z and W.
  void rebuild_caches();

  /// Largest absolute deviation between the caches and a from-scratch recompute.
  double cache_error() const;

 private:
  BinaryMatrix z_;
  RealMatrix w_;
  double lambda_ = 0.0;
  RealMatrix logits_;
  RealMatrix left_;
  RealMatrix right_;
};

/// z_i^T W z_j evaluated from scratch. Off-diagonal (k, k') terms are added in
/// mirrored pairs, so transposing W and swapping (i, j) gives the identical double.
double bilinear_logit(const BinaryMatrix& z, const RealMatrix& w, std::size_t i, std::size_t j);

/// sigma(z_i^T W z_j) from the cached logits. Throws ArgumentError on bad indices.
double link_probability(const ModelState& state, std::size_t i, std::size_t j);

/// Sum over observed (i, j) of softplus(a_ij) - y_ij a_ij.
double negative_log_likelihood(const AdjacencyMatrix& y, const ObservationMask& mask,
                               const ModelState& state);

/// negative_log_likelihood + K * lambda^2.
double objective(const AdjacencyMatrix& y, const ObservationMask& mask, const ModelState& state);

/// Gradient of the NLL with respect to W:
/// G[k][k'] = sum over observed (i, j) of (p_ij - y_ij) z_ik z_jk'.
RealMatrix nll_gradient_w(const AdjacencyMatrix& y, const ObservationMask& mask,
                          const ModelState& state);

namespace detail {
/// Feature indices held by each node.
std::vector<std::vector<std::size_t>> active_features(const BinaryMatrix& z);

/// nll_gradient_w for an explicit logit matrix (no size checks). When
/// `curvature` is given it receives the Hessian diagonal
/// H[k][k'] = sum over observed (i, j) of p_ij (1 - p_ij) z_ik z_jk'.
RealMatrix nll_gradient_from_logits(const AdjacencyMatrix& y, const ObservationMask& mask,
                                    const BinaryMatrix& z, const RealMatrix& logits,
                                    RealMatrix* curvature = nullptr);
}  // namespace detail

/// Throws ArgumentError unless y, mask and state agree on N.
void check_dimensions(const AdjacencyMatrix& y, const ObservationMask& mask, const ModelState& state);

// Bernoulli as an exponential family and its Bregman form. Used by tests to
// verify the objective; the fitted model never needs a scale parameter.

/// d_phi(x, q) = x log(x/q) + (1-x) log((1-x)/(1-q)), with 0 log 0 = 0.
/// Throws ArgumentError unless 0 < q < 1 and 0 <= x <= 1.
double bernoulli_bregman(double x, double q);

/// -y log p - (1-y) log(1-p) in probability form, term-for-term like bernoulli_bregman.
double bernoulli_nll(double y, double p);

/// beta * log(1 + exp(eta_tilde / beta)). Throws ArgumentError for beta <= 0.
double scaled_log_partition(double eta_tilde, double beta);

}  // namespace laftr
