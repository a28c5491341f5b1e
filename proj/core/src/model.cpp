#include "laftr/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "laftr/error.hpp"

namespace laftr {

namespace {

double clamp_logit(double a) { return std::clamp(a, -kLogitClamp, kLogitClamp); }

void check_index(const ModelState& state, std::size_t i, std::size_t j) {
  if (i >= state.n() || j >= state.n())
    throw ArgumentError("node index (" + std::to_string(i) + ", " + std::to_string(j) +
                        ") out of range for n=" + std::to_string(state.n()));
}

}  // namespace

double sigmoid(double x) {
  x = clamp_logit(x);
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) {
  x = clamp_logit(x);
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double entry_loss(double logit, std::uint8_t y) {
  const double a = clamp_logit(logit);
  return std::max(a, 0.0) + std::log1p(std::exp(-std::abs(a))) - (y ? a : 0.0);
}

ModelState::ModelState(BinaryMatrix z, RealMatrix w, double lambda)
    : z_(std::move(z)), w_(std::move(w)), lambda_(lambda) {
  if (w_.rows() != z_.cols() || w_.cols() != z_.cols())
    throw ArgumentError("W must be K x K for a Z with K columns");
  for (auto v : z_.flat())
    if (v > 1) throw ArgumentError("Z entries must be 0 or 1");
  set_lambda(lambda);
  rebuild_caches();
}

void ModelState::set_lambda(double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ArgumentError("lambda must be finite and >= 0");
  lambda_ = lambda;
}

void ModelState::set_w(RealMatrix w) {
  if (w.rows() != k_plus() || w.cols() != k_plus()) throw ArgumentError("W shape mismatch");
  w_ = std::move(w);
  rebuild_caches();
}

void ModelState::rebuild_caches() {
  const std::size_t n = this->n();
  const std::size_t k = k_plus();
  left_ = RealMatrix(n, k, 0.0);
  right_ = RealMatrix(n, k, 0.0);
  for (std::size_t node = 0; node < n; ++node) {
    for (std::size_t a = 0; a < k; ++a) {
      double l = 0.0, r = 0.0;
      for (std::size_t b = 0; b < k; ++b) {
        if (!z_(node, b)) continue;
        l += w_(a, b);
        r += w_(b, a);
      }
      left_(node, a) = l;
      right_(node, a) = r;
    }
  }
  logits_ = RealMatrix(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) logits_(i, j) = bilinear_logit(z_, w_, i, j);
}

void ModelState::flip(std::size_t node, std::size_t feature) {
  if (node >= n() || feature >= k_plus()) throw ArgumentError("flip index out of range");
  const double delta = z_(node, feature) ? -1.0 : 1.0;
  const std::size_t n = this->n();
  for (std::size_t j = 0; j < n; ++j) {
    if (j == node) continue;
    logits_(node, j) += delta * left_(j, feature);
    logits_(j, node) += delta * right_(j, feature);
  }
  logits_(node, node) += delta * (left_(node, feature) + right_(node, feature)) + w_(feature, feature);

  z_(node, feature) = z_(node, feature) ? 0 : 1;
  for (std::size_t a = 0; a < k_plus(); ++a) {
    left_(node, a) += delta * w_(a, feature);
    right_(node, a) += delta * w_(feature, a);
  }
}

void ModelState::append_feature(std::span<const std::uint8_t> column, std::span<const double> w_row,
                                std::span<const double> w_col) {
  const std::size_t k = k_plus();
  if (column.size() != n() || w_row.size() != k + 1 || w_col.size() != k + 1)
    throw ArgumentError("append_feature: size mismatch");
  BinaryMatrix z(n(), k + 1, 0);
  for (std::size_t i = 0; i < n(); ++i) {
    std::copy(z_.row(i).begin(), z_.row(i).end(), z.row(i).begin());
    if (column[i] > 1) throw ArgumentError("Z entries must be 0 or 1");
    z(i, k) = column[i];
  }
  RealMatrix w(k + 1, k + 1, 0.0);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) w(a, b) = w_(a, b);
  for (std::size_t b = 0; b <= k; ++b) w(k, b) = w_row[b];
  for (std::size_t a = 0; a < k; ++a) w(a, k) = w_col[a];
  z_ = std::move(z);
  w_ = std::move(w);
  rebuild_caches();
}

void ModelState::remove_feature(std::size_t feature) {
  const std::size_t k = k_plus();
  if (feature >= k) throw ArgumentError("remove_feature: index out of range");
  BinaryMatrix z(n(), k - 1, 0);
  for (std::size_t i = 0; i < n(); ++i)
    for (std::size_t a = 0, out = 0; a < k; ++a)
      if (a != feature) z(i, out++) = z_(i, a);
  RealMatrix w(k - 1, k - 1, 0.0);
  for (std::size_t a = 0, ra = 0; a < k; ++a) {
    if (a == feature) continue;
    for (std::size_t b = 0, rb = 0; b < k; ++b)
      if (b != feature) w(ra, rb++) = w_(a, b);
    ++ra;
  }
  bool inert = true;
  for (std::size_t i = 0; i < n() && inert; ++i) inert = z_(i, feature) == 0;
  z_ = std::move(z);
  w_ = std::move(w);
  if (!inert) {
    rebuild_caches();
    return;
  }
  // An all-zero column contributes exact zeros to every cache entry, so the
  // logits stay as they are and the feature caches just lose a column.
  auto drop_column = [&](RealMatrix& m) {
    RealMatrix out(n(), k - 1, 0.0);
    for (std::size_t i = 0; i < n(); ++i)
      for (std::size_t a = 0, c = 0; a < k; ++a)
        if (a != feature) out(i, c++) = m(i, a);
    m = std::move(out);
  };
  drop_column(left_);
  drop_column(right_);
}

double ModelState::cache_error() const {
  ModelState fresh = *this;
  fresh.rebuild_caches();
  double err = 0.0;
  auto compare = [&err](const RealMatrix& a, const RealMatrix& b) {
    for (std::size_t idx = 0; idx < a.flat().size(); ++idx)
      err = std::max(err, std::abs(a.flat()[idx] - b.flat()[idx]));
  };
  compare(logits_, fresh.logits_);
  compare(left_, fresh.left_);
  compare(right_, fresh.right_);
  return err;
}

double bilinear_logit(const BinaryMatrix& z, const RealMatrix& w, std::size_t i, std::size_t j) {
  const std::size_t k = z.cols();
  double sum = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    if (z(i, a) && z(j, a)) sum += w(a, a);
    for (std::size_t b = 0; b < a; ++b) {
      const double forward = (z(i, a) && z(j, b)) ? w(a, b) : 0.0;
      const double mirrored = (z(i, b) && z(j, a)) ? w(b, a) : 0.0;
      sum += forward + mirrored;
    }
  }
  return sum;
}

double link_probability(const ModelState& state, std::size_t i, std::size_t j) {
  check_index(state, i, j);
  return sigmoid(state.logits()(i, j));
}

void check_dimensions(const AdjacencyMatrix& y, const ObservationMask& mask, const ModelState& state) {
  if (y.n() != mask.n() || y.n() != state.n())
    throw ArgumentError("dimension mismatch: Y is " + std::to_string(y.n()) + ", mask is " +
                        std::to_string(mask.n()) + ", model is " + std::to_string(state.n()));
}

double negative_log_likelihood(const AdjacencyMatrix& y, const ObservationMask& mask,
                               const ModelState& state) {
  check_dimensions(y, mask, state);
  const auto& logits = state.logits();
  double total = 0.0;
  for (std::size_t i = 0; i < y.n(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < y.n(); ++j)
      if (mask(i, j)) row += entry_loss(logits(i, j), y(i, j));
    total += row;
  }
  return total;
}

double objective(const AdjacencyMatrix& y, const ObservationMask& mask, const ModelState& state) {
  return negative_log_likelihood(y, mask, state) +
         static_cast<double>(state.k_plus()) * state.lambda() * state.lambda();
}

RealMatrix nll_gradient_w(const AdjacencyMatrix& y, const ObservationMask& mask,
                          const ModelState& state) {
  check_dimensions(y, mask, state);
  return detail::nll_gradient_from_logits(y, mask, state.z(), state.logits());
}

namespace detail {

std::vector<std::vector<std::size_t>> active_features(const BinaryMatrix& z) {
  std::vector<std::vector<std::size_t>> active(z.rows());
  for (std::size_t i = 0; i < z.rows(); ++i)
    for (std::size_t a = 0; a < z.cols(); ++a)
      if (z(i, a)) active[i].push_back(a);
  return active;
}

RealMatrix nll_gradient_from_logits(const AdjacencyMatrix& y, const ObservationMask& mask,
                                    const BinaryMatrix& z, const RealMatrix& logits,
                                    RealMatrix* curvature) {
  const std::size_t n = y.n();
  const std::size_t k = z.cols();
  const auto active = active_features(z);
  RealMatrix grad(k, k, 0.0);
  if (curvature) *curvature = RealMatrix(k, k, 0.0);
  std::vector<double> residual_sum(k), curvature_sum(k);
  for (std::size_t i = 0; i < n; ++i) {
    if (active[i].empty()) continue;
    // residual_sum[b] = sum over observed j holding feature b of (p_ij - y_ij)
    std::fill(residual_sum.begin(), residual_sum.end(), 0.0);
    std::fill(curvature_sum.begin(), curvature_sum.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      if (!mask(i, j) || active[j].empty()) continue;
      const double p = sigmoid(logits(i, j));
      const double r = p - static_cast<double>(y(i, j));
      for (std::size_t b : active[j]) residual_sum[b] += r;
      if (curvature)
        for (std::size_t b : active[j]) curvature_sum[b] += p * (1.0 - p);
    }
    for (std::size_t a : active[i]) {
      for (std::size_t b = 0; b < k; ++b) grad(a, b) += residual_sum[b];
      if (curvature)
        for (std::size_t b = 0; b < k; ++b) (*curvature)(a, b) += curvature_sum[b];
    }
  }
  return grad;
}

}  // namespace detail

double bernoulli_bregman(double x, double q) {
  if (!(q > 0.0 && q < 1.0)) throw ArgumentError("bernoulli_bregman: q must lie in (0, 1)");
  if (!(x >= 0.0 && x <= 1.0)) throw ArgumentError("bernoulli_bregman: x must lie in [0, 1]");
  const double one = x > 0.0 ? x * (std::log(x) - std::log(q)) : 0.0;
  const double zero = x < 1.0 ? (1.0 - x) * (std::log(1.0 - x) - std::log(1.0 - q)) : 0.0;
  return one + zero;
}

double bernoulli_nll(double y, double p) {
  if (!(p > 0.0 && p < 1.0)) throw ArgumentError("bernoulli_nll: p must lie in (0, 1)");
  const double one = y > 0.0 ? y * (0.0 - std::log(p)) : 0.0;
  const double zero = y < 1.0 ? (1.0 - y) * (0.0 - std::log(1.0 - p)) : 0.0;
  return one + zero;
}

double scaled_log_partition(double eta_tilde, double beta) {
  if (!(beta > 0.0)) throw ArgumentError("scaled_log_partition: beta must be > 0");
  const double x = eta_tilde / beta;
  return beta * (std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))));
}

}  // namespace laftr
