#include "laftr/generator.hpp"

#include <cmath>
#include <random>
#include <string>

#include "laftr/error.hpp"
#include "laftr/model.hpp"

namespace laftr {

namespace {

double log_binomial(std::size_t n, std::size_t k) {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

}  // namespace

double harmonic_number(std::size_t n) {
  double h = 0.0;
  for (std::size_t i = 1; i <= n; ++i) h += 1.0 / static_cast<double>(i);
  return h;
}

IbpStats compute_ibp_stats(const BinaryMatrix& z) {
  IbpStats stats;
  stats.n = z.rows();
  stats.k_plus = z.cols();
  std::map<std::vector<std::uint8_t>, std::size_t> histories;
  for (std::size_t k = 0; k < z.cols(); ++k) {
    std::vector<std::uint8_t> column(z.rows());
    std::size_t count = 0;
    for (std::size_t i = 0; i < z.rows(); ++i) {
      column[i] = z(i, k);
      count += z(i, k);
    }
    if (count == 0) throw ArgumentError("feature " + std::to_string(k) + " has no members");
    stats.column_counts.push_back(count);
    ++histories[column];
  }
  for (const auto& [pattern, multiplicity] : histories) stats.history_multiplicities.push_back(multiplicity);
  return stats;
}

BinaryMatrix sample_ibp(std::size_t n, double alpha, std::uint64_t seed) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ArgumentError("alpha must be finite and >= 0");
  if (n < 1) throw ArgumentError("sample_ibp: n must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::uint8_t>> rows(n);
  std::vector<std::size_t> counts;
  for (std::size_t i = 0; i < n; ++i) {
    const double customer = static_cast<double>(i + 1);
    auto& row = rows[i];
    row.assign(counts.size(), 0);
    for (std::size_t k = 0; k < counts.size(); ++k) {
      std::bernoulli_distribution take(static_cast<double>(counts[k]) / customer);
      if (take(rng)) {
        row[k] = 1;
        ++counts[k];
      }
    }
    std::size_t fresh = 0;
    if (alpha > 0.0) fresh = std::poisson_distribution<std::size_t>(alpha / customer)(rng);
    row.insert(row.end(), fresh, 1);
    counts.insert(counts.end(), fresh, 1);
  }
  BinaryMatrix z(n, counts.size(), 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < rows[i].size(); ++k) z(i, k) = rows[i][k];
  return z;
}

double ibp_log_prior(const BinaryMatrix& z, double alpha) {
  if (!(alpha > 0.0)) throw ArgumentError("ibp_log_prior: alpha must be > 0");
  const IbpStats stats = compute_ibp_stats(z);
  double log_p = static_cast<double>(stats.k_plus) * std::log(alpha);
  for (std::size_t multiplicity : stats.history_multiplicities)
    log_p -= std::lgamma(static_cast<double>(multiplicity) + 1.0);
  log_p -= alpha * harmonic_number(stats.n);
  for (std::size_t count : stats.column_counts)
    log_p -= std::log(static_cast<double>(count)) + log_binomial(stats.n, count);
  return log_p;
}

AdjacencyMatrix sample_links(const BinaryMatrix& z, const RealMatrix& w, std::uint64_t seed) {
  if (w.rows() != z.cols() || w.cols() != z.cols()) throw ArgumentError("W must be K x K");
  const std::size_t n = z.rows();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  BinaryMatrix y(n, n, 0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      y(i, j) = unit(rng) < sigmoid(bilinear_logit(z, w, i, j)) ? 1 : 0;
    }
  return AdjacencyMatrix(std::move(y));
}

LfrmSample sample_lfrm(std::size_t n, double alpha, double sigma_w, std::uint64_t seed) {
  if (!(sigma_w > 0.0)) throw ArgumentError("sigma_w must be > 0");
  std::seed_seq streams{seed};
  std::uint64_t sub[3];
  {
    std::uint32_t raw[6];
    streams.generate(raw, raw + 6);
    for (int s = 0; s < 3; ++s) sub[s] = (std::uint64_t{raw[2 * s]} << 32) | raw[2 * s + 1];
  }
  LfrmSample sample{sample_ibp(n, alpha, sub[0]), {}, {}};
  const std::size_t k = sample.z.cols();
  sample.w = RealMatrix(k, k, 0.0);
  std::mt19937_64 rng(sub[1]);
  std::normal_distribution<double> gauss(0.0, sigma_w);
  for (auto& v : sample.w.flat()) v = gauss(rng);
  sample.y = sample_links(sample.z, sample.w, sub[2]);
  return sample;
}

BinaryMatrix planted_blocks(std::size_t n, std::size_t k) {
  if (k < 1 || k > n) throw ArgumentError("planted_blocks: need 1 <= k <= n");
  BinaryMatrix z(n, k, 0);
  for (std::size_t i = 0; i < n; ++i) z(i, i * k / n) = 1;
  return z;
}

RealMatrix planted_weights(std::size_t k, double magnitude) {
  RealMatrix w(k, k, -magnitude);
  for (std::size_t a = 0; a < k; ++a) w(a, a) = magnitude;
  return w;
}

}  // namespace laftr
