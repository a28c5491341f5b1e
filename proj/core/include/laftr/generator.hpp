#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "laftr/graph.hpp"
#include "laftr/matrix.hpp"

namespace laftr {

/// Column statistics of a binary feature matrix.
struct IbpStats {
  std::size_t n = 0;
  std::size_t k_plus = 0;
  std::vector<std::size_t> column_counts;  // m_k: nodes holding feature k
  /// Number of columns sharing each distinct N-bit column pattern.
  std::vector<std::size_t> history_multiplicities;
};

/// Throws ArgumentError if z has an all-zero column.
IbpStats compute_ibp_stats(const BinaryMatrix& z);

/// Sequential Indian buffet draw: node i (1-based) takes existing feature k with
/// probability m_k / i, then opens Poisson(alpha / i) new features.
BinaryMatrix sample_ibp(std::size_t n, double alpha, std::uint64_t seed);

/// log P(Z) for the IBP, with the per-feature factor m_k^{-1} C(N, m_k)^{-1}:
///   K log(alpha) - sum_h log(K_h!) - alpha H_N - sum_k [log m_k + log C(N, m_k)].
/// m^{-1} C(N, m)^{-1} = (N - m)! (m - 1)! / N!, the usual exchangeable IBP factor.
double ibp_log_prior(const BinaryMatrix& z, double alpha);

/// H_N = sum_{i=1}^{N} 1/i.
double harmonic_number(std::size_t n);

struct LfrmSample {
  BinaryMatrix z;
  RealMatrix w;
  AdjacencyMatrix y;
};

/// Y_ij ~ Bernoulli(sigma(z_i^T W z_j)) for i != j; diagonal is 0.
AdjacencyMatrix sample_links(const BinaryMatrix& z, const RealMatrix& w, std::uint64_t seed);

/// Z ~ IBP(alpha), W entrywise Gaussian(0, sigma_w^2), then sample_links.
LfrmSample sample_lfrm(std::size_t n, double alpha, double sigma_w, std::uint64_t seed);

/// n nodes split into k contiguous, disjoint, near-equal blocks.
BinaryMatrix planted_blocks(std::size_t n, std::size_t k);

/// k x k matrix with +magnitude on the diagonal and -magnitude elsewhere.
RealMatrix planted_weights(std::size_t k, double magnitude);

}  // namespace laftr
