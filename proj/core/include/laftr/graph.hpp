#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "laftr/matrix.hpp"

namespace laftr {

/// N x N binary relation with optional node names.
class AdjacencyMatrix {
 public:
  AdjacencyMatrix() = default;
  /// Throws ArgumentError if `entries` is not square or holds values other than 0/1.
  explicit AdjacencyMatrix(BinaryMatrix entries, bool symmetric_hint = false);

  std::size_t n() const { return entries_.rows(); }
  std::uint8_t operator()(std::size_t i, std::size_t j) const { return entries_(i, j); }
  const BinaryMatrix& entries() const { return entries_; }

  bool symmetric_hint() const { return symmetric_hint_; }
  bool is_symmetric() const;

  const std::vector<std::string>& labels() const { return labels_; }
  /// Labels must be n distinct strings.
  void set_labels(std::vector<std::string> labels);

 private:
  BinaryMatrix entries_;
  std::vector<std::string> labels_;
  bool symmetric_hint_ = false;
};

/// Which entries of Y are visible to a fit (or to a scorer).
class ObservationMask {
 public:
  ObservationMask() = default;
  explicit ObservationMask(std::size_t n) : observed_(n, n, 0) {}
  explicit ObservationMask(BinaryMatrix observed);

  /// Every off-diagonal entry observed; the diagonal too if `include_diagonal`.
  static ObservationMask all_off_diagonal(std::size_t n, bool include_diagonal = false);

  std::size_t n() const { return observed_.rows(); }
  bool operator()(std::size_t i, std::size_t j) const { return observed_(i, j) != 0; }
  void set(std::size_t i, std::size_t j, bool value) { observed_(i, j) = value ? 1 : 0; }
  const BinaryMatrix& observed() const { return observed_; }

  std::size_t count() const;
  std::vector<std::pair<std::size_t, std::size_t>> entries() const;

  /// Copy with the diagonal cleared.
  ObservationMask without_diagonal() const;

  friend bool operator==(const ObservationMask&, const ObservationMask&) = default;

 private:
  BinaryMatrix observed_;
};

struct Split {
  ObservationMask train;
  ObservationMask test;
};

/// Edge list: "src dst" or "src dst v" per line, tab or space separated, '#' comments.
/// When `n` is absent it is 1 + the largest id seen.
AdjacencyMatrix load_edge_list(std::istream& in, std::optional<std::size_t> n = std::nullopt);

/// N rows of N whitespace separated 0/1 tokens. symmetric_hint is set from Y == Y^T.
AdjacencyMatrix load_dense_matrix(std::istream& in);

void write_dense_matrix(std::ostream& out, const AdjacencyMatrix& adj);

/// Partition eligible entries into train (floor(fraction * M) entries) and test.
/// The diagonal is never eligible unless `include_diagonal`. With `tie_symmetric`
/// the unit of sampling is the unordered pair {i, j}.
Split split_observations(const AdjacencyMatrix& adj, double train_fraction, std::uint64_t seed,
                         bool tie_symmetric, bool include_diagonal = false);

/// Mask file: lines "i j 1" (train) or "i j 0" (test). Unlisted entries are in neither.
void write_mask_file(std::ostream& out, const Split& split);
Split load_mask_file(std::istream& in, std::size_t n);

/// Pair list for scoring: "i j" per line, '#' comments.
std::vector<std::pair<std::size_t, std::size_t>> load_pair_list(std::istream& in);

}  // namespace laftr
