#pragma once

#include <cstdint>
#include <ostream>
#include <utility>
#include <vector>

#include "laftr/graph.hpp"
#include "laftr/model.hpp"
#include "laftr/optimizer.hpp"

namespace laftr {

struct ScoredPair {
  std::size_t i = 0;
  std::size_t j = 0;
  double score = 0.0;
  std::uint8_t label = 0;
};

using ScoredPairs = std::vector<ScoredPair>;

/// link_probability for each pair, in order. Throws ArgumentError on a bad index.
std::vector<double> predict_links(const ModelState& state,
                                  const std::vector<std::pair<std::size_t, std::size_t>>& pairs);

/// Mann-Whitney AUC: (concordant + 0.5 * tied) / (positives * negatives),
/// computed from average ranks in O(P log P).
/// Throws MetricError when only one class is present, ArgumentError on non-finite scores.
double auc_roc(const ScoredPairs& scored);

/// Score every test entry with a fitted state.
ScoredPairs score_entries(const AdjacencyMatrix& y, const ObservationMask& test, const ModelState& state);

struct SplitResult {
  double auc = 0.0;
  FitReport report;
  double seconds = 0.0;
};

/// Fit on `train` only and report AUC over `test`. The fit never sees test entries.
SplitResult evaluate_split(const AdjacencyMatrix& y, const ObservationMask& train,
                           const ObservationMask& test, const FitConfig& config);

struct CvRow {
  double lambda = 0.0;
  double mean_auc = 0.0;
  std::size_t folds_used = 0;
};

struct CvResult {
  double best_lambda = 0.0;
  std::vector<CvRow> table;
  std::vector<std::string> warnings;
};

struct CvOptions {
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  /// Keep (i, j) and (j, i) in the same fold when both are training entries.
  bool tie_symmetric = false;
  std::size_t threads = 1;
};

/// k-fold cross-validation of lambda over the entries of `train`. Picks the
/// highest mean validation AUC, breaking ties toward the smaller lambda. Folds
/// whose validation labels are single-class are skipped with a warning.
CvResult cross_validate_lambda(const AdjacencyMatrix& y, const ObservationMask& train,
                               const std::vector<double>& grid, const CvOptions& options,
                               const FitConfig& config);

struct ProtocolOptions {
  std::size_t splits = 5;
  double train_fraction = 0.8;
  std::uint64_t seed = 0;   // split s uses seed + s
  bool tie_symmetric = false;
  std::size_t threads = 1;
  /// When non-empty, lambda is chosen per split by CV on that split's train entries.
  std::vector<double> lambda_grid;
  std::size_t folds = 5;
};

struct ProtocolRun {
  std::uint64_t split_seed = 0;
  double lambda = 0.0;
  std::size_t k_final = 0;
  double auc = 0.0;
  double seconds = 0.0;
};

struct ProtocolResult {
  std::vector<ProtocolRun> runs;
  double mean_auc = 0.0;
  double std_auc = 0.0;  // population standard deviation over runs
};

/// Repeated seeded train/test splits. Splits may run in parallel; results are
/// ordered by split index and do not depend on the thread count.
ProtocolResult run_protocol(const AdjacencyMatrix& y, const ProtocolOptions& options,
                            const FitConfig& config);

/// CSV header "split_seed,lambda,k_final,auc,seconds" followed by one row per run.
void write_protocol_csv(std::ostream& out, const ProtocolResult& result);
/// {"mean_auc": ..., "std_auc": ..., "runs": [...]}
void write_protocol_json(std::ostream& out, const ProtocolResult& result);
/// CSV header "lambda,mean_auc,folds_used".
void write_cv_csv(std::ostream& out, const CvResult& result);

/// Run `task(index)` for index in [0, count) on up to `threads` workers.
/// The first exception thrown is rethrown after all workers stop.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& task);

}  // namespace laftr
