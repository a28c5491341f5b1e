#include "laftr/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "laftr/error.hpp"
#include "laftr/serialization.hpp"

namespace laftr {

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& task) {
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(count, 1));
  if (threads == 1) {
    for (std::size_t idx = 0; idx < count; ++idx) task(idx);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> workers;
  for (std::size_t t = 0; t < threads; ++t) {
    workers.emplace_back([&] {
      for (std::size_t idx = next++; idx < count; idx = next++) {
        try {
          task(idx);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  }
  workers.clear();
  if (failure) std::rethrow_exception(failure);
}

std::vector<double> predict_links(const ModelState& state,
                                  const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (auto [i, j] : pairs) out.push_back(link_probability(state, i, j));
  return out;
}

double auc_roc(const ScoredPairs& scored) {
  std::size_t positives = 0;
  for (const auto& p : scored) {
    if (!std::isfinite(p.score)) throw ArgumentError("auc_roc: non-finite score");
    if (p.label > 1) throw ArgumentError("auc_roc: labels must be 0 or 1");
    positives += p.label;
  }
  const std::size_t negatives = scored.size() - positives;
  if (positives == 0 || negatives == 0)
    throw MetricError("AUC is undefined: test labels contain a single class");

  std::vector<std::size_t> order(scored.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scored[a].score < scored[b].score; });

  // Average 1-based rank within each tie group; the sum is exact in doubles.
  double positive_rank_sum = 0.0;
  for (std::size_t start = 0; start < order.size();) {
    std::size_t end = start;
    while (end < order.size() && scored[order[end]].score == scored[order[start]].score) ++end;
    const double rank = 0.5 * static_cast<double>(start + 1 + end);
    for (std::size_t idx = start; idx < end; ++idx)
      if (scored[order[idx]].label) positive_rank_sum += rank;
    start = end;
  }
  const double p = static_cast<double>(positives);
  const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(negatives));
}

ScoredPairs score_entries(const AdjacencyMatrix& y, const ObservationMask& test, const ModelState& state) {
  if (y.n() != test.n() || y.n() != state.n()) throw ArgumentError("score_entries: dimension mismatch");
  ScoredPairs scored;
  for (auto [i, j] : test.entries()) scored.push_back({i, j, link_probability(state, i, j), y(i, j)});
  return scored;
}

SplitResult evaluate_split(const AdjacencyMatrix& y, const ObservationMask& train,
                           const ObservationMask& test, const FitConfig& config) {
  if (train.n() != test.n()) throw ArgumentError("evaluate_split: masks disagree on n");
  for (std::size_t idx = 0; idx < train.observed().flat().size(); ++idx)
    if (train.observed().flat()[idx] && test.observed().flat()[idx])
      throw ArgumentError("evaluate_split: train and test masks overlap");
  const auto start = std::chrono::steady_clock::now();
  SplitResult result;
  result.report = fit(y, train, config);
  const ObservationMask scored_mask = config.include_diagonal ? test : test.without_diagonal();
  result.auc = auc_roc(score_entries(y, scored_mask, result.report.final_state));
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

CvResult cross_validate_lambda(const AdjacencyMatrix& y, const ObservationMask& train,
                               const std::vector<double>& grid, const CvOptions& options,
                               const FitConfig& config) {
  if (grid.empty()) throw ArgumentError("cross_validate_lambda: empty lambda grid");
  if (options.folds < 2) throw ArgumentError("cross_validate_lambda: folds must be >= 2");
  for (double lambda : grid)
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ArgumentError("lambda grid values must be > 0");
  const std::size_t n = y.n();

  // Sampling units: an entry, or an entry with its mirror when both are training entries.
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> units;
  for (auto [i, j] : train.entries()) {
    if (options.tie_symmetric && i != j && train(j, i)) {
      if (j < i) continue;
      units.push_back({{i, j}, {j, i}});
    } else {
      units.push_back({{i, j}});
    }
  }
  std::mt19937_64 rng(options.seed);
  std::shuffle(units.begin(), units.end(), rng);

  std::vector<ObservationMask> validation(options.folds, ObservationMask(n));
  for (std::size_t u = 0; u < units.size(); ++u)
    for (auto [i, j] : units[u]) validation[u % options.folds].set(i, j, true);

  CvResult result;
  std::vector<bool> usable(options.folds, true);
  for (std::size_t f = 0; f < options.folds; ++f) {
    std::size_t positives = 0, total = 0;
    for (auto [i, j] : validation[f].entries()) {
      if (i == j && !config.include_diagonal) continue;
      positives += y(i, j);
      ++total;
    }
    if (positives == 0 || positives == total) {
      usable[f] = false;
      result.warnings.push_back("fold " + std::to_string(f) + " skipped: single-class validation labels");
    }
  }
  if (std::none_of(usable.begin(), usable.end(), [](bool b) { return b; }))
    throw MetricError("cross_validate_lambda: every fold has single-class validation labels");

  std::vector<double> aucs(grid.size() * options.folds, 0.0);
  parallel_for(aucs.size(), options.threads, [&](std::size_t task) {
    const std::size_t g = task / options.folds;
    const std::size_t f = task % options.folds;
    if (!usable[f]) return;
    ObservationMask fold_train = train;
    for (auto [i, j] : validation[f].entries()) fold_train.set(i, j, false);
    FitConfig fold_config = config;
    fold_config.lambda = grid[g];
    aucs[task] = evaluate_split(y, fold_train, validation[f], fold_config).auc;
  });

  for (std::size_t g = 0; g < grid.size(); ++g) {
    CvRow row{grid[g], 0.0, 0};
    for (std::size_t f = 0; f < options.folds; ++f) {
      if (!usable[f]) continue;
      row.mean_auc += aucs[g * options.folds + f];
      ++row.folds_used;
    }
    row.mean_auc /= static_cast<double>(row.folds_used);
    result.table.push_back(row);
  }
  const CvRow* best = &result.table.front();
  for (const auto& row : result.table)
    if (row.mean_auc > best->mean_auc || (row.mean_auc == best->mean_auc && row.lambda < best->lambda))
      best = &row;
  result.best_lambda = best->lambda;
  return result;
}

ProtocolResult run_protocol(const AdjacencyMatrix& y, const ProtocolOptions& options,
                            const FitConfig& config) {
  if (options.splits < 1) throw ArgumentError("run_protocol: splits must be >= 1");
  ProtocolResult result;
  result.runs.resize(options.splits);
  parallel_for(options.splits, options.threads, [&](std::size_t s) {
    const std::uint64_t split_seed = options.seed + s;
    const Split split = split_observations(y, options.train_fraction, split_seed, options.tie_symmetric,
                                           config.include_diagonal);
    FitConfig split_config = config;
    split_config.seed = split_seed;
    if (!options.lambda_grid.empty()) {
      CvOptions cv{options.folds, split_seed, options.tie_symmetric, 1};
      split_config.lambda =
          cross_validate_lambda(y, split.train, options.lambda_grid, cv, split_config).best_lambda;
    }
    const SplitResult evaluated = evaluate_split(y, split.train, split.test, split_config);
    result.runs[s] = {split_seed, split_config.lambda, evaluated.report.final_state.k_plus(), evaluated.auc,
                      evaluated.seconds};
  });
  double sum = 0.0;
  for (const auto& run : result.runs) sum += run.auc;
  result.mean_auc = sum / static_cast<double>(result.runs.size());
  double sq = 0.0;
  for (const auto& run : result.runs) sq += (run.auc - result.mean_auc) * (run.auc - result.mean_auc);
  result.std_auc = std::sqrt(sq / static_cast<double>(result.runs.size()));
  return result;
}

void write_protocol_csv(std::ostream& out, const ProtocolResult& result) {
  out << "split_seed,lambda,k_final,auc,seconds\n";
  for (const auto& run : result.runs)
    out << run.split_seed << ',' << format_real(run.lambda) << ',' << run.k_final << ','
        << format_real(run.auc) << ',' << format_real(run.seconds) << '\n';
}

void write_protocol_json(std::ostream& out, const ProtocolResult& result) {
  out << "{\n  \"mean_auc\": " << format_real(result.mean_auc) << ",\n  \"std_auc\": "
      << format_real(result.std_auc) << ",\n  \"runs\": [";
  for (std::size_t r = 0; r < result.runs.size(); ++r) {
    const auto& run = result.runs[r];
    out << (r ? ",\n    " : "\n    ") << "{\"split_seed\": " << run.split_seed
        << ", \"lambda\": " << format_real(run.lambda) << ", \"k_final\": " << run.k_final
        << ", \"auc\": " << format_real(run.auc) << ", \"seconds\": " << format_real(run.seconds) << "}";
  }
  out << (result.runs.empty() ? "]\n}\n" : "\n  ]\n}\n");
}

void write_cv_csv(std::ostream& out, const CvResult& result) {
  out << "lambda,mean_auc,folds_used\n";
  for (const auto& row : result.table)
    out << format_real(row.lambda) << ',' << format_real(row.mean_auc) << ',' << row.folds_used << '\n';
}

}  // namespace laftr
