#pragma once

#include "chansel/evaluator.hpp"
#include "chansel/metrics.hpp"
#include "chansel/model.hpp"
#include "chansel/signal.hpp"

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace chansel {

enum class Metric { wer, per };

std::string_view to_string(Metric m);
Metric parse_metric(std::string_view text);

/**
 * EvalRecord store keyed by (subset label, corpus hash, config hash, seed).
 *
 * With a backing file, records are appended as JSON lines, one write per
 * record, so an interrupted run leaves at most one truncated trailing line;
 * unreadable lines are skipped on load. Safe for concurrent use.
 */
class ResultCache {
public:
  ResultCache() = default;
  explicit ResultCache(std::filesystem::path jsonl_path);

  static std::string key(const std::string &subset_label, const std::string &corpus_hash,
                         const std::string &config_hash, std::uint64_t seed);

  std::optional<EvalRecord> find(const std::string &key) const;
  void insert(const EvalRecord &record);
  std::size_t size() const;
  std::size_t skipped_lines() const noexcept { return skipped_lines_; }

private:
  mutable std::mutex mutex_;
  std::unordered_map<std::string, EvalRecord> records_;
  std::optional<std::filesystem::path> path_;
  std::size_t skipped_lines_ = 0;
};

struct SearchOptions {
  /// Training seeds per subset; metrics are averaged across them.
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  Metric metric = Metric::wer;
  std::size_t workers = 1;
  /// Largest number of subsets an exhaustive sweep may enumerate.
  std::size_t budget = 5000;
  ResultCache *cache = nullptr;
  /// Stop (throwing SearchInterrupted) once this many fresh evaluations have run.
  std::size_t max_new_evaluations = std::numeric_limits<std::size_t>::max();
};

class SearchInterrupted : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Seed-averaged evaluation of one subset.
struct SubsetResult {
  ChannelSubset subset;
  std::vector<EvalRecord> runs;
  double wer = 0.0;
  double per_total = 0.0;
  CategoryReport per_category;

  double metric(Metric m) const { return m == Metric::wer ? wer : per_total; }
};

SubsetResult aggregate_runs(const ChannelSubset &subset, std::vector<EvalRecord> runs);

/**
 * Evaluates subsets x seeds on a bounded worker pool, consulting the cache
 * first. Results come back in input order regardless of scheduling.
 */
class SubsetScorer {
public:
  SubsetScorer(const Evaluator &evaluator, const SearchOptions &options);

  std::vector<SubsetResult> score(const std::vector<ChannelSubset> &subsets);
  SubsetResult score(const ChannelSubset &subset);

  std::size_t evaluator_calls() const noexcept { return calls_.load(); }
  const SearchOptions &options() const noexcept { return options_; }

private:
  const Evaluator &evaluator_;
  SearchOptions options_;
  std::atomic<std::size_t> calls_{0};
};

struct EliminationCandidate {
  std::size_t removed = 0;
  SubsetResult result;
};

struct EliminationStep {
  std::size_t removed = 0;
  ChannelSubset surviving;
  double metric = 0.0;
  bool tie = false;
  std::vector<EliminationCandidate> candidates;
};

struct EliminationTrace {
  std::size_t channels = 0;
  Metric metric = Metric::wer;
  std::vector<EliminationStep> steps;

  std::vector<std::size_t> elimination_order() const;
};

/**
 * Greedy backward elimination from all `channels` down to `stop_size`: each
 * step evaluates every single-channel removal and keeps the subset with the
 * lowest metric. Ties remove the higher-indexed channel and are flagged.
 */
EliminationTrace backward_elimination(SubsetScorer &scorer, std::size_t channels,
                                      std::size_t stop_size);

struct SweepResult {
  std::size_t channels = 0;
  std::size_t k = 0;
  Metric metric = Metric::wer;
  /// Sorted by metric ascending, ties by canonical label.
  std::vector<SubsetResult> records;
};

/// Sorts records by (metric, label).
void sort_sweep(SweepResult &sweep);

/// Every k-subset exactly once. Throws BudgetError when binomial(C, k) exceeds the budget.
SweepResult exhaustive_sweep(SubsetScorer &scorer, std::size_t channels, std::size_t k);

struct ChannelAverage {
  std::size_t channel = 0; // 0-based
  double mean = 0.0;
  std::size_t subsets = 0;
};

/// Mean metric over the subsets containing each channel, sorted ascending.
/// Throws AggregationError unless the sweep holds every k-subset exactly once.
std::vector<ChannelAverage> channel_average_metric(const SweepResult &sweep);

/// Appearances of each channel (index = channel) among the k_top best subsets.
std::vector<std::size_t> top_k_frequency(const SweepResult &sweep, std::size_t k_top);

struct AblationResult {
  SubsetResult baseline;
  std::map<std::size_t, SubsetResult> removed; // keyed by removed channel
  std::vector<WorstChannelRow> worst;
};

/// Evaluates all C subsets of size C-1 and builds the worst-channel table.
AblationResult seven_channel_ablation(SubsetScorer &scorer, std::size_t channels,
                                      const SubsetResult &baseline);
AblationResult seven_channel_ablation(SubsetScorer &scorer, std::size_t channels);

// Report writers. Rates are fractions in sweep files, percentages in the table-style reports.

/// subset_label,wer,per_total,seed_count
std::string sweep_csv(const SweepResult &sweep);
/// Parses sweep_csv output (ignores '#' comment lines).
SweepResult parse_sweep_csv(const std::string &text, std::size_t channels, Metric metric);
/// Two rows: "Ch.,<channels by rank>" and "<METRIC>,<mean percent>".
std::string channel_average_csv(std::span<const ChannelAverage> averages, Metric metric);
/// Top rows with per-channel indicator columns, then a Count row.
std::string top_k_csv(const SweepResult &sweep, std::size_t k_top);
nlohmann::json trace_json(const EliminationTrace &trace);
/// channel_count,subset_label,metric per evaluated subset.
std::string trace_points_csv(const EliminationTrace &trace);
/// channel_count,best_subset,best_metric,median_metric per step.
std::string trace_summary_csv(const EliminationTrace &trace);

} // namespace chansel
