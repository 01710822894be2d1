#pragma once

#include "chansel/phoneme.hpp"

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace chansel {

using TokenSequence = std::vector<std::string>;
/// One phoneme id (into a CategoryTable) per model output frame.
using FrameLabels = std::vector<PhonemeId>;

inline constexpr std::size_t kDefaultCategoryThreshold = 3000;
inline constexpr const char *kTotalCategory = "total PER";

struct EditCounts {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t total() const noexcept { return substitutions + deletions + insertions; }
};

/// Unit-cost Levenshtein alignment of hyp against ref.
EditCounts align_tokens(std::span<const std::string> ref, std::span<const std::string> hyp);

/// (S + D + I) / |ref|. May exceed 1. Throws DomainError on an empty reference.
double word_error_rate(std::span<const std::string> ref, std::span<const std::string> hyp);

/// Fraction of frames where hyp differs from ref. Throws DomainError on length mismatch.
double phoneme_error_rate(std::span<const PhonemeId> ref, std::span<const PhonemeId> hyp);

struct CategoryRow {
  std::string name;
  std::size_t count = 0;
  double rate = 0.0;
};

/// Per-category frame error rates; categories under the sample threshold are listed in `excluded`.
struct CategoryReport {
  CategoryRow total{kTotalCategory, 0, 0.0};
  std::vector<CategoryRow> rows;
  std::vector<std::string> excluded;

  const CategoryRow *find(std::string_view name) const;
};

/// Frame and error tallies per category. Merging is summation, so partial
/// counts from different utterances or workers combine in any order.
class CategoryCounts {
public:
  explicit CategoryCounts(const CategoryTable &table);

  void add(std::span<const PhonemeId> ref, std::span<const PhonemeId> hyp);
  void merge(const CategoryCounts &other);
  CategoryReport report(std::size_t threshold = kDefaultCategoryThreshold) const;

  std::size_t total_frames() const noexcept { return total_frames_; }
  std::size_t total_errors() const noexcept { return total_errors_; }
  std::size_t frames(std::size_t category) const { return frames_.at(category); }
  std::size_t errors(std::size_t category) const { return errors_.at(category); }

private:
  const CategoryTable *table_;
  std::vector<std::size_t> frames_;
  std::vector<std::size_t> errors_;
  std::size_t total_frames_ = 0;
  std::size_t total_errors_ = 0;
};

/// Error rate per category over frames whose reference label belongs to it.
CategoryReport category_per(std::span<const PhonemeId> ref, std::span<const PhonemeId> hyp,
                            const CategoryTable &table,
                            std::size_t threshold = kDefaultCategoryThreshold);

/// Row-wise mean of rates; reports must share rows. Counts are taken from the first.
CategoryReport average_reports(std::span<const CategoryReport> reports);

struct WorstChannelRow {
  std::string category;
  double baseline_rate = 0.0;
  double worst_rate = 0.0;
  std::size_t critical_channel = 0; // 0-based removed channel
  bool tie = false;
};

/**
 * For each category (total first), the removed channel whose ablation gives
 * the highest error rate. Ties go to the lowest channel index and set `tie`.
 * Throws AggregationError if the reports do not share the baseline's rows.
 */
std::vector<WorstChannelRow>
worst_channel_table(const std::map<std::size_t, CategoryReport> &reports,
                    const CategoryReport &baseline);

/// Fraction rendered as a percentage with fixed decimals ("0.16" -> "16.0").
std::string format_percent(double rate, int decimals = 1);

/// CSV columns: category,baseline_per,worst_per,critical_channel (1-based, "(tie)" suffix on ties).
std::string worst_channel_csv(std::span<const WorstChannelRow> rows);

/// CSV columns: category,count,per for one report (total first, then included rows).
std::string category_report_csv(const CategoryReport &report);

} // namespace chansel
