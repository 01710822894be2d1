#include "chansel/metrics.hpp"

#include "chansel/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace chansel {

EditCounts align_tokens(std::span<const std::string> ref, std::span<const std::string> hyp) {
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();
  // cost[i][j]: edit distance between ref[0, i) and hyp[0, j)
  std::vector<std::size_t> cost((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t & { return cost[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i)
    at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j)
    at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }
  EditCounts counts;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && at(i, j) == at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      if (ref[i - 1] != hyp[j - 1])
        ++counts.substitutions;
      --i;
      --j;
    } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      ++counts.deletions;
      --i;
    } else {
      ++counts.insertions;
      --j;
    }
  }
  return counts;
}

double word_error_rate(std::span<const std::string> ref, std::span<const std::string> hyp) {
  if (ref.empty())
    throw DomainError("word error rate needs a non-empty reference");
  return static_cast<double>(align_tokens(ref, hyp).total()) / static_cast<double>(ref.size());
}

double phoneme_error_rate(std::span<const PhonemeId> ref, std::span<const PhonemeId> hyp) {
  if (ref.size() != hyp.size())
    throw DomainError("frame label sequences differ in length (" + std::to_string(ref.size()) +
                      " vs " + std::to_string(hyp.size()) + ")");
  if (ref.empty())
    throw DomainError("phoneme error rate needs at least one frame");
  std::size_t errors = 0;
  for (std::size_t i = 0; i < ref.size(); ++i)
    errors += ref[i] != hyp[i] ? 1 : 0;
  return static_cast<double>(errors) / static_cast<double>(ref.size());
}

const CategoryRow *CategoryReport::find(std::string_view name) const {
  if (name == total.name)
    return &total;
  for (const auto &r : rows) {
    if (r.name == name)
      return &r;
  }
  return nullptr;
}

CategoryCounts::CategoryCounts(const CategoryTable &table)
    : table_(&table), frames_(table.categories().size(), 0),
      errors_(table.categories().size(), 0) {}

void CategoryCounts::add(std::span<const PhonemeId> ref, std::span<const PhonemeId> hyp) {
  if (ref.size() != hyp.size())
    throw DomainError("frame label sequences differ in length (" + std::to_string(ref.size()) +
                      " vs " + std::to_string(hyp.size()) + ")");
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const bool wrong = ref[i] != hyp[i];
    for (auto cat : table_->category_indices(ref[i])) {
      ++frames_[cat];
      errors_[cat] += wrong ? 1 : 0;
    }
    ++total_frames_;
    total_errors_ += wrong ? 1 : 0;
  }
}

void CategoryCounts::merge(const CategoryCounts &other) {
  if (other.table_ != table_)
    throw AggregationError("cannot merge category counts built on different tables");
  for (std::size_t i = 0; i < frames_.size(); ++i) {
    frames_[i] += other.frames_[i];
    errors_[i] += other.errors_[i];
  }
  total_frames_ += other.total_frames_;
  total_errors_ += other.total_errors_;
}

CategoryReport CategoryCounts::report(std::size_t threshold) const {
  CategoryReport out;
  out.total.count = total_frames_;
  out.total.rate = total_frames_ == 0
                       ? 0.0
                       : static_cast<double>(total_errors_) / static_cast<double>(total_frames_);
  const auto &names = table_->categories();
  const std::size_t min_count = std::max<std::size_t>(threshold, 1);
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (frames_[i] < min_count) {
      out.excluded.push_back(names[i]);
      continue;
    }
    out.rows.push_back(
        {names[i], frames_[i], static_cast<double>(errors_[i]) / static_cast<double>(frames_[i])});
  }
  return out;
}

CategoryReport category_per(std::span<const PhonemeId> ref, std::span<const PhonemeId> hyp,
                            const CategoryTable &table, std::size_t threshold) {
  CategoryCounts counts(table);
  counts.add(ref, hyp);
  return counts.report(threshold);
}

namespace {
bool same_rows(const CategoryReport &a, const CategoryReport &b) {
  if (a.rows.size() != b.rows.size())
    return false;
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    if (a.rows[i].name != b.rows[i].name)
      return false;
  }
  return true;
}
} // namespace

CategoryReport average_reports(std::span<const CategoryReport> reports) {
  if (reports.empty())
    throw AggregationError("no reports to average");
  CategoryReport out = reports.front();
  for (std::size_t k = 1; k < reports.size(); ++k) {
    if (!same_rows(out, reports[k]))
      throw AggregationError("cannot average reports with different category rows");
    out.total.rate += reports[k].total.rate;
    for (std::size_t i = 0; i < out.rows.size(); ++i)
      out.rows[i].rate += reports[k].rows[i].rate;
  }
  const auto n = static_cast<double>(reports.size());
  out.total.rate /= n;
  for (auto &r : out.rows)
    r.rate /= n;
  return out;
}

std::vector<WorstChannelRow>
worst_channel_table(const std::map<std::size_t, CategoryReport> &reports,
                    const CategoryReport &baseline) {
  if (reports.empty())
    throw AggregationError("worst-channel table needs at least one ablation report");
  for (const auto &[channel, report] : reports) {
    if (!same_rows(report, baseline))
      throw AggregationError("report for removed channel " + std::to_string(channel + 1) +
                             " has different category rows than the baseline");
  }
  std::vector<const CategoryRow *> baseline_rows{&baseline.total};
  for (const auto &r : baseline.rows)
    baseline_rows.push_back(&r);

  std::vector<WorstChannelRow> out;
  for (std::size_t i = 0; i < baseline_rows.size(); ++i) {
    WorstChannelRow row;
    row.category = baseline_rows[i]->name;
    row.baseline_rate = baseline_rows[i]->rate;
    bool first = true;
    // std::map iterates channels in ascending order, so strict '>' keeps the lowest on ties.
    for (const auto &[channel, report] : reports) {
      const double rate = i == 0 ? report.total.rate : report.rows[i - 1].rate;
      if (first || rate > row.worst_rate) {
        row.worst_rate = rate;
        row.critical_channel = channel;
        row.tie = false;
        first = false;
      } else if (rate == row.worst_rate) {
        row.tie = true;
      }
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::string format_percent(double rate, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, rate * 100.0);
  return buf;
}

std::string worst_channel_csv(std::span<const WorstChannelRow> rows) {
  std::string out = "category,baseline_per,worst_per,critical_channel\n";
  for (const auto &r : rows) {
    out += r.category + "," + format_percent(r.baseline_rate) + "," + format_percent(r.worst_rate) +
           "," + std::to_string(r.critical_channel + 1) + (r.tie ? " (tie)" : "") + "\n";
  }
  return out;
}

std::string category_report_csv(const CategoryReport &report) {
  std::string out = "category,count,per\n";
  out += report.total.name + "," + std::to_string(report.total.count) + "," +
         format_percent(report.total.rate, 2) + "\n";
  for (const auto &r : report.rows)
    out += r.name + "," + std::to_string(r.count) + "," + format_percent(r.rate, 2) + "\n";
  return out;
}

} // namespace chansel
