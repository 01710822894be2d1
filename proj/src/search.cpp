#include "chansel/search.hpp"

#include "chansel/error.hpp"
#include "chansel/version.hpp"
#include "worker_pool.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace chansel {

using nlohmann::json;

std::string_view to_string(Metric m) { return m == Metric::wer ? "wer" : "per"; }

Metric parse_metric(std::string_view text) {
  if (text == "wer" || text == "WER")
    return Metric::wer;
  if (text == "per" || text == "PER")
    return Metric::per;
  throw ParseError("unknown metric '" + std::string(text) + "' (expected wer or per)");
}

SubsetResult aggregate_runs(const ChannelSubset &subset, std::vector<EvalRecord> runs) {
  if (runs.empty())
    throw AggregationError("no runs to aggregate for subset " + subset.label());
  SubsetResult out;
  out.subset = subset;
  std::vector<CategoryReport> reports;
  for (const auto &r : runs) {
    out.wer += r.wer;
    out.per_total += r.per_total;
    reports.push_back(r.per_category);
  }
  const auto n = static_cast<double>(runs.size());
  out.wer /= n;
  out.per_total /= n;
  out.per_category = average_reports(reports);
  out.runs = std::move(runs);
  return out;
}

SubsetScorer::SubsetScorer(const Evaluator &evaluator, const SearchOptions &options)
    : evaluator_(evaluator), options_(options) {
  if (options_.seeds.empty())
    throw ConfigError("at least one seed is required");
}

SubsetResult SubsetScorer::score(const ChannelSubset &subset) {
  return std::move(score(std::vector<ChannelSubset>{subset}).front());
}

std::vector<SubsetResult> SubsetScorer::score(const std::vector<ChannelSubset> &subsets) {
  const std::size_t n_seeds = options_.seeds.size();
  const std::string corpus = evaluator_.corpus_hash();
  const std::string config = evaluator_.config_hash();

  std::vector<std::optional<EvalRecord>> slots(subsets.size() * n_seeds);
  std::vector<std::size_t> missing;
  for (std::size_t i = 0; i < subsets.size(); ++i) {
    for (std::size_t j = 0; j < n_seeds; ++j) {
      const std::size_t slot = i * n_seeds + j;
      if (options_.cache) {
        slots[slot] = options_.cache->find(
            ResultCache::key(subsets[i].label(), corpus, config, options_.seeds[j]));
      }
      if (!slots[slot])
        missing.push_back(slot);
    }
  }

  const std::size_t done = calls_.load();
  const std::size_t allowed =
      done >= options_.max_new_evaluations ? 0 : options_.max_new_evaluations - done;
  const bool interrupted = missing.size() > allowed;
  if (interrupted)
    missing.resize(allowed);

  detail::parallel_for(missing.size(), options_.workers, [&](std::size_t m) {
    const std::size_t slot = missing[m];
    const ChannelSubset &subset = subsets[slot / n_seeds];
    const std::uint64_t seed = options_.seeds[slot % n_seeds];
    EvalRecord r;
    const auto start = std::chrono::steady_clock::now();
    try {
      r = evaluator_.evaluate(subset, seed);
    } catch (const EvaluationError &) {
      throw;
    } catch (const DivergenceError &e) {
      throw EvaluationError(subset.label(), e.what(), true);
    } catch (const std::exception &e) {
      throw EvaluationError(subset.label(), e.what());
    }
    calls_.fetch_add(1);
    r.subset = subset;
    r.seed = seed;
    r.corpus_hash = corpus;
    r.config_hash = config;
    if (r.wall_time_s == 0.0)
      r.wall_time_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (options_.cache)
      options_.cache->insert(r);
    slots[slot] = std::move(r);
  });
  if (interrupted)
    throw SearchInterrupted("stopped after " + std::to_string(calls_.load()) +
                            " fresh evaluations");

  std::vector<SubsetResult> out;
  out.reserve(subsets.size());
  for (std::size_t i = 0; i < subsets.size(); ++i) {
    std::vector<EvalRecord> runs;
    for (std::size_t j = 0; j < n_seeds; ++j)
      runs.push_back(std::move(*slots[i * n_seeds + j]));
    out.push_back(aggregate_runs(subsets[i], std::move(runs)));
  }
  return out;
}

std::vector<std::size_t> EliminationTrace::elimination_order() const {
  std::vector<std::size_t> order;
  for (const auto &s : steps)
    order.push_back(s.removed);
  return order;
}

namespace {
constexpr double kTieTolerance = 1e-12;
}

EliminationTrace backward_elimination(SubsetScorer &scorer, std::size_t channels,
                                      std::size_t stop_size) {
  if (channels == 0)
    throw DomainError("backward elimination needs at least one channel");
  if (stop_size == 0 || stop_size > channels)
    throw DomainError("stop size must satisfy 1 <= stop <= channels");
  const Metric metric = scorer.options().metric;
  EliminationTrace trace;
  trace.channels = channels;
  trace.metric = metric;
  ChannelSubset current = ChannelSubset::full(channels);
  while (current.size() > stop_size) {
    std::vector<ChannelSubset> candidates;
    for (auto c : current.indices())
      candidates.push_back(current.without(c));
    auto results = scorer.score(candidates);

    EliminationStep step;
    std::size_t best = 0;
    for (std::size_t i = 1; i < results.size(); ++i) {
      // Later candidates remove higher-indexed channels, so <= keeps the higher index on ties.
      if (results[i].metric(metric) <= results[best].metric(metric) + kTieTolerance)
        best = i;
    }
    const double best_value = results[best].metric(metric);
    for (std::size_t i = 0; i < results.size(); ++i) {
      if (i != best && std::abs(results[i].metric(metric) - best_value) <= kTieTolerance)
        step.tie = true;
    }
    step.removed = current.indices()[best];
    step.surviving = results[best].subset;
    step.metric = best_value;
    for (std::size_t i = 0; i < results.size(); ++i)
      step.candidates.push_back({current.indices()[i], std::move(results[i])});
    current = step.surviving;
    trace.steps.push_back(std::move(step));
  }
  return trace;
}

void sort_sweep(SweepResult &sweep) {
  const Metric m = sweep.metric;
  std::stable_sort(sweep.records.begin(), sweep.records.end(),
                   [m](const SubsetResult &a, const SubsetResult &b) {
                     if (a.metric(m) != b.metric(m))
                       return a.metric(m) < b.metric(m);
                     return a.subset < b.subset;
                   });
}

SweepResult exhaustive_sweep(SubsetScorer &scorer, std::size_t channels, std::size_t k) {
  if (k == 0 || k > channels)
    throw DomainError("subset size must satisfy 1 <= k <= channels");
  const auto required = binomial(channels, k);
  if (required > scorer.options().budget)
    throw BudgetError("sweep needs " + std::to_string(required) +
                          " subsets, budget is " + std::to_string(scorer.options().budget),
                      required);
  SweepResult sweep;
  sweep.channels = channels;
  sweep.k = k;
  sweep.metric = scorer.options().metric;
  sweep.records = scorer.score(enumerate_subsets(channels, k));
  sort_sweep(sweep);
  return sweep;
}

std::vector<ChannelAverage> channel_average_metric(const SweepResult &sweep) {
  const std::size_t expected = binomial(sweep.channels, sweep.k);
  if (sweep.records.size() != expected)
    throw AggregationError("sweep holds " + std::to_string(sweep.records.size()) +
                           " subsets, expected " + std::to_string(expected));
  std::set<ChannelSubset> seen;
  std::vector<ChannelAverage> avg(sweep.channels);
  for (std::size_t c = 0; c < sweep.channels; ++c)
    avg[c].channel = c;
  for (const auto &r : sweep.records) {
    if (r.subset.size() != sweep.k || r.subset.max_index() >= sweep.channels)
      throw AggregationError("subset " + r.subset.label() + " does not belong to the sweep");
    if (!seen.insert(r.subset).second)
      throw AggregationError("subset " + r.subset.label() + " appears twice");
    for (auto c : r.subset.indices()) {
      avg[c].mean += r.metric(sweep.metric);
      ++avg[c].subsets;
    }
  }
  for (auto &a : avg)
    a.mean /= static_cast<double>(a.subsets);
  std::stable_sort(avg.begin(), avg.end(), [](const ChannelAverage &a, const ChannelAverage &b) {
    return a.mean < b.mean;
  });
  return avg;
}

std::vector<std::size_t> top_k_frequency(const SweepResult &sweep, std::size_t k_top) {
  if (k_top == 0 || k_top > sweep.records.size())
    throw DomainError("k_top must lie in [1, " + std::to_string(sweep.records.size()) + "]");
  SweepResult sorted = sweep;
  sort_sweep(sorted);
  std::vector<std::size_t> counts(sweep.channels, 0);
  for (std::size_t i = 0; i < k_top; ++i) {
    for (auto c : sorted.records[i].subset.indices()) {
      if (c >= counts.size())
        throw DomainError("subset " + sorted.records[i].subset.label() + " exceeds channel count");
      ++counts[c];
    }
  }
  return counts;
}

AblationResult seven_channel_ablation(SubsetScorer &scorer, std::size_t channels,
                                      const SubsetResult &baseline) {
  if (channels < 2)
    throw DomainError("ablation needs at least two channels");
  AblationResult out;
  out.baseline = baseline;
  const ChannelSubset full = ChannelSubset::full(channels);
  std::vector<ChannelSubset> subsets;
  for (std::size_t c = 0; c < channels; ++c)
    subsets.push_back(full.without(c));
  auto results = scorer.score(subsets);
  std::map<std::size_t, CategoryReport> reports;
  for (std::size_t c = 0; c < channels; ++c) {
    reports.emplace(c, results[c].per_category);
    out.removed.emplace(c, std::move(results[c]));
  }
  out.worst = worst_channel_table(reports, baseline.per_category);
  return out;
}

AblationResult seven_channel_ablation(SubsetScorer &scorer, std::size_t channels) {
  return seven_channel_ablation(scorer, channels, scorer.score(ChannelSubset::full(channels)));
}

namespace {
std::string fixed(double v, int decimals = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string upper(Metric m) { return m == Metric::wer ? "WER" : "PER"; }
} // namespace

std::string sweep_csv(const SweepResult &sweep) {
  std::string out = "subset_label,wer,per_total,seed_count\n";
  for (const auto &r : sweep.records) {
    out += r.subset.label() + "," + fixed(r.wer) + "," + fixed(r.per_total) + "," +
           std::to_string(r.runs.size()) + "\n";
  }
  return out;
}

SweepResult parse_sweep_csv(const std::string &text, std::size_t channels, Metric metric) {
  SweepResult sweep;
  sweep.channels = channels;
  sweep.metric = metric;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty() || line.front() == '#')
      continue;
    if (!header) {
      if (line != "subset_label,wer,per_total,seed_count")
        throw ParseError("unexpected sweep header '" + line + "'");
      header = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    // Labels may themselves contain commas when channels exceed nine, so parse from the right.
    while (std::getline(ls, cell, ','))
      cells.push_back(cell);
    if (cells.size() < 4)
      throw ParseError("sweep row '" + line + "' has too few cells");
    std::string label = cells[0];
    for (std::size_t i = 1; i + 3 < cells.size(); ++i)
      label += "," + cells[i];
    SubsetResult r;
    try {
      r.subset = parse_subset(label, channels);
      r.wer = std::stod(cells[cells.size() - 3]);
      r.per_total = std::stod(cells[cells.size() - 2]);
      const auto seeds = std::stoul(cells.back());
      r.runs.resize(seeds);
    } catch (const ParseError &) {
      throw;
    } catch (const std::exception &) {
      throw ParseError("malformed sweep row '" + line + "'");
    }
    if (sweep.records.empty())
      sweep.k = r.subset.size();
    else if (r.subset.size() != sweep.k)
      throw ParseError("sweep mixes subset sizes");
    sweep.records.push_back(std::move(r));
  }
  if (!header)
    throw ParseError("sweep file has no header");
  sort_sweep(sweep);
  return sweep;
}

std::string channel_average_csv(std::span<const ChannelAverage> averages, Metric metric) {
  std::string ch = "Ch.";
  std::string val = upper(metric);
  for (const auto &a : averages) {
    ch += "," + std::to_string(a.channel + 1);
    val += "," + format_percent(a.mean);
  }
  return ch + "\n" + val + "\n";
}

std::string top_k_csv(const SweepResult &sweep, std::size_t k_top) {
  const auto counts = top_k_frequency(sweep, k_top);
  SweepResult sorted = sweep;
  sort_sweep(sorted);
  std::string out = "rank,subset," + std::string(to_string(sweep.metric)) + "_percent";
  for (std::size_t c = 0; c < sweep.channels; ++c)
    out += ",ch" + std::to_string(c + 1);
  out += "\n";
  for (std::size_t i = 0; i < k_top; ++i) {
    const auto &r = sorted.records[i];
    out += std::to_string(i + 1) + "," + r.subset.label() + "," +
           format_percent(r.metric(sweep.metric));
    for (std::size_t c = 0; c < sweep.channels; ++c)
      out += r.subset.contains(c) ? ",x" : ",";
    out += "\n";
  }
  out += "Count,,";
  for (auto n : counts)
    out += "," + std::to_string(n);
  return out + "\n";
}

json trace_json(const EliminationTrace &trace) {
  json steps = json::array();
  for (const auto &s : trace.steps) {
    json cands = json::array();
    for (const auto &c : s.candidates) {
      cands.push_back({{"removed", c.removed + 1},
                       {"subset", c.result.subset.label()},
                       {"metric", c.result.metric(trace.metric)},
                       {"wer", c.result.wer},
                       {"per_total", c.result.per_total},
                       {"seed_count", c.result.runs.size()}});
    }
    steps.push_back({{"removed", s.removed + 1},
                     {"surviving", s.surviving.label()},
                     {"metric", s.metric},
                     {"tie", s.tie},
                     {"candidates", std::move(cands)}});
  }
  return {{"tool_version", kToolVersion},
          {"channels", trace.channels},
          {"metric", to_string(trace.metric)},
          {"elimination_order",
           [&] {
             json order = json::array();
             for (auto c : trace.elimination_order())
               order.push_back(c + 1);
             return order;
           }()},
          {"steps", std::move(steps)}};
}

std::string trace_points_csv(const EliminationTrace &trace) {
  std::string out = "channel_count,subset_label,metric\n";
  for (const auto &s : trace.steps) {
    for (const auto &c : s.candidates)
      out += std::to_string(c.result.subset.size()) + "," + c.result.subset.label() + "," +
             fixed(c.result.metric(trace.metric)) + "\n";
  }
  return out;
}

std::string trace_summary_csv(const EliminationTrace &trace) {
  std::string out = "channel_count,best_subset,best_metric,median_metric,tie\n";
  for (const auto &s : trace.steps) {
    std::vector<double> values;
    for (const auto &c : s.candidates)
      values.push_back(c.result.metric(trace.metric));
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    const double median = n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    out += std::to_string(s.surviving.size()) + "," + s.surviving.label() + "," +
           fixed(s.metric) + "," + fixed(median) + "," + (s.tie ? "1" : "0") + "\n";
  }
  return out;
}

} // namespace chansel
