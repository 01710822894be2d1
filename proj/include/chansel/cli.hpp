#pragma once

#include "chansel/model.hpp"
#include "chansel/search.hpp"
#include "chansel/synth.hpp"

#include <json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace chansel {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitData = 2,
  kExitDivergence = 3,
};

struct SearchSettings {
  std::size_t k = 4;
  std::size_t k_top = 10;
  std::size_t stop_size = 1;
  std::size_t seeds = 3;      // R training seeds per subset
  std::uint64_t base_seed = 1; // seeds are base_seed, base_seed + 1, ...
  std::size_t workers = 0;     // 0 = logical CPU count
  Metric metric = Metric::wer;
  std::size_t budget = 5000;

  std::vector<std::uint64_t> seed_list() const;
};

/**
 * Everything a subcommand needs. JSON keys mirror the field names; unknown
 * keys are rejected. `corpus` empty means "generate from `generator`".
 */
struct ExperimentConfig {
  std::string corpus;
  GeneratorConfig generator;
  TrainConfig train;
  std::size_t taps = 9;
  std::size_t features = 32;
  double test_fraction = 0.25;
  std::size_t category_threshold = kDefaultCategoryThreshold;
  /// Fine-tuning epochs; defaults to half of train.epochs.
  std::optional<std::size_t> finetune_epochs;
  SearchSettings search;
  std::string output;

  std::size_t resolved_finetune_epochs() const {
    return finetune_epochs ? *finetune_epochs : train.epochs / 2;
  }
};

void to_json(nlohmann::json &j, const ExperimentConfig &cfg);
void from_json(const nlohmann::json &j, ExperimentConfig &cfg);

/// Hash of the settings that affect results (output path and worker count excluded).
std::string experiment_hash(const ExperimentConfig &cfg);

/// Named subsets used by the fine-tuning workflow ("7", "6", "5", "4").
ChannelSubset finetune_preset(std::string_view name, std::size_t channels);

/// Parses argv, runs one subcommand, and returns an ExitCode.
int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);
int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace chansel
