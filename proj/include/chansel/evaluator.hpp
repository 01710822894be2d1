#pragma once

#include "chansel/corpus.hpp"
#include "chansel/model.hpp"

#include <optional>
#include <string>

namespace chansel {

/**
 * Pluggable scoring contract used by the search procedures: train and score
 * a model restricted to one channel subset. Implementations must be pure in
 * (subset, seed) and safe to call concurrently.
 */
class Evaluator {
public:
  virtual ~Evaluator() = default;

  virtual std::size_t channels() const = 0;
  /// Identifies the data an evaluation depends on (part of every cache key).
  virtual std::string corpus_hash() const = 0;
  /// Identifies everything else an evaluation depends on, excluding the seed.
  virtual std::string config_hash() const = 0;
  virtual EvalRecord evaluate(const ChannelSubset &subset, std::uint64_t seed) const = 0;
};

struct ReferenceEvaluatorOptions {
  TrainConfig train;
  std::size_t taps = 9;
  std::size_t features = 32;
  std::size_t category_threshold = kDefaultCategoryThreshold;
};

/**
 * Trains the reference classifier on the training split restricted to a
 * subset and scores it on the test split. With an `init` model, training
 * starts from its input-channel slice instead of a fresh initialisation.
 */
class ReferenceEvaluator final : public Evaluator {
public:
  ReferenceEvaluator(CorpusSplit data, ReferenceEvaluatorOptions options,
                     std::optional<ModelParams> init = std::nullopt);

  std::size_t channels() const override { return data_.train.channels(); }
  std::string corpus_hash() const override { return corpus_hash_; }
  std::string config_hash() const override { return config_hash_; }
  EvalRecord evaluate(const ChannelSubset &subset, std::uint64_t seed) const override;

  /// Initial parameters for a subset: sliced init model, or fresh seeded weights.
  ModelParams initial_params(const ChannelSubset &subset, std::uint64_t seed) const;
  TrainResult fit(const ChannelSubset &subset, std::uint64_t seed) const;
  EvalRecord score(const ModelParams &params, const ChannelSubset &subset, std::uint64_t seed) const;

  const CorpusSplit &data() const noexcept { return data_; }
  const ReferenceEvaluatorOptions &options() const noexcept { return options_; }

private:
  CorpusSplit data_;
  ReferenceEvaluatorOptions options_;
  std::optional<ModelParams> init_;
  std::string corpus_hash_;
  std::string config_hash_;
};

} // namespace chansel
