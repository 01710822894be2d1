#include "chansel/evaluator.hpp"

#include "chansel/error.hpp"
#include "chansel/hash.hpp"

#include <chrono>
#include <cmath>

namespace chansel {

using nlohmann::json;

ReferenceEvaluator::ReferenceEvaluator(CorpusSplit data, ReferenceEvaluatorOptions options,
                                       std::optional<ModelParams> init)
    : data_(std::move(data)), options_(std::move(options)), init_(std::move(init)) {
  data_.train.validate();
  data_.test.validate();
  if (data_.train.channels() != data_.test.channels())
    throw ShapeError("train and test splits have different channel counts");
  options_.train.validate();
  if (init_) {
    init_->validate();
    if (init_->sizes.input_channels != channels())
      throw ShapeError("init model has " + std::to_string(init_->sizes.input_channels) +
                       " input channels, corpus has " + std::to_string(channels()));
  }
  corpus_hash_ = hash_text(chansel::corpus_hash(data_.train) + "/" + chansel::corpus_hash(data_.test));
  json train_cfg = options_.train;
  train_cfg.erase("seed");
  json cfg = {{"evaluator", "reference-v1"},
              {"train", train_cfg},
              {"taps", options_.taps},
              {"features", options_.features},
              {"category_threshold", options_.category_threshold},
              {"init", init_ ? params_hash(*init_) : std::string()}};
  config_hash_ = hash_text(cfg.dump());
}

ModelParams ReferenceEvaluator::initial_params(const ChannelSubset &subset,
                                               std::uint64_t seed) const {
  if (subset.max_index() >= channels())
    throw ShapeError("subset " + subset.label() + " exceeds " + std::to_string(channels()) +
                     " channels");
  if (init_)
    return slice_input_channels(*init_, subset);
  std::vector<std::string> symbols;
  for (auto id : data_.train.classes)
    symbols.push_back(data_.train.table->symbol(id));
  // Every subset starts from the same full-width draw for a given seed, so
  // candidate subsets differ only in which channels they see. The input block
  // is rescaled to the subset's own fan-in bound.
  LayerSizes sizes{channels(), options_.taps, options_.features, symbols.size()};
  ModelParams full = init_params(sizes, std::move(symbols), seed);
  ModelParams p = slice_input_channels(full, subset);
  p.input_weights *= std::sqrt(static_cast<double>(channels()) / static_cast<double>(subset.size()));
  p.provenance = {};
  return p;
}

TrainResult ReferenceEvaluator::fit(const ChannelSubset &subset, std::uint64_t seed) const {
  TrainConfig cfg = options_.train;
  cfg.seed = seed;
  auto result = train(initial_params(subset, seed), data_.train.restricted(subset), cfg);
  result.params.seed = seed;
  result.params.config_hash = config_hash_;
  return result;
}

EvalRecord ReferenceEvaluator::score(const ModelParams &params, const ChannelSubset &subset,
                                     std::uint64_t seed) const {
  EvalRecord r = chansel::evaluate(params, data_.test.restricted(subset), options_.category_threshold);
  r.subset = subset;
  r.seed = seed;
  r.config_hash = config_hash_;
  r.corpus_hash = corpus_hash_;
  return r;
}

EvalRecord ReferenceEvaluator::evaluate(const ChannelSubset &subset, std::uint64_t seed) const {
  const auto started = std::chrono::steady_clock::now();
  auto fitted = fit(subset, seed);
  EvalRecord r = score(fitted.params, subset, seed);
  r.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return r;
}

} // namespace chansel
