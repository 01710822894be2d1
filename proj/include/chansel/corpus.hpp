#pragma once

#include "chansel/metrics.hpp"
#include "chansel/phoneme.hpp"
#include "chansel/signal.hpp"

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace chansel {

/// A recording with one phoneme label per sample frame and its word transcript.
struct LabeledSequence {
  MultichannelSignal signal;
  FrameLabels labels;
  TokenSequence transcript;
};

/**
 * Collapses frame labels into word tokens: runs of identical labels merge,
 * silence separates words, and a word is its phones joined by '-'.
 * (B,B,IY,IY,SIL) -> ("B-IY").
 */
TokenSequence collapse_to_words(std::span<const PhonemeId> labels, const CategoryTable &table);

struct Corpus {
  std::shared_ptr<const CategoryTable> table;
  /// Model output classes as phoneme ids; index 0 is the silence class.
  std::vector<PhonemeId> classes;
  std::vector<LabeledSequence> utterances;

  std::size_t channels() const;
  std::size_t frames() const;
  /// Same corpus with every signal restricted to `subset`.
  Corpus restricted(const ChannelSubset &subset) const;
  /// Checks channel counts, label lengths, class membership and transcript consistency.
  void validate() const;
};

std::string corpus_hash(const Corpus &corpus);

struct CorpusSplit {
  Corpus train;
  Corpus test;
};

/// The trailing ceil(test_fraction * n) utterances form the test split.
CorpusSplit split_corpus(const Corpus &corpus, double test_fraction);

/**
 * Corpus directory: manifest.json (generator config, hash, classes,
 * utterance list), taxonomy.csv, utt_NNNN.json/.f64 signals and labels.csv
 * (utterance,frame,label).
 */
void write_corpus(const Corpus &corpus, const std::filesystem::path &dir,
                  const nlohmann::json &generator_config);
Corpus read_corpus(const std::filesystem::path &dir);
nlohmann::json read_corpus_manifest(const std::filesystem::path &dir);

} // namespace chansel
