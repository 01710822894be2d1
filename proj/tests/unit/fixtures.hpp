#pragma once

#include "chansel/corpus.hpp"
#include "chansel/model.hpp"
#include "chansel/random.hpp"
#include "chansel/synth.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace fixtures {

using namespace chansel;

inline std::filesystem::path scratch_dir(const std::string &name) {
  auto dir = std::filesystem::temp_directory_path() / ("chansel_unit_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Small level-template corpus: fast to train, easy to separate.
inline GeneratorConfig tiny_config(std::size_t channels = 4, std::uint64_t seed = 3) {
  GeneratorConfig g;
  g.channels = channels;
  g.classes = {"AA", "IY", "B"};
  g.weights.assign(channels, 0.0);
  for (std::size_t c = 0; c < channels; ++c)
    g.weights[c] = 1.0 - 0.8 * static_cast<double>(c) / static_cast<double>(channels);
  g.template_kind = TemplateKind::level;
  g.noise_std = 0.6;
  g.utterances = 16;
  g.segments_per_utterance = 8;
  g.frames_per_segment = 6;
  g.seed = seed;
  return g;
}

/// Corpus whose channel k is 1 exactly on frames of class k (class 0 = silence).
inline Corpus one_hot_corpus(const std::vector<std::vector<std::size_t>> &class_sequences) {
  const auto &table = CategoryTable::arpabet();
  Corpus c;
  c.table = std::make_shared<const CategoryTable>(table);
  for (const char *s : {"SIL", "AA", "IY", "B"})
    c.classes.push_back(table.id_of(s));
  const std::size_t k = c.classes.size();
  for (const auto &seq : class_sequences) {
    std::vector<double> data(k * seq.size(), 0.0);
    FrameLabels labels;
    for (std::size_t t = 0; t < seq.size(); ++t) {
      data[seq[t] * seq.size() + t] = 1.0;
      labels.push_back(c.classes[seq[t]]);
    }
    auto transcript = collapse_to_words(labels, table);
    c.utterances.push_back({MultichannelSignal(k, seq.size(), data), labels, transcript});
  }
  return c;
}

/// Hand-set taps = 1 model that decodes one_hot_corpus perfectly.
inline ModelParams one_hot_model() {
  LayerSizes sizes{4, 1, 4, 4};
  ModelParams p = init_params(sizes, {"SIL", "AA", "IY", "B"}, 1);
  p.input_weights = 10.0 * Eigen::MatrixXd::Identity(4, 4);
  p.hidden_bias = Eigen::VectorXd::Constant(4, -5.0);
  p.output_weights = 10.0 * Eigen::MatrixXd::Identity(4, 4);
  p.output_bias = Eigen::VectorXd::Zero(4);
  return p;
}

inline ModelParams random_params(const LayerSizes &sizes, Rng &rng) {
  std::vector<std::string> symbols = {"SIL", "AA", "IY", "B", "S", "T", "M", "L"};
  symbols.resize(sizes.classes);
  ModelParams p = init_params(sizes, symbols, rng());
  p.hidden_bias = Eigen::VectorXd::NullaryExpr(p.hidden_bias.size(), [&] { return uniform01(rng) - 0.5; });
  p.output_bias = Eigen::VectorXd::NullaryExpr(p.output_bias.size(), [&] { return uniform01(rng) - 0.5; });
  return p;
}

} // namespace fixtures
