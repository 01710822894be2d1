#pragma once

#include "chansel/corpus.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace chansel {

/// Adds gain * (clean + noise of channel `from`) onto channel `to` after generation.
/// sinusoid: per-(class, channel) sums of three random sinusoids, unit RMS.
/// level: every class holds one constant level for the whole segment, the same
/// on every channel; the K non-silence classes take evenly spaced levels in
/// [-1, 1] (silence keeps 0) in a seeded order.
enum class TemplateKind { sinusoid, level };

struct Crosstalk {
  std::size_t from = 0;
  std::size_t to = 0;
  double gain = 0.0;
};

/**
 * Synthetic corpus with planted per-channel informativeness.
 *
 * Each segment carries one class k; channel c emits
 * weights[c] * template(k, c) + N(0, noise_std^2). Templates are seeded sums
 * of three sinusoids, RMS-normalised over the segment. Silence, and any class
 * a channel does not cover (see channel_classes), emits the zero template.
 */
struct GeneratorConfig {
  std::size_t channels = 8;
  std::vector<std::string> classes = {"AA", "IY", "UW", "EH", "AH", "B",
                                      "T",  "K",  "S",  "F",  "M",  "L"};
  std::string silence = "SIL";
  std::vector<double> weights = {1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3};
  double noise_std = 1.0;
  std::size_t frames_per_segment = 10;
  std::size_t segments_per_utterance = 25;
  std::size_t utterances = 200;
  double silence_probability = 0.3;
  double min_cycles = 0.1; // template frequencies, cycles per segment
  double max_cycles = 0.6;
  /// Blend of each (class, channel) template with a per-class waveform common to
  /// all channels: 0 = independent per channel, 1 = identical shape everywhere.
  double template_sharing = 0.0;
  TemplateKind template_kind = TemplateKind::sinusoid;
  /// Per-channel class coverage; an empty list (or missing entry) covers every class.
  std::vector<std::vector<std::string>> channel_classes;
  std::vector<Crosstalk> crosstalk;
  double sample_rate = 1000.0;
  std::uint64_t seed = 1;

  /// Throws ConfigError on invalid settings (sigma <= 0, K < 2, weights size/finite, ...).
  void validate(const CategoryTable &table) const;
};

void to_json(nlohmann::json &j, const GeneratorConfig &cfg);
void from_json(const nlohmann::json &j, GeneratorConfig &cfg);

Corpus generate(const GeneratorConfig &cfg,
                const CategoryTable &table = CategoryTable::arpabet());

/// Channels ordered by weight descending; equal weights keep index order.
std::vector<std::size_t> planted_importance(const GeneratorConfig &cfg);

/**
 * Channels 0 and 1 split the classes: channel 0 covers the first `split`
 * classes, channel 1 the rest. Each alone sees only half the discriminative
 * templates. split == 0 or split >= K leaves the base config unchanged.
 * Throws ConfigError for fewer than 4 channels.
 */
GeneratorConfig complementary_pair_config(const GeneratorConfig &base, std::size_t split);
GeneratorConfig complementary_pair_config(const GeneratorConfig &base);

/**
 * Frame error of a template-matching oracle that knows the templates, weights
 * and each frame's segment position, restricted to `subset`'s channels.
 */
double oracle_frame_error(const GeneratorConfig &cfg, const ChannelSubset &subset,
                          const CategoryTable &table = CategoryTable::arpabet());

} // namespace chansel
