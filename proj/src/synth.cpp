#include "chansel/synth.hpp"

#include "chansel/error.hpp"
#include "chansel/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

namespace chansel {

using nlohmann::json;

void GeneratorConfig::validate(const CategoryTable &table) const {
  if (channels == 0)
    throw ConfigError("generator needs at least one channel");
  if (classes.size() < 2)
    throw ConfigError("generator needs K >= 2 classes");
  std::set<std::string> unique(classes.begin(), classes.end());
  if (unique.size() != classes.size() || unique.contains(silence))
    throw ConfigError("generator classes must be distinct and exclude the silence symbol");
  if (table.phoneme(table.id_of(silence)).kind != PhonemeKind::silence)
    throw ConfigError(silence + " is not a silence symbol in the taxonomy");
  for (const auto &c : classes) {
    if (table.phoneme(table.id_of(c)).kind == PhonemeKind::silence)
      throw ConfigError("class " + c + " is a silence symbol");
  }
  if (weights.size() != channels)
    throw ConfigError("expected " + std::to_string(channels) + " channel weights, got " +
                      std::to_string(weights.size()));
  for (double w : weights) {
    if (!std::isfinite(w))
      throw ConfigError("channel weights must be finite");
  }
  if (!(noise_std > 0.0) || !std::isfinite(noise_std))
    throw ConfigError("noise level must be positive");
  if (frames_per_segment == 0 || segments_per_utterance == 0 || utterances == 0)
    throw ConfigError("segment, utterance and frame counts must be positive");
  if (!(silence_probability >= 0.0 && silence_probability <= 1.0))
    throw ConfigError("silence probability must lie in [0, 1]");
  if (!(min_cycles > 0.0 && max_cycles >= min_cycles))
    throw ConfigError("template cycle range must satisfy 0 < min <= max");
  if (!(template_sharing >= 0.0 && template_sharing <= 1.0))
    throw ConfigError("template sharing must lie in [0, 1]");
  if (channel_classes.size() > channels)
    throw ConfigError("channel_classes has more entries than channels");
  for (const auto &cover : channel_classes) {
    for (const auto &c : cover) {
      if (!unique.contains(c))
        throw ConfigError("channel coverage names unknown class " + c);
    }
  }
  for (const auto &x : crosstalk) {
    if (x.from >= channels || x.to >= channels || x.from == x.to || !std::isfinite(x.gain))
      throw ConfigError("invalid crosstalk entry");
  }
  if (!(sample_rate > 0.0))
    throw ConfigError("sample rate must be positive");
}

void to_json(json &j, const GeneratorConfig &cfg) {
  json xt = json::array();
  for (const auto &x : cfg.crosstalk)
    xt.push_back({{"from", x.from}, {"to", x.to}, {"gain", x.gain}});
  j = json{{"channels", cfg.channels},
           {"classes", cfg.classes},
           {"silence", cfg.silence},
           {"weights", cfg.weights},
           {"noise_std", cfg.noise_std},
           {"frames_per_segment", cfg.frames_per_segment},
           {"segments_per_utterance", cfg.segments_per_utterance},
           {"utterances", cfg.utterances},
           {"silence_probability", cfg.silence_probability},
           {"min_cycles", cfg.min_cycles},
           {"max_cycles", cfg.max_cycles},
           {"template_sharing", cfg.template_sharing},
           {"template_kind", cfg.template_kind == TemplateKind::level ? "level" : "sinusoid"},
           {"channel_classes", cfg.channel_classes},
           {"crosstalk", xt},
           {"sample_rate", cfg.sample_rate},
           {"seed", cfg.seed}};
}

void from_json(const json &j, GeneratorConfig &cfg) {
  GeneratorConfig d;
  cfg.channels = j.value("channels", d.channels);
  cfg.classes = j.value("classes", d.classes);
  cfg.silence = j.value("silence", d.silence);
  if (j.contains("weights")) {
    cfg.weights = j.at("weights").get<std::vector<double>>();
  } else if (cfg.channels == d.channels) {
    cfg.weights = d.weights;
  } else {
    cfg.weights.assign(cfg.channels, 1.0);
  }
  cfg.noise_std = j.value("noise_std", d.noise_std);
  cfg.frames_per_segment = j.value("frames_per_segment", d.frames_per_segment);
  cfg.segments_per_utterance = j.value("segments_per_utterance", d.segments_per_utterance);
  cfg.utterances = j.value("utterances", d.utterances);
  cfg.silence_probability = j.value("silence_probability", d.silence_probability);
  cfg.min_cycles = j.value("min_cycles", d.min_cycles);
  cfg.max_cycles = j.value("max_cycles", d.max_cycles);
  cfg.template_sharing = j.value("template_sharing", d.template_sharing);
  const std::string kind = j.value("template_kind", std::string("sinusoid"));
  if (kind == "sinusoid")
    cfg.template_kind = TemplateKind::sinusoid;
  else if (kind == "level")
    cfg.template_kind = TemplateKind::level;
  else
    throw ConfigError("unknown template kind '" + kind + "'");
  cfg.channel_classes = j.value("channel_classes", d.channel_classes);
  cfg.crosstalk.clear();
  if (j.contains("crosstalk")) {
    for (const auto &x : j.at("crosstalk"))
      cfg.crosstalk.push_back(
          {x.at("from").get<std::size_t>(), x.at("to").get<std::size_t>(), x.at("gain").get<double>()});
  }
  cfg.sample_rate = j.value("sample_rate", d.sample_rate);
  cfg.seed = j.value("seed", d.seed);
}

namespace {

// templates[k][c] over one segment; k = 0 is silence.
using TemplateBank = std::vector<std::vector<std::vector<double>>>;

std::vector<double> random_waveform(const GeneratorConfig &cfg, Rng &rng) {
  const std::size_t len = cfg.frames_per_segment;
  std::vector<double> tpl(len, 0.0);
  for (int s = 0; s < 3; ++s) {
    const double cycles = cfg.min_cycles + (cfg.max_cycles - cfg.min_cycles) * uniform01(rng);
    const double phase = 2.0 * std::numbers::pi * uniform01(rng);
    const double amp = 0.5 + 0.5 * uniform01(rng);
    for (std::size_t t = 0; t < len; ++t)
      tpl[t] += amp * std::sin(2.0 * std::numbers::pi * cycles * static_cast<double>(t) /
                                   static_cast<double>(len) +
                               phase);
  }
  return tpl;
}

void normalise_rms(std::vector<double> &tpl) {
  double ss = 0.0;
  for (double v : tpl)
    ss += v * v;
  const double rms = std::sqrt(ss / static_cast<double>(tpl.size()));
  if (rms > 1e-12) {
    for (double &v : tpl)
      v /= rms;
  }
}

TemplateBank make_templates(const GeneratorConfig &cfg) {
  const std::size_t k_total = cfg.classes.size() + 1;
  const std::size_t len = cfg.frames_per_segment;
  TemplateBank bank(k_total, std::vector<std::vector<double>>(cfg.channels,
                                                              std::vector<double>(len, 0.0)));
  // Everything is drawn unconditionally so sharing and coverage settings never
  // shift other templates.
  Rng rng = make_rng(cfg.seed, 0);
  for (std::size_t k = 1; k < k_total; ++k) {
    for (std::size_t c = 0; c < cfg.channels; ++c) {
      bank[k][c] = random_waveform(cfg, rng);
      normalise_rms(bank[k][c]);
    }
  }
  const double own = std::sqrt(1.0 - cfg.template_sharing);
  const double common = std::sqrt(cfg.template_sharing);
  for (std::size_t k = 1; k < k_total; ++k) {
    auto shared = random_waveform(cfg, rng);
    normalise_rms(shared);
    if (cfg.template_sharing == 0.0 || cfg.template_kind == TemplateKind::level)
      continue;
    for (std::size_t c = 0; c < cfg.channels; ++c) {
      auto &tpl = bank[k][c];
      for (std::size_t t = 0; t < len; ++t)
        tpl[t] = own * tpl[t] + common * shared[t];
      normalise_rms(tpl);
    }
  }
  if (cfg.template_kind == TemplateKind::level) {
    const std::size_t k_classes = cfg.classes.size();
    const std::size_t zero = (k_classes + 1) / 2; // grid point closest to 0
    std::vector<double> levels;
    for (std::size_t j = 0; j <= k_classes; ++j) {
      if (j != zero)
        levels.push_back(-1.0 + 2.0 * static_cast<double>(j) / static_cast<double>(k_classes));
    }
    for (std::size_t i = levels.size(); i > 1; --i) {
      const auto r = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
      std::swap(levels[i - 1], levels[std::min(r, i - 1)]);
    }
    for (std::size_t k = 1; k < k_total; ++k) {
      for (std::size_t c = 0; c < cfg.channels; ++c)
        std::fill(bank[k][c].begin(), bank[k][c].end(), levels[k - 1]);
    }
  }
  for (std::size_t c = 0; c < cfg.channel_classes.size(); ++c) {
    const auto &cover = cfg.channel_classes[c];
    if (cover.empty())
      continue;
    for (std::size_t k = 1; k < k_total; ++k) {
      if (std::find(cover.begin(), cover.end(), cfg.classes[k - 1]) == cover.end())
        std::fill(bank[k][c].begin(), bank[k][c].end(), 0.0);
    }
  }
  return bank;
}

struct GeneratedUtterance {
  std::vector<std::size_t> frame_class; // 0 = silence
  std::vector<std::size_t> frame_offset;
  std::vector<double> samples;          // channel-major, after crosstalk
};

GeneratedUtterance generate_utterance(const GeneratorConfig &cfg, const TemplateBank &bank,
                                      std::size_t index) {
  Rng rng = make_rng(cfg.seed, 1 + index);
  const std::size_t k_classes = cfg.classes.size();
  const std::size_t len = cfg.frames_per_segment;
  const std::size_t frames = len * cfg.segments_per_utterance;

  GeneratedUtterance u;
  u.frame_class.reserve(frames);
  u.frame_offset.reserve(frames);
  std::size_t prev = 0;
  for (std::size_t s = 0; s < cfg.segments_per_utterance; ++s) {
    std::size_t k = 0;
    if (s > 0) {
      if (prev == 0) {
        k = 1 + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(k_classes));
      } else if (uniform01(rng) < cfg.silence_probability) {
        k = 0;
      } else {
        // uniform over the other K - 1 non-silence classes
        auto r = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(k_classes - 1));
        k = 1 + r;
        if (k >= prev)
          ++k;
      }
    }
    for (std::size_t t = 0; t < len; ++t) {
      u.frame_class.push_back(k);
      u.frame_offset.push_back(t);
    }
    prev = k;
  }

  std::vector<double> clean(cfg.channels * frames);
  for (std::size_t c = 0; c < cfg.channels; ++c) {
    for (std::size_t t = 0; t < frames; ++t)
      clean[c * frames + t] =
          cfg.weights[c] * bank[u.frame_class[t]][c][u.frame_offset[t]] + cfg.noise_std * standard_normal(rng);
  }
  u.samples = clean;
  for (const auto &x : cfg.crosstalk) {
    for (std::size_t t = 0; t < frames; ++t)
      u.samples[x.to * frames + t] += x.gain * clean[x.from * frames + t];
  }
  return u;
}

} // namespace

Corpus generate(const GeneratorConfig &cfg, const CategoryTable &table) {
  cfg.validate(table);
  Corpus corpus;
  corpus.table = std::make_shared<const CategoryTable>(table);
  corpus.classes.push_back(table.id_of(cfg.silence));
  for (const auto &c : cfg.classes)
    corpus.classes.push_back(table.id_of(c));

  const auto bank = make_templates(cfg);
  const std::size_t frames = cfg.frames_per_segment * cfg.segments_per_utterance;
  corpus.utterances.reserve(cfg.utterances);
  for (std::size_t i = 0; i < cfg.utterances; ++i) {
    auto g = generate_utterance(cfg, bank, i);
    FrameLabels labels(frames);
    for (std::size_t t = 0; t < frames; ++t)
      labels[t] = corpus.classes[g.frame_class[t]];
    auto transcript = collapse_to_words(labels, table);
    corpus.utterances.push_back(
        {MultichannelSignal(cfg.channels, frames, std::move(g.samples), cfg.sample_rate),
         std::move(labels), std::move(transcript)});
  }
  return corpus;
}

std::vector<std::size_t> planted_importance(const GeneratorConfig &cfg) {
  std::vector<std::size_t> order(cfg.weights.size());
  for (std::size_t c = 0; c < order.size(); ++c)
    order[c] = c;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return cfg.weights[a] > cfg.weights[b]; });
  return order;
}

GeneratorConfig complementary_pair_config(const GeneratorConfig &base, std::size_t split) {
  if (base.channels < 4)
    throw ConfigError("complementary pair fixture needs at least 4 channels");
  const std::size_t k = base.classes.size();
  if (split == 0 || split >= k)
    return base;
  GeneratorConfig cfg = base;
  cfg.channel_classes.resize(std::max<std::size_t>(cfg.channel_classes.size(), 2));
  cfg.channel_classes[0].assign(base.classes.begin(),
                                base.classes.begin() + static_cast<std::ptrdiff_t>(split));
  cfg.channel_classes[1].assign(base.classes.begin() + static_cast<std::ptrdiff_t>(split),
                                base.classes.end());
  return cfg;
}

GeneratorConfig complementary_pair_config(const GeneratorConfig &base) {
  return complementary_pair_config(base, base.classes.size() / 2);
}

double oracle_frame_error(const GeneratorConfig &cfg, const ChannelSubset &subset,
                          const CategoryTable &table) {
  cfg.validate(table);
  if (subset.max_index() >= cfg.channels)
    throw DomainError("subset " + subset.label() + " exceeds generator channels");
  const auto bank = make_templates(cfg);
  const std::size_t k_total = cfg.classes.size() + 1;
  std::size_t errors = 0, total = 0;
  for (std::size_t i = 0; i < cfg.utterances; ++i) {
    const auto g = generate_utterance(cfg, bank, i);
    const std::size_t frames = g.frame_class.size();
    for (std::size_t t = 0; t < frames; ++t) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < k_total; ++k) {
        double d = 0.0;
        for (auto c : subset.indices()) {
          const double r =
              g.samples[c * frames + t] - cfg.weights[c] * bank[k][c][g.frame_offset[t]];
          d += r * r;
        }
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      errors += best != g.frame_class[t] ? 1 : 0;
      ++total;
    }
  }
  return static_cast<double>(errors) / static_cast<double>(total);
}

} // namespace chansel
