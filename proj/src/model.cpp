#include "chansel/model.hpp"

#include "chansel/error.hpp"
#include "chansel/hash.hpp"
#include "chansel/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace chansel {

using nlohmann::json;

namespace {

constexpr double kLogFloor = 1e-12;

// Shared flat-coordinate addressing for parameters and gradients.
template <typename Self>
auto &flat_coordinate(Self &&p, std::size_t i) {
  const auto n_in = static_cast<std::size_t>(p.input_weights.size());
  const auto n_hb = static_cast<std::size_t>(p.hidden_bias.size());
  const auto n_out = static_cast<std::size_t>(p.output_weights.size());
  const auto n_ob = static_cast<std::size_t>(p.output_bias.size());
  if (i < n_in) {
    const auto cols = static_cast<std::size_t>(p.input_weights.cols());
    return p.input_weights(static_cast<Eigen::Index>(i / cols), static_cast<Eigen::Index>(i % cols));
  }
  i -= n_in;
  if (i < n_hb)
    return p.hidden_bias(static_cast<Eigen::Index>(i));
  i -= n_hb;
  if (i < n_out) {
    const auto cols = static_cast<std::size_t>(p.output_weights.cols());
    return p.output_weights(static_cast<Eigen::Index>(i / cols),
                            static_cast<Eigen::Index>(i % cols));
  }
  i -= n_out;
  if (i < n_ob)
    return p.output_bias(static_cast<Eigen::Index>(i));
  throw LookupError("parameter coordinate out of range");
}

// Class index per phoneme id of the corpus table; -1 for non-classes.
std::vector<int> class_lookup(const ModelParams &params, const Corpus &corpus) {
  if (params.class_symbols.size() != corpus.classes.size())
    throw ShapeError("model has " + std::to_string(params.class_symbols.size()) +
                     " classes, corpus has " + std::to_string(corpus.classes.size()));
  std::vector<int> lookup(corpus.table->size(), -1);
  for (std::size_t k = 0; k < corpus.classes.size(); ++k) {
    if (corpus.table->symbol(corpus.classes[k]) != params.class_symbols[k])
      throw ShapeError("model class " + params.class_symbols[k] + " does not match corpus class " +
                       corpus.table->symbol(corpus.classes[k]));
    lookup[corpus.classes[k]] = static_cast<int>(k);
  }
  return lookup;
}

void check_channels(const ModelParams &params, std::size_t channels) {
  if (channels != params.sizes.input_channels)
    throw ShapeError("model expects " + std::to_string(params.sizes.input_channels) +
                     " input channels, got " + std::to_string(channels));
}

// Writes the window of frame t into `row` (length channels * taps); masked channels stay zero.
template <typename Row>
void fill_window(const MultichannelSignal &x, std::size_t t, std::size_t taps,
                 const std::uint8_t *mask, Row &&row) {
  const auto half = static_cast<std::ptrdiff_t>(taps / 2);
  const auto samples = static_cast<std::ptrdiff_t>(x.samples());
  for (std::size_t c = 0; c < x.channels(); ++c) {
    const auto base = static_cast<Eigen::Index>(c * taps);
    if (mask != nullptr && mask[c] == 0) {
      for (std::size_t j = 0; j < taps; ++j)
        row(base + static_cast<Eigen::Index>(j)) = 0.0;
      continue;
    }
    const auto r = x.row(c);
    for (std::size_t j = 0; j < taps; ++j) {
      const auto s = static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(j) - half;
      row(base + static_cast<Eigen::Index>(j)) =
          (s >= 0 && s < samples) ? r[static_cast<std::size_t>(s)] : 0.0;
    }
  }
}

// tanh(x) = 1 - 2 / (exp(2x) + 1), using Eigen's packet exp.
void tanh_inplace(Eigen::MatrixXd &m) {
  auto a = m.array();
  a = 1.0 - 2.0 / ((2.0 * a.max(-40.0).min(40.0)).exp() + 1.0);
}

struct FrameRef {
  std::uint32_t utterance;
  std::uint32_t t;
};

struct BatchPass {
  Eigen::MatrixXd inputs;  // B x D
  Eigen::MatrixXd hidden;  // B x F
  Eigen::MatrixXd probs;   // B x K
  double loss = 0.0;
};

// Forward pass over a batch, returning mean cross-entropy.
void batch_forward(const ModelParams &p, BatchPass &pass, std::span<const int> labels) {
  pass.hidden = pass.inputs * p.input_weights.transpose();
  pass.hidden.rowwise() += p.hidden_bias.transpose();
  tanh_inplace(pass.hidden);
  pass.probs = pass.hidden * p.output_weights.transpose();
  pass.probs.rowwise() += p.output_bias.transpose();
  double loss = 0.0;
  for (Eigen::Index i = 0; i < pass.probs.rows(); ++i) {
    auto row = pass.probs.row(i);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
    loss -= std::log(std::max(row(labels[static_cast<std::size_t>(i)]), kLogFloor));
  }
  pass.loss = loss / static_cast<double>(pass.probs.rows());
}

// Gradient of the mean cross-entropy of `pass`, scaled by `weight`, accumulated into g.
void batch_backward(const ModelParams &p, const BatchPass &pass, std::span<const int> labels,
                    double weight, Gradients &g) {
  Eigen::MatrixXd d_scores = pass.probs;
  for (Eigen::Index i = 0; i < d_scores.rows(); ++i)
    d_scores(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
  d_scores *= weight / static_cast<double>(d_scores.rows());
  g.output_weights.noalias() += d_scores.transpose() * pass.hidden;
  g.output_bias += d_scores.colwise().sum().transpose();
  Eigen::MatrixXd d_hidden = d_scores * p.output_weights;
  d_hidden.array() *= 1.0 - pass.hidden.array().square();
  g.input_weights.noalias() += d_hidden.transpose() * pass.inputs;
  g.hidden_bias += d_hidden.colwise().sum().transpose();
}

Gradients zero_gradients(const ModelParams &p) {
  return {Eigen::MatrixXd::Zero(p.input_weights.rows(), p.input_weights.cols()),
          Eigen::VectorXd::Zero(p.hidden_bias.size()),
          Eigen::MatrixXd::Zero(p.output_weights.rows(), p.output_weights.cols()),
          Eigen::VectorXd::Zero(p.output_bias.size())};
}

// Runs f(pass, labels, frames) once per utterance over the whole corpus, unmasked.
template <typename F>
void for_each_utterance_pass(const ModelParams &params, const Corpus &data, F &&f) {
  check_channels(params, data.channels());
  const auto lookup = class_lookup(params, data);
  BatchPass pass;
  std::vector<int> labels;
  for (const auto &u : data.utterances) {
    const std::size_t frames = u.labels.size();
    pass.inputs.resize(static_cast<Eigen::Index>(frames),
                       static_cast<Eigen::Index>(params.sizes.input_width()));
    labels.resize(frames);
    for (std::size_t t = 0; t < frames; ++t) {
      fill_window(u.signal, t, params.sizes.taps, nullptr,
                  pass.inputs.row(static_cast<Eigen::Index>(t)));
      labels[t] = lookup[u.labels[t]];
      if (labels[t] < 0)
        throw ShapeError("frame label " + data.table->symbol(u.labels[t]) +
                         " is not a model class");
    }
    batch_forward(params, pass, labels);
    f(pass, std::span<const int>(labels), frames);
  }
}

} // namespace

std::size_t ModelParams::parameter_count() const noexcept {
  return static_cast<std::size_t>(input_weights.size() + hidden_bias.size() +
                                  output_weights.size() + output_bias.size());
}

double ModelParams::coordinate(std::size_t i) const { return flat_coordinate(*this, i); }
double &ModelParams::coordinate(std::size_t i) { return flat_coordinate(*this, i); }
double Gradients::coordinate(std::size_t i) const { return flat_coordinate(*this, i); }
double &Gradients::coordinate(std::size_t i) { return flat_coordinate(*this, i); }

std::vector<double> ModelParams::flatten() const {
  std::vector<double> out(parameter_count());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = coordinate(i);
  return out;
}

void ModelParams::assign(std::span<const double> flat) {
  if (flat.size() != parameter_count())
    throw ShapeError("parameter payload has " + std::to_string(flat.size()) + " values, expected " +
                     std::to_string(parameter_count()));
  for (std::size_t i = 0; i < flat.size(); ++i)
    coordinate(i) = flat[i];
}

void ModelParams::validate() const {
  const auto f = static_cast<Eigen::Index>(sizes.features);
  const auto k = static_cast<Eigen::Index>(sizes.classes);
  const auto d = static_cast<Eigen::Index>(sizes.input_width());
  if (sizes.input_channels == 0 || sizes.taps == 0 || sizes.features == 0 || sizes.classes < 2)
    throw ShapeError("layer sizes must be positive with at least two classes");
  if (input_weights.rows() != f || input_weights.cols() != d || hidden_bias.size() != f ||
      output_weights.rows() != k || output_weights.cols() != f || output_bias.size() != k)
    throw ShapeError("parameter shapes do not match recorded layer sizes");
  if (class_symbols.size() != sizes.classes)
    throw ShapeError("class symbol count does not match output size");
  if (!input_weights.allFinite() || !hidden_bias.allFinite() || !output_weights.allFinite() ||
      !output_bias.allFinite())
    throw DomainError("model parameters contain non-finite values");
}

ModelParams init_params(const LayerSizes &sizes, std::vector<std::string> class_symbols,
                        std::uint64_t seed) {
  ModelParams p;
  p.sizes = sizes;
  p.class_symbols = std::move(class_symbols);
  p.seed = seed;
  const auto f = static_cast<Eigen::Index>(sizes.features);
  const auto k = static_cast<Eigen::Index>(sizes.classes);
  const auto d = static_cast<Eigen::Index>(sizes.input_width());
  p.input_weights.resize(f, d);
  p.hidden_bias = Eigen::VectorXd::Zero(f);
  p.output_weights.resize(k, f);
  p.output_bias = Eigen::VectorXd::Zero(k);
  Rng rng = make_rng(seed, 0);
  const double a_in = std::sqrt(1.0 / static_cast<double>(d));
  for (Eigen::Index r = 0; r < f; ++r)
    for (Eigen::Index c = 0; c < d; ++c)
      p.input_weights(r, c) = a_in * (2.0 * uniform01(rng) - 1.0);
  const double a_out = std::sqrt(1.0 / static_cast<double>(f));
  for (Eigen::Index r = 0; r < k; ++r)
    for (Eigen::Index c = 0; c < f; ++c)
      p.output_weights(r, c) = a_out * (2.0 * uniform01(rng) - 1.0);
  p.validate();
  return p;
}

std::string params_hash(const ModelParams &params) {
  Hasher h;
  const auto &s = params.sizes;
  h.update("chansel-model-v1 " + std::to_string(s.input_channels) + " " + std::to_string(s.taps) +
           " " + std::to_string(s.features) + " " + std::to_string(s.classes) + "\n");
  for (const auto &c : params.class_symbols)
    h.update(c).update(",");
  const auto flat = params.flatten();
  h.update(std::span<const double>(flat));
  return h.hex_digest();
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ConfigError("learning rate must be positive");
  if (batch_size == 0)
    throw ConfigError("batch size must be positive");
  if (!(dropout >= 0.0 && dropout <= 1.0))
    throw DomainError("dropout probability must lie in [0, 1]");
}

void to_json(json &j, const TrainConfig &cfg) {
  j = json{{"learning_rate", cfg.learning_rate},
           {"epochs", cfg.epochs},
           {"batch_size", cfg.batch_size},
           {"dropout", cfg.dropout},
           {"seed", cfg.seed}};
}

void from_json(const json &j, TrainConfig &cfg) {
  TrainConfig d;
  cfg.learning_rate = j.value("learning_rate", d.learning_rate);
  cfg.epochs = j.value("epochs", d.epochs);
  cfg.batch_size = j.value("batch_size", d.batch_size);
  cfg.dropout = j.value("dropout", d.dropout);
  cfg.seed = j.value("seed", d.seed);
}

Eigen::MatrixXd forward(const ModelParams &params, const MultichannelSignal &x) {
  check_channels(params, x.channels());
  Eigen::MatrixXd inputs(static_cast<Eigen::Index>(x.samples()),
                         static_cast<Eigen::Index>(params.sizes.input_width()));
  for (std::size_t t = 0; t < x.samples(); ++t)
    fill_window(x, t, params.sizes.taps, nullptr, inputs.row(static_cast<Eigen::Index>(t)));
  Eigen::MatrixXd hidden = inputs * params.input_weights.transpose();
  hidden.rowwise() += params.hidden_bias.transpose();
  tanh_inplace(hidden);
  Eigen::MatrixXd scores = hidden * params.output_weights.transpose();
  scores.rowwise() += params.output_bias.transpose();
  return scores;
}

FrameLabels predict_labels(const ModelParams &params, const MultichannelSignal &x,
                           std::span<const PhonemeId> classes) {
  if (classes.size() != params.sizes.classes)
    throw ShapeError("class list does not match model output size");
  const Eigen::MatrixXd scores = forward(params, x);
  FrameLabels out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index t = 0; t < scores.rows(); ++t) {
    Eigen::Index best = 0;
    scores.row(t).maxCoeff(&best); // first maximum on ties
    out[static_cast<std::size_t>(t)] = classes[static_cast<std::size_t>(best)];
  }
  return out;
}

double corpus_loss(const ModelParams &params, const Corpus &data) {
  double total = 0.0;
  std::size_t frames = 0;
  for_each_utterance_pass(params, data, [&](const BatchPass &pass, auto, std::size_t n) {
    total += pass.loss * static_cast<double>(n);
    frames += n;
  });
  return total / static_cast<double>(frames);
}

Gradients corpus_gradients(const ModelParams &params, const Corpus &data) {
  Gradients g = zero_gradients(params);
  const auto total = static_cast<double>(data.frames());
  for_each_utterance_pass(params, data,
                          [&](const BatchPass &pass, std::span<const int> labels, std::size_t n) {
                            batch_backward(params, pass, labels, static_cast<double>(n) / total, g);
                          });
  return g;
}

TrainResult train(ModelParams params, const Corpus &data, const TrainConfig &cfg) {
  cfg.validate();
  params.validate();
  if (data.utterances.empty())
    throw ConfigError("training corpus is empty");
  check_channels(params, data.channels());
  const auto lookup = class_lookup(params, data);

  std::vector<FrameRef> order;
  order.reserve(data.frames());
  for (std::size_t u = 0; u < data.utterances.size(); ++u) {
    for (std::size_t t = 0; t < data.utterances[u].labels.size(); ++t) {
      order.push_back({static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(t)});
      const int k = lookup[data.utterances[u].labels[t]];
      if (k < 0)
        throw ShapeError("frame label is not a model class");
    }
  }

  TrainResult result{std::move(params), {}};
  ModelParams &p = result.params;
  result.log.initial_loss = corpus_loss(p, data);

  const std::size_t channels = data.channels();
  std::vector<std::vector<std::uint8_t>> masks(data.utterances.size(),
                                               std::vector<std::uint8_t>(channels, 1));
  BatchPass pass;
  std::vector<int> labels;
  Gradients g = zero_gradients(p);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng = make_rng(cfg.seed, 1 + epoch);
    std::size_t retained = 0;
    for (auto &m : masks) {
      if (cfg.dropout > 0.0) {
        auto drawn = draw_dropout_mask(channels, cfg.dropout, rng);
        m.assign(drawn.bits().begin(), drawn.bits().end());
      }
      retained += static_cast<std::size_t>(std::count(m.begin(), m.end(), std::uint8_t{1}));
    }
    result.log.mean_retained.push_back(static_cast<double>(retained) /
                                       static_cast<double>(masks.size()));
    chansel::shuffle(order.begin(), order.end(), rng);

    double epoch_loss = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
      const std::size_t n = std::min(cfg.batch_size, order.size() - start);
      pass.inputs.resize(static_cast<Eigen::Index>(n),
                         static_cast<Eigen::Index>(p.sizes.input_width()));
      labels.resize(n);
      for (std::size_t i = 0; i < n; ++i) {
        const auto &f = order[start + i];
        const auto &u = data.utterances[f.utterance];
        fill_window(u.signal, f.t, p.sizes.taps, masks[f.utterance].data(),
                    pass.inputs.row(static_cast<Eigen::Index>(i)));
        labels[i] = lookup[u.labels[f.t]];
      }
      batch_forward(p, pass, labels);
      if (!std::isfinite(pass.loss))
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                  std::to_string(batch_index),
                              epoch, batch_index);
      g.input_weights.setZero();
      g.hidden_bias.setZero();
      g.output_weights.setZero();
      g.output_bias.setZero();
      batch_backward(p, pass, labels, 1.0, g);
      p.input_weights -= cfg.learning_rate * g.input_weights;
      p.hidden_bias -= cfg.learning_rate * g.hidden_bias;
      p.output_weights -= cfg.learning_rate * g.output_weights;
      p.output_bias -= cfg.learning_rate * g.output_bias;
      epoch_loss += pass.loss * static_cast<double>(n);
    }
    result.log.epoch_loss.push_back(epoch_loss / static_cast<double>(order.size()));
  }
  result.log.final_loss = corpus_loss(p, data);
  if (!std::isfinite(result.log.final_loss))
    throw DivergenceError("non-finite final training loss", cfg.epochs, 0);
  return result;
}

GradientCheckResult gradient_check(const ModelParams &params, const Corpus &batch,
                                   const GradientCheckOptions &options) {
  Gradients analytic = corpus_gradients(params, batch);
  if (options.tamper)
    options.tamper(analytic);

  const std::size_t total = params.parameter_count();
  std::vector<std::size_t> coords(total);
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  Rng rng = make_rng(options.seed, 0);
  chansel::shuffle(coords.begin(), coords.end(), rng);
  coords.resize(std::min(options.coordinates, total));

  ModelParams probe = params;
  GradientCheckResult result;
  for (auto i : coords) {
    const double original = probe.coordinate(i);
    probe.coordinate(i) = original + options.step;
    const double up = corpus_loss(probe, batch);
    probe.coordinate(i) = original - options.step;
    const double down = corpus_loss(probe, batch);
    probe.coordinate(i) = original;
    const double numeric = (up - down) / (2.0 * options.step);
    const double a = analytic.coordinate(i);
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-7});
    result.max_relative_error = std::max(result.max_relative_error, std::abs(a - numeric) / denom);
    ++result.coordinates_checked;
  }
  return result;
}

ModelParams slice_input_channels(const ModelParams &params, const ChannelSubset &s) {
  if (s.empty() || s.max_index() >= params.sizes.input_channels)
    throw ShapeError("subset " + s.label() + " out of range for a " +
                     std::to_string(params.sizes.input_channels) + "-channel model");
  ModelParams out = params;
  out.sizes.input_channels = s.size();
  const auto taps = static_cast<Eigen::Index>(params.sizes.taps);
  out.input_weights.resize(params.input_weights.rows(), static_cast<Eigen::Index>(s.size()) * taps);
  Eigen::Index dst = 0;
  for (auto c : s.indices()) {
    out.input_weights.middleCols(dst, taps) =
        params.input_weights.middleCols(static_cast<Eigen::Index>(c) * taps, taps);
    dst += taps;
  }
  out.provenance = {params_hash(params), s.label()};
  return out;
}

EvalRecord evaluate(const ModelParams &params, const Corpus &test, std::size_t category_threshold) {
  const auto started = std::chrono::steady_clock::now();
  check_channels(params, test.channels());
  class_lookup(params, test);
  CategoryCounts counts(*test.table);
  std::size_t word_errors = 0, ref_words = 0;
  for (const auto &u : test.utterances) {
    const auto hyp = predict_labels(params, u.signal, test.classes);
    counts.add(u.labels, hyp);
    const auto hyp_words = collapse_to_words(hyp, *test.table);
    word_errors += align_tokens(u.transcript, hyp_words).total();
    ref_words += u.transcript.size();
  }
  if (ref_words == 0)
    throw DomainError("test corpus has no reference words");
  EvalRecord r;
  r.wer = static_cast<double>(word_errors) / static_cast<double>(ref_words);
  r.per_category = counts.report(category_threshold);
  r.per_total = r.per_category.total.rate;
  r.subset = ChannelSubset::full(params.sizes.input_channels);
  r.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return r;
}

void to_json(json &j, const EvalRecord &r) {
  json rows = json::array();
  for (const auto &row : r.per_category.rows)
    rows.push_back({row.name, row.count, row.rate});
  j = json{{"subset", r.subset.label()},
           {"seed", r.seed},
           {"config_hash", r.config_hash},
           {"corpus_hash", r.corpus_hash},
           {"wer", r.wer},
           {"per_total", r.per_total},
           {"frames", r.per_category.total.count},
           {"per_category", rows},
           {"excluded", r.per_category.excluded},
           {"wall_time_s", r.wall_time_s}};
}

void from_json(const json &j, EvalRecord &r) {
  // Channel count is unknown here; labels only need to be well formed.
  r.subset = parse_subset(j.at("subset").get<std::string>(), 4096);
  r.seed = j.at("seed").get<std::uint64_t>();
  r.config_hash = j.at("config_hash").get<std::string>();
  r.corpus_hash = j.at("corpus_hash").get<std::string>();
  r.wer = j.at("wer").get<double>();
  r.per_total = j.at("per_total").get<double>();
  r.per_category = {};
  r.per_category.total.count = j.value("frames", std::size_t{0});
  r.per_category.total.rate = r.per_total;
  for (const auto &row : j.at("per_category"))
    r.per_category.rows.push_back(
        {row.at(0).get<std::string>(), row.at(1).get<std::size_t>(), row.at(2).get<double>()});
  r.per_category.excluded = j.value("excluded", std::vector<std::string>{});
  r.wall_time_s = j.value("wall_time_s", 0.0);
}

} // namespace chansel
