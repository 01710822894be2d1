#pragma once

#include "chansel/corpus.hpp"
#include "chansel/metrics.hpp"
#include "chansel/signal.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace chansel {

struct LayerSizes {
  std::size_t input_channels = 8;
  std::size_t taps = 9;      // window width W per channel, centred on the frame
  std::size_t features = 32; // hidden units F
  std::size_t classes = 13;

  std::size_t input_width() const noexcept { return input_channels * taps; }
  friend bool operator==(const LayerSizes &, const LayerSizes &) = default;
};

/// Where a sliced model came from. Empty fields mean "trained from an init".
struct ModelProvenance {
  std::string parent_hash;
  std::string subset;
};

/**
 * Parameters of the reference frame classifier:
 *
 *   x_t  = per-channel windows of `taps` samples around frame t (zero padded)
 *   h    = tanh(input_weights * x_t + hidden_bias)
 *   s    = output_weights * h + output_bias      (softmax over classes)
 *
 * Channel c owns input_weights columns [c * taps, (c + 1) * taps).
 * Flat coordinate order: input_weights (row-major), hidden_bias,
 * output_weights (row-major), output_bias.
 */
struct ModelParams {
  LayerSizes sizes;
  Eigen::MatrixXd input_weights;  // features x input_width
  Eigen::VectorXd hidden_bias;    // features
  Eigen::MatrixXd output_weights; // classes x features
  Eigen::VectorXd output_bias;    // classes
  std::vector<std::string> class_symbols;
  std::uint64_t seed = 0;
  std::string config_hash;
  ModelProvenance provenance;

  std::size_t parameter_count() const noexcept;
  double coordinate(std::size_t i) const;
  double &coordinate(std::size_t i);
  std::vector<double> flatten() const;
  void assign(std::span<const double> flat);
  /// Throws ShapeError on inconsistent shapes, DomainError on non-finite values.
  void validate() const;
};

/// Uniform in [-a, a], a = sqrt(1 / fan_in); biases start at zero.
ModelParams init_params(const LayerSizes &sizes, std::vector<std::string> class_symbols,
                        std::uint64_t seed);

std::string params_hash(const ModelParams &params);

inline constexpr std::array<double, 3> kDropoutPresets = {0.0, 0.125, 0.25};

struct TrainConfig {
  double learning_rate = 0.1;
  std::size_t epochs = 12;
  std::size_t batch_size = 32;
  double dropout = 0.0; // per-utterance channel dropout probability during training only
  std::uint64_t seed = 1;

  void validate() const;
};

void to_json(nlohmann::json &j, const TrainConfig &cfg);
void from_json(const nlohmann::json &j, TrainConfig &cfg);

/// Per-frame class scores (T x classes). Throws ShapeError on a channel-count mismatch.
Eigen::MatrixXd forward(const ModelParams &params, const MultichannelSignal &x);

/// Argmax class per frame, mapped to the corpus's phoneme ids.
FrameLabels predict_labels(const ModelParams &params, const MultichannelSignal &x,
                           std::span<const PhonemeId> classes);

struct Gradients {
  Eigen::MatrixXd input_weights;
  Eigen::VectorXd hidden_bias;
  Eigen::MatrixXd output_weights;
  Eigen::VectorXd output_bias;

  double coordinate(std::size_t i) const;
  double &coordinate(std::size_t i);
};

/// Mean frame cross-entropy over every frame of `data`, no masking.
double corpus_loss(const ModelParams &params, const Corpus &data);
/// Analytic gradient of corpus_loss.
Gradients corpus_gradients(const ModelParams &params, const Corpus &data);

struct TrainLog {
  std::vector<double> epoch_loss;    // mean mini-batch loss per epoch (with dropout applied)
  std::vector<double> mean_retained; // mean retained channels per utterance draw, per epoch
  double initial_loss = 0.0;         // full training set, no dropout
  double final_loss = 0.0;
};

struct TrainResult {
  ModelParams params;
  TrainLog log;
};

/**
 * Mini-batch gradient descent on frame-wise cross-entropy with a fixed
 * learning rate. When cfg.dropout > 0 each utterance draws a fresh channel
 * mask every epoch. Deterministic in cfg.seed. Throws DivergenceError on a
 * non-finite batch loss.
 */
TrainResult train(ModelParams params, const Corpus &data, const TrainConfig &cfg);

struct GradientCheckOptions {
  std::size_t coordinates = 100;
  double step = 1e-5;
  std::uint64_t seed = 7;
  /// Optional corruption of the analytic gradient (negative controls).
  std::function<void(Gradients &)> tamper;
};

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates_checked = 0;
};

/**
 * Compares corpus_gradients against central finite differences on randomly
 * chosen coordinates. Relative error is |a - n| / max(|a|, |n|, 1e-7).
 */
GradientCheckResult gradient_check(const ModelParams &params, const Corpus &batch,
                                   const GradientCheckOptions &options = {});

/// Keeps the input-weight column blocks of the channels in `s`; everything else is copied.
ModelParams slice_input_channels(const ModelParams &params, const ChannelSubset &s);

struct EvalRecord {
  ChannelSubset subset;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::string corpus_hash;
  double wer = 0.0;
  double per_total = 0.0;
  CategoryReport per_category;
  double wall_time_s = 0.0;
};

void to_json(nlohmann::json &j, const EvalRecord &r);
void from_json(const nlohmann::json &j, EvalRecord &r);

/**
 * Argmax frame predictions, frame-wise PER (total and per category), and
 * corpus-level WER of the collapsed prediction transcripts against the
 * references. Subset, seed and hashes are left for the caller to fill.
 */
EvalRecord evaluate(const ModelParams &params, const Corpus &test,
                    std::size_t category_threshold = kDefaultCategoryThreshold);

// Model file: JSON manifest plus a little-endian float64 payload next to it.
void write_model(const ModelParams &params, const std::filesystem::path &manifest_path);
ModelParams read_model(const std::filesystem::path &manifest_path);

} // namespace chansel
