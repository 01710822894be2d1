#include "chansel/error.hpp"
#include "chansel/evaluator.hpp"
#include "chansel/model.hpp"

#include "unit/fixtures.hpp"

#include <doctest.h>

#include <cmath>

using namespace chansel;
using namespace fixtures;

namespace {

Corpus tiny_batch(std::uint64_t seed, std::size_t utterances = 2) {
  auto g = tiny_config(4, seed);
  g.utterances = utterances;
  g.segments_per_utterance = 4;
  g.frames_per_segment = 4;
  return generate(g);
}

LayerSizes tiny_sizes() { return {4, 3, 8, 4}; }

ModelParams tiny_params(std::uint64_t seed) {
  return init_params(tiny_sizes(), {"SIL", "AA", "IY", "B"}, seed);
}

double max_abs_diff(const Eigen::MatrixXd &a, const Eigen::MatrixXd &b) {
  return (a - b).cwiseAbs().maxCoeff();
}

double train_accuracy(const ModelParams &p, const Corpus &c) {
  std::size_t ok = 0, n = 0;
  for (const auto &u : c.utterances) {
    const auto hyp = predict_labels(p, u.signal, c.classes);
    for (std::size_t t = 0; t < hyp.size(); ++t)
      ok += hyp[t] == u.labels[t] ? 1 : 0;
    n += hyp.size();
  }
  return static_cast<double>(ok) / static_cast<double>(n);
}

} // namespace

TEST_SUITE_BEGIN("model");

TEST_CASE("init draws stay inside the fan-in bound") {
  const auto p = init_params({8, 9, 32, 13}, std::vector<std::string>(13, "x"), 4);
  CHECK(p.input_weights.rows() == 32);
  CHECK(p.input_weights.cols() == 72);
  CHECK(p.input_weights.cwiseAbs().maxCoeff() <= std::sqrt(1.0 / 72.0));
  CHECK(p.output_weights.cwiseAbs().maxCoeff() <= std::sqrt(1.0 / 32.0));
  CHECK(p.hidden_bias.isZero());
  CHECK(p.output_bias.isZero());
  CHECK(params_hash(p) == params_hash(init_params({8, 9, 32, 13}, std::vector<std::string>(13, "x"), 4)));
  CHECK(params_hash(p) != params_hash(init_params({8, 9, 32, 13}, std::vector<std::string>(13, "x"), 5)));
}

TEST_CASE("all-zero input gives the bias-only scores") {
  Rng rng = make_rng(1, 0);
  const auto p = random_params({3, 5, 6, 4}, rng);
  const MultichannelSignal zeros(3, 7, std::vector<double>(21, 0.0));
  const Eigen::VectorXd expected =
      p.output_weights * p.hidden_bias.array().tanh().matrix() + p.output_bias;
  const auto scores = forward(p, zeros);
  for (Eigen::Index t = 0; t < scores.rows(); ++t)
    CHECK((scores.row(t).transpose() - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("hand-computed forward pass") {
  // Two channels, one tap, one hidden unit, two classes.
  ModelParams p = init_params({2, 1, 1, 2}, {"SIL", "AA"}, 1);
  p.input_weights.resize(1, 2);
  p.input_weights << 0.5, -1.0;
  p.hidden_bias << 0.25;
  p.output_weights.resize(2, 1);
  p.output_weights << 2.0, -3.0;
  p.output_bias << 0.1, 0.2;
  const MultichannelSignal x(std::vector<std::vector<double>>{{1.0}, {0.5}});
  const double h = std::tanh(0.5 * 1.0 - 1.0 * 0.5 + 0.25);
  const auto s = forward(p, x);
  CHECK(s(0, 0) == doctest::Approx(2.0 * h + 0.1).epsilon(1e-14));
  CHECK(s(0, 1) == doctest::Approx(-3.0 * h + 0.2).epsilon(1e-14));
}

TEST_CASE("windows are centred and zero padded") {
  ModelParams p = init_params({1, 3, 1, 2}, {"SIL", "AA"}, 1);
  p.input_weights.resize(1, 3);
  p.input_weights << 1e-3, 1e-2, 1e-1; // taps t-1, t, t+1
  p.output_weights.resize(2, 1);
  p.output_weights << 1.0, 0.0;
  const MultichannelSignal x(std::vector<std::vector<double>>{{1.0, 2.0, 3.0}});
  const auto s = forward(p, x);
  CHECK(s(0, 0) == doctest::Approx(std::tanh(0.01 * 1.0 + 0.1 * 2.0)).epsilon(1e-14));
  CHECK(s(1, 0) == doctest::Approx(std::tanh(0.001 + 0.02 + 0.3)).epsilon(1e-14));
  CHECK(s(2, 0) == doctest::Approx(std::tanh(0.002 + 0.03)).epsilon(1e-14));
}

TEST_CASE("forward rejects channel-count mismatches") {
  const auto p = tiny_params(1);
  CHECK_THROWS_AS(forward(p, MultichannelSignal(3, 4, std::vector<double>(12, 0.0))), ShapeError);
}

TEST_CASE("slicing keeps exactly the selected column blocks") {
  Rng rng = make_rng(2, 0);
  const auto p = random_params({8, 9, 6, 4}, rng);
  const auto full = slice_input_channels(p, ChannelSubset::full(8));
  CHECK(full.input_weights == p.input_weights);
  CHECK(full.output_weights == p.output_weights);
  CHECK(full.hidden_bias == p.hidden_bias);
  CHECK(full.output_bias == p.output_bias);

  const auto four = slice_input_channels(p, parse_subset("1356", 8));
  CHECK(four.sizes.input_channels == 4);
  CHECK(four.input_weights.cols() == p.input_weights.cols() / 2);
  const std::size_t kept[] = {0, 2, 4, 5};
  for (std::size_t i = 0; i < 4; ++i)
    CHECK(four.input_weights.middleCols(static_cast<Eigen::Index>(i) * 9, 9) ==
          p.input_weights.middleCols(static_cast<Eigen::Index>(kept[i]) * 9, 9));
  CHECK(four.output_weights == p.output_weights);
  CHECK(four.provenance.subset == "1356");
  CHECK(four.provenance.parent_hash == params_hash(p));

  CHECK_THROWS_AS(slice_input_channels(four, ChannelSubset({4})), ShapeError);
}

TEST_CASE("sliced forward on restricted input equals zero-masked full forward") {
  Rng rng = make_rng(6, 0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t channels = 2 + uniform_index(rng, 7);
    const auto p = random_params({channels, 1 + 2 * uniform_index(rng, 5), 8, 5}, rng);
    const std::size_t samples = 5 + uniform_index(rng, 20);
    std::vector<double> data(channels * samples);
    for (auto &v : data)
      v = 4.0 * uniform01(rng) - 2.0;
    const MultichannelSignal x(channels, samples, data);
    const auto mask = draw_dropout_mask(channels, 0.5, rng);
    std::vector<std::size_t> kept;
    for (std::size_t c = 0; c < channels; ++c)
      if (mask.retained(c))
        kept.push_back(c);
    if (kept.empty())
      kept.push_back(uniform_index(rng, channels));
    const ChannelSubset s(kept);
    const auto masked = forward(p, s.to_mask(channels).apply(x));
    const auto sliced = forward(slice_input_channels(p, s), restrict_to_subset(x, s));
    worst = std::max(worst, max_abs_diff(masked, sliced));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("analytic gradients match finite differences") {
  for (std::uint64_t draw = 1; draw <= 20; ++draw) {
    Rng rng = make_rng(draw, 3);
    auto p = random_params(tiny_sizes(), rng);
    p.class_symbols = {"SIL", "AA", "IY", "B"};
    const auto batch = tiny_batch(draw);
    GradientCheckOptions o;
    o.seed = draw;
    const auto r = gradient_check(p, batch, o);
    CHECK(r.coordinates_checked >= 100);
    CHECK(r.max_relative_error < 1e-4);
  }
}

TEST_CASE("a sign-flipped gradient fails the check") {
  auto p = tiny_params(3);
  const auto batch = tiny_batch(3);
  GradientCheckOptions o;
  o.tamper = [](Gradients &g) {
    g.input_weights = -g.input_weights;
    g.hidden_bias = -g.hidden_bias;
    g.output_weights = -g.output_weights;
    g.output_bias = -g.output_bias;
  };
  CHECK(gradient_check(p, batch, o).max_relative_error > 0.5);
}

TEST_CASE("a confidently correct model has near-zero gradients") {
  const auto corpus = one_hot_corpus({{0, 1, 1, 2, 0, 3, 3, 0}, {2, 2, 0, 1, 3}});
  auto p = one_hot_model();
  p.output_weights *= 5.0;
  CHECK(corpus_loss(p, corpus) < 1e-12);
  const auto g = corpus_gradients(p, corpus);
  CHECK(g.input_weights.cwiseAbs().maxCoeff() < 1e-10);
  CHECK(g.output_weights.cwiseAbs().maxCoeff() < 1e-10);
  CHECK(gradient_check(p, corpus).max_relative_error < 1e-4);
}

TEST_CASE("training is deterministic in the seed") {
  const auto corpus = generate(tiny_config());
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.dropout = 0.25;
  cfg.seed = 9;
  const auto a = train(tiny_params(1), corpus, cfg);
  const auto b = train(tiny_params(1), corpus, cfg);
  CHECK(params_hash(a.params) == params_hash(b.params));
  CHECK(a.log.epoch_loss == b.log.epoch_loss);
  cfg.seed = 10;
  CHECK(params_hash(train(tiny_params(1), corpus, cfg).params) != params_hash(a.params));
  cfg.seed = 9;
  cfg.dropout = 0.0;
  CHECK(params_hash(train(tiny_params(1), corpus, cfg).params) != params_hash(a.params));
}

TEST_CASE("full dropout leaves the input layer untouched") {
  const auto corpus = generate(tiny_config());
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.dropout = 1.0;
  const auto start = tiny_params(2);
  const auto r = train(start, corpus, cfg);
  CHECK(r.params.input_weights == start.input_weights);
  CHECK(r.params.output_bias != start.output_bias);
  for (double m : r.log.mean_retained)
    CHECK(m == 0.0);
}

TEST_CASE("training separates a separable toy set") {
  auto g = tiny_config(2, 5);
  g.classes = {"AA"};
  g.classes.push_back("B");
  g.weights = {1.0, 1.0};
  g.noise_std = 0.05;
  g.utterances = 20;
  const auto corpus = generate(g);
  const auto p = init_params({2, 3, 8, 3}, {"SIL", "AA", "B"}, 4);
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.learning_rate = 0.3;
  const auto r = train(p, corpus, cfg);
  CHECK(train_accuracy(r.params, corpus) >= 0.99);
  CHECK(r.log.final_loss <= r.log.initial_loss);

  // Window-5 moving average of the epoch loss never rises.
  const auto &loss = r.log.epoch_loss;
  REQUIRE(loss.size() == 40);
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t e = 4; e < loss.size(); ++e) {
    double avg = 0.0;
    for (std::size_t i = e - 4; i <= e; ++i)
      avg += loss[i] / 5.0;
    CHECK(avg <= previous + 1e-12);
    previous = avg;
  }
}

TEST_CASE("training rejects invalid settings and reports divergence") {
  const auto corpus = generate(tiny_config());
  TrainConfig cfg;
  cfg.dropout = 1.5;
  CHECK_THROWS_AS(train(tiny_params(1), corpus, cfg), DomainError);
  cfg = {};
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(train(tiny_params(1), corpus, cfg), ConfigError);
  // Logits overflow to infinity, so the first batch loss is NaN.
  auto p = tiny_params(1);
  p.hidden_bias.setConstant(3.0);
  p.output_weights.setConstant(1e308);
  cfg = {};
  CHECK_THROWS_AS(train(p, corpus, cfg), DivergenceError);
}

TEST_CASE("mean retained channels follows the dropout rate") {
  auto g = tiny_config(8, 2);
  g.utterances = 100;
  g.segments_per_utterance = 2;
  g.frames_per_segment = 2;
  const auto corpus = generate(g);
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.dropout = 0.125;
  const auto r = train(init_params({8, 1, 2, 4}, {"SIL", "AA", "IY", "B"}, 1), corpus, cfg);
  double mean = 0.0;
  for (double m : r.log.mean_retained)
    mean += m / static_cast<double>(r.log.mean_retained.size());
  CHECK(mean == doctest::Approx(7.0).epsilon(0.015));
}

TEST_CASE("a perfect model scores zero WER and PER") {
  const auto corpus = one_hot_corpus({{0, 1, 1, 2, 0, 3, 3, 0}, {2, 2, 0, 1, 3}});
  const auto r = evaluate(one_hot_model(), corpus, 1);
  CHECK(r.wer == 0.0);
  CHECK(r.per_total == 0.0);
}

TEST_CASE("a constant prediction scores one minus its class prior") {
  const auto corpus = one_hot_corpus({{0, 1, 1, 2, 0, 3, 3, 0}, {2, 2, 0, 1, 3, 0}});
  auto p = one_hot_model();
  p.input_weights.setZero();
  p.output_bias << 1.0, 0.0, 0.0, 0.0;
  const auto r = evaluate(p, corpus, 1);
  CHECK(r.per_total == doctest::Approx(1.0 - 5.0 / 14.0).epsilon(1e-15));
  CHECK(r.wer == 1.0); // every reference word deleted
}

TEST_CASE("evaluation rejects mismatched corpora") {
  const auto corpus = generate(tiny_config(3));
  CHECK_THROWS_AS(evaluate(tiny_params(1), corpus), ShapeError);
}

TEST_CASE("model files round-trip") {
  Rng rng = make_rng(12, 0);
  auto p = random_params({3, 5, 4, 3}, rng);
  p.seed = 17;
  p.config_hash = "abc";
  p.provenance = {"parent", "13"};
  const auto dir = scratch_dir("model_io");
  write_model(p, dir / "m.json");
  const auto back = read_model(dir / "m.json");
  CHECK(params_hash(back) == params_hash(p));
  CHECK(back.input_weights == p.input_weights);
  CHECK(back.sizes == p.sizes);
  CHECK(back.class_symbols == p.class_symbols);
  CHECK(back.provenance.subset == "13");
  CHECK(back.seed == 17);
}

TEST_CASE("eval records round-trip through json") {
  const auto corpus = generate(tiny_config());
  auto r = evaluate(tiny_params(1), corpus, 1);
  r.subset = parse_subset("124", 4);
  r.seed = 3;
  r.config_hash = "c";
  r.corpus_hash = "d";
  nlohmann::json j = r;
  const auto back = j.get<EvalRecord>();
  CHECK(nlohmann::json(back) == j);
}

TEST_CASE("reference evaluator is pure in subset and seed") {
  const auto corpus = generate(tiny_config());
  ReferenceEvaluatorOptions o;
  o.train.epochs = 2;
  o.features = 4;
  ReferenceEvaluator ev(split_corpus(corpus, 0.25), o);
  const auto s = parse_subset("13", 4);
  const auto a = ev.evaluate(s, 5);
  const auto b = ev.evaluate(s, 5);
  CHECK(a.per_total == b.per_total);
  CHECK(a.wer == b.wer);
  CHECK(a.subset == s);
  CHECK(a.corpus_hash == ev.corpus_hash());
  CHECK(a.config_hash == ev.config_hash());

  // Fresh initialisations share one full-width draw per seed.
  const auto full = ev.initial_params(ChannelSubset::full(4), 5);
  const auto part = ev.initial_params(s, 5);
  CHECK(part.input_weights.middleCols(0, 9).isApprox(full.input_weights.middleCols(0, 9) *
                                                     std::sqrt(2.0)));
}

TEST_SUITE_END();
