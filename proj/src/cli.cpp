#include "chansel/cli.hpp"

#include "binary_io.hpp"
#include "chansel/error.hpp"
#include "chansel/evaluator.hpp"
#include "chansel/hash.hpp"
#include "chansel/version.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <set>
#include <thread>

namespace chansel {

using nlohmann::json;
namespace fs = std::filesystem;

std::vector<std::uint64_t> SearchSettings::seed_list() const {
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < seeds; ++i)
    out.push_back(base_seed + i);
  return out;
}

namespace {

void reject_unknown(const json &j, std::initializer_list<const char *> known,
                    const std::string &where) {
  if (!j.is_object())
    throw ConfigError(where + " must be a JSON object");
  std::set<std::string> allowed(known.begin(), known.end());
  for (const auto &[key, _] : j.items()) {
    if (!allowed.count(key))
      throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

json search_json(const SearchSettings &s, bool with_workers) {
  json j = {{"k", s.k},         {"k_top", s.k_top},
            {"stop_size", s.stop_size}, {"seeds", s.seeds},
            {"base_seed", s.base_seed}, {"metric", to_string(s.metric)},
            {"budget", s.budget}};
  if (with_workers)
    j["workers"] = s.workers;
  return j;
}

} // namespace

void to_json(json &j, const ExperimentConfig &cfg) {
  j = json{{"corpus", cfg.corpus},
           {"generator", cfg.generator},
           {"train", cfg.train},
           {"taps", cfg.taps},
           {"features", cfg.features},
           {"test_fraction", cfg.test_fraction},
           {"category_threshold", cfg.category_threshold},
           {"search", search_json(cfg.search, true)},
           {"output", cfg.output}};
  if (cfg.finetune_epochs)
    j["finetune_epochs"] = *cfg.finetune_epochs;
}

void from_json(const json &j, ExperimentConfig &cfg) {
  reject_unknown(j,
                 {"corpus", "generator", "train", "taps", "features", "test_fraction",
                  "category_threshold", "finetune_epochs", "search", "output"},
                 "config");
  ExperimentConfig d;
  cfg.corpus = j.value("corpus", d.corpus);
  cfg.generator = j.contains("generator") ? j.at("generator").get<GeneratorConfig>() : d.generator;
  cfg.train = j.contains("train") ? j.at("train").get<TrainConfig>() : d.train;
  cfg.taps = j.value("taps", d.taps);
  cfg.features = j.value("features", d.features);
  cfg.test_fraction = j.value("test_fraction", d.test_fraction);
  cfg.category_threshold = j.value("category_threshold", d.category_threshold);
  if (j.contains("finetune_epochs"))
    cfg.finetune_epochs = j.at("finetune_epochs").get<std::size_t>();
  cfg.output = j.value("output", d.output);
  cfg.search = d.search;
  if (j.contains("search")) {
    const json &s = j.at("search");
    reject_unknown(s, {"k", "k_top", "stop_size", "seeds", "base_seed", "workers", "metric", "budget"},
                   "search");
    cfg.search.k = s.value("k", d.search.k);
    cfg.search.k_top = s.value("k_top", d.search.k_top);
    cfg.search.stop_size = s.value("stop_size", d.search.stop_size);
    cfg.search.seeds = s.value("seeds", d.search.seeds);
    cfg.search.base_seed = s.value("base_seed", d.search.base_seed);
    cfg.search.workers = s.value("workers", d.search.workers);
    cfg.search.budget = s.value("budget", d.search.budget);
    if (s.contains("metric"))
      cfg.search.metric = parse_metric(s.at("metric").get<std::string>());
  }
}

std::string experiment_hash(const ExperimentConfig &cfg) {
  json j = cfg;
  j.erase("output");
  j.erase("corpus");
  j["search"] = search_json(cfg.search, false);
  return hash_text(j.dump());
}

ChannelSubset finetune_preset(std::string_view name, std::size_t channels) {
  const char *label = nullptr;
  if (name == "7")
    label = "1234578";
  else if (name == "6")
    label = "123458";
  else if (name == "5")
    label = "12345";
  else if (name == "4")
    label = "1356";
  else
    throw ConfigError("unknown preset '" + std::string(name) + "' (expected 7, 6, 5 or 4)");
  return parse_subset(label, channels);
}

namespace {

struct Context {
  ExperimentConfig cfg;
  std::ostream &out;
};

struct Provenance {
  std::string config;
  std::string corpus;
  std::string seeds;

  std::string csv_line() const {
    return std::string("# chansel ") + kToolVersion + " config=" + config + " corpus=" + corpus +
           " seed=" + seeds + "\n";
  }
  json as_json() const {
    return {{"tool_version", kToolVersion}, {"config_hash", config}, {"corpus_hash", corpus},
            {"seed", seeds}};
  }
};

std::string join_seeds(const std::vector<std::uint64_t> &seeds) {
  std::string s;
  for (std::size_t i = 0; i < seeds.size(); ++i)
    s += (i ? "," : "") + std::to_string(seeds[i]);
  return s;
}

fs::path output_dir(const ExperimentConfig &cfg) {
  if (cfg.output.empty())
    throw ConfigError("an output directory is required (--out or \"output\")");
  fs::path dir(cfg.output);
  fs::create_directories(dir);
  return dir;
}

void write_csv(const fs::path &path, const Provenance &prov, const std::string &body) {
  detail::write_text(path, prov.csv_line() + body);
}

void write_json(const fs::path &path, const Provenance &prov, json body) {
  body["provenance"] = prov.as_json();
  detail::write_text(path, body.dump(2) + "\n");
}

Corpus load_corpus(const ExperimentConfig &cfg) {
  if (!cfg.corpus.empty()) {
    if (!fs::exists(fs::path(cfg.corpus) / "manifest.json"))
      throw IoError("no corpus at " + cfg.corpus);
    return read_corpus(cfg.corpus);
  }
  return generate(cfg.generator);
}

ReferenceEvaluatorOptions evaluator_options(const ExperimentConfig &cfg) {
  ReferenceEvaluatorOptions o;
  o.train = cfg.train;
  o.taps = cfg.taps;
  o.features = cfg.features;
  o.category_threshold = cfg.category_threshold;
  return o;
}

std::size_t resolve_workers(std::size_t requested) {
  if (requested > 0)
    return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

fs::path cache_path(const ExperimentConfig &cfg, const std::string &cache_dir_flag) {
  fs::path dir;
  if (!cache_dir_flag.empty())
    dir = cache_dir_flag;
  else if (const char *env = std::getenv("CHANSEL_CACHE_DIR"); env && *env)
    dir = env;
  else
    dir = fs::path(cfg.output) / "cache";
  return dir / "results.jsonl";
}

// Shared state for the search subcommands.
struct SearchRun {
  Corpus corpus;
  std::unique_ptr<ReferenceEvaluator> evaluator;
  std::unique_ptr<ResultCache> cache;
  SearchOptions options;
  Provenance prov;
  fs::path dir;
};

SearchRun prepare_search(const ExperimentConfig &cfg, const std::string &init_model,
                         const std::string &cache_dir) {
  SearchRun run;
  run.dir = output_dir(cfg);
  run.corpus = load_corpus(cfg);
  std::optional<ModelParams> init;
  if (!init_model.empty())
    init = read_model(init_model);
  run.evaluator = std::make_unique<ReferenceEvaluator>(split_corpus(run.corpus, cfg.test_fraction),
                                                       evaluator_options(cfg), std::move(init));
  run.cache = std::make_unique<ResultCache>(cache_path(cfg, cache_dir));
  run.options.seeds = cfg.search.seed_list();
  run.options.metric = cfg.search.metric;
  run.options.workers = resolve_workers(cfg.search.workers);
  run.options.budget = cfg.search.budget;
  run.options.cache = run.cache.get();
  run.prov = {experiment_hash(cfg) + (init ? "+" + params_hash(*init) : std::string()),
              corpus_hash(run.corpus), join_seeds(run.options.seeds)};
  return run;
}

int cmd_gen_data(Context &ctx, bool force) {
  const fs::path dir = output_dir(ctx.cfg);
  if (fs::exists(dir / "manifest.json") && !force)
    throw IoError(dir.string() + " already holds a corpus; pass --force to overwrite");
  Corpus corpus = generate(ctx.cfg.generator);
  write_corpus(corpus, dir, ctx.cfg.generator);
  ctx.out << "wrote " << corpus.utterances.size() << " utterances (" << corpus.frames()
          << " frames) to " << dir.string() << " corpus=" << corpus_hash(corpus) << "\n";
  return kExitOk;
}

int cmd_pretrain(Context &ctx) {
  const ExperimentConfig &cfg = ctx.cfg;
  const fs::path dir = output_dir(cfg);
  Corpus corpus = load_corpus(cfg);
  ReferenceEvaluator ev(split_corpus(corpus, cfg.test_fraction), evaluator_options(cfg));
  const ChannelSubset full = ChannelSubset::full(ev.channels());
  auto fitted = ev.fit(full, cfg.train.seed);
  EvalRecord rec = ev.score(fitted.params, full, cfg.train.seed);
  Provenance prov{experiment_hash(cfg), corpus_hash(corpus), std::to_string(cfg.train.seed)};

  write_model(fitted.params, dir / "model.json");
  std::string log = "epoch,loss,mean_retained\n";
  for (std::size_t e = 0; e < fitted.log.epoch_loss.size(); ++e) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%zu,%.9f,%.6f\n", e + 1, fitted.log.epoch_loss[e],
                  fitted.log.mean_retained[e]);
    log += buf;
  }
  write_csv(dir / "train_log.csv", prov, log);
  rec.wall_time_s = 0.0;
  write_json(dir / "eval.json", prov, json{{"record", rec}, {"params_hash", params_hash(fitted.params)}});
  ctx.out << "pretrained " << full.size() << "-channel model: wer=" << format_percent(rec.wer)
          << "% per=" << format_percent(rec.per_total) << "% params=" << params_hash(fitted.params)
          << "\n";
  return kExitOk;
}

std::string comparison_row(const std::string &run, const EvalRecord &r, std::size_t epochs,
                           double dropout) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s,%s,%zu,%zu,%.4f,%.6f,%.6f\n", run.c_str(),
                r.subset.label().c_str(), r.subset.size(), epochs, dropout, r.wer, r.per_total);
  return buf;
}

int cmd_finetune(Context &ctx, const std::string &subset_label, const std::string &preset,
                 const std::string &init_model, bool from_scratch, bool compare) {
  const ExperimentConfig &cfg = ctx.cfg;
  if (subset_label.empty() == preset.empty())
    throw ConfigError("pass exactly one of --subset or --preset");
  if (!from_scratch && init_model.empty())
    throw ConfigError("--init is required unless --from-scratch is given");
  const fs::path dir = output_dir(cfg);
  Corpus corpus = load_corpus(cfg);
  const ChannelSubset subset = preset.empty() ? parse_subset(subset_label, corpus.channels())
                                              : finetune_preset(preset, corpus.channels());
  const CorpusSplit split = split_corpus(corpus, cfg.test_fraction);
  const std::uint64_t seed = cfg.train.seed;

  std::string rows = "run,subset,channels,epochs,dropout,wer,per_total\n";
  std::optional<ModelParams> init;
  if (!init_model.empty())
    init = read_model(init_model);

  auto scratch_run = [&] {
    ReferenceEvaluator ev(split, evaluator_options(cfg));
    auto fitted = ev.fit(subset, seed);
    return std::make_pair(std::move(fitted.params), ev.score(fitted.params, subset, seed));
  };

  ModelParams model;
  EvalRecord rec;
  std::string run_name;
  if (from_scratch) {
    std::tie(model, rec) = scratch_run();
    run_name = "scratch";
    rows += comparison_row(run_name, rec, cfg.train.epochs, cfg.train.dropout);
  } else {
    auto opts = evaluator_options(cfg);
    opts.train.epochs = cfg.resolved_finetune_epochs();
    ReferenceEvaluator ev(split, opts, init);
    auto fitted = ev.fit(subset, seed);
    fitted.params.provenance = slice_input_channels(*init, subset).provenance;
    rec = ev.score(fitted.params, subset, seed);
    model = std::move(fitted.params);
    run_name = "finetuned";
    rows += comparison_row(run_name, rec, opts.train.epochs, cfg.train.dropout);
    if (compare) {
      auto [scratch_model, scratch_rec] = scratch_run();
      rows += comparison_row("scratch", scratch_rec, cfg.train.epochs, cfg.train.dropout);
    }
  }
  Provenance prov{experiment_hash(cfg) + (init ? "+" + params_hash(*init) : std::string()),
                  corpus_hash(corpus), std::to_string(seed)};
  write_model(model, dir / "model.json");
  rec.wall_time_s = 0.0;
  write_json(dir / "eval.json", prov,
             json{{"run", run_name}, {"record", rec}, {"params_hash", params_hash(model)}});
  write_csv(dir / "comparison.csv", prov, rows);
  ctx.out << run_name << " " << subset.label() << ": wer=" << format_percent(rec.wer)
          << "% per=" << format_percent(rec.per_total) << "%\n";
  return kExitOk;
}

int cmd_backward_elim(Context &ctx, const std::string &init_model, const std::string &cache_dir) {
  SearchRun run = prepare_search(ctx.cfg, init_model, cache_dir);
  SubsetScorer scorer(*run.evaluator, run.options);
  auto trace = backward_elimination(scorer, run.evaluator->channels(), ctx.cfg.search.stop_size);
  write_json(run.dir / "trace.json", run.prov, trace_json(trace));
  write_csv(run.dir / "points.csv", run.prov, trace_points_csv(trace));
  write_csv(run.dir / "summary.csv", run.prov, trace_summary_csv(trace));
  ctx.out << "elimination order:";
  for (auto c : trace.elimination_order())
    ctx.out << " " << c + 1;
  ctx.out << " (" << scorer.evaluator_calls() << " fresh evaluations)\n";
  return kExitOk;
}

void write_sweep_reports(const fs::path &dir, const Provenance &prov, const SweepResult &sweep,
                         std::size_t k_top) {
  write_csv(dir / "channel_average.csv", prov,
            channel_average_csv(channel_average_metric(sweep), sweep.metric));
  write_csv(dir / "top_k.csv", prov,
            top_k_csv(sweep, std::min(k_top, sweep.records.size())));
}

int cmd_exhaustive(Context &ctx, const std::string &init_model, const std::string &cache_dir) {
  SearchRun run = prepare_search(ctx.cfg, init_model, cache_dir);
  SubsetScorer scorer(*run.evaluator, run.options);
  auto sweep = exhaustive_sweep(scorer, run.evaluator->channels(), ctx.cfg.search.k);
  write_csv(run.dir / "sweep.csv", run.prov, sweep_csv(sweep));
  write_sweep_reports(run.dir, run.prov, sweep, ctx.cfg.search.k_top);
  ctx.out << sweep.records.size() << " subsets of size " << sweep.k << ", best "
          << sweep.records.front().subset.label() << " ("
          << format_percent(sweep.records.front().metric(sweep.metric)) << "%), "
          << scorer.evaluator_calls() << " fresh evaluations\n";
  return kExitOk;
}

int cmd_ablate7(Context &ctx, const std::string &init_model, const std::string &cache_dir) {
  SearchRun run = prepare_search(ctx.cfg, init_model, cache_dir);
  SubsetScorer scorer(*run.evaluator, run.options);
  auto result = seven_channel_ablation(scorer, run.evaluator->channels());
  const fs::path reports = run.dir / "reports";
  fs::create_directories(reports);
  write_csv(reports / "baseline.csv", run.prov, category_report_csv(result.baseline.per_category));
  for (const auto &[c, r] : result.removed)
    write_csv(reports / ("without_ch" + std::to_string(c + 1) + ".csv"), run.prov,
              category_report_csv(r.per_category));
  write_csv(run.dir / "worst_channel.csv", run.prov, worst_channel_csv(result.worst));
  ctx.out << result.removed.size() << " ablation reports, worst-channel table with "
          << result.worst.size() << " rows\n";
  return kExitOk;
}

int cmd_report(Context &ctx, const std::string &sweep_path, std::size_t channels) {
  const fs::path dir = output_dir(ctx.cfg);
  const std::string text = detail::read_text(sweep_path);
  SweepResult sweep = parse_sweep_csv(text, channels, ctx.cfg.search.metric);
  Provenance prov{"unknown", "unknown", "unknown"};
  // Carry the sweep's own provenance through when present.
  if (text.rfind("# chansel ", 0) == 0) {
    const std::string first = text.substr(0, text.find('\n'));
    auto field = [&](const std::string &name) {
      const auto at = first.find(" " + name + "=");
      if (at == std::string::npos)
        return std::string("unknown");
      const auto start = at + name.size() + 2;
      return first.substr(start, first.find(' ', start) - start);
    };
    prov = {field("config"), field("corpus"), field("seed")};
  }
  write_sweep_reports(dir, prov, sweep, ctx.cfg.search.k_top);
  ctx.out << "reported " << sweep.records.size() << " subsets\n";
  return kExitOk;
}

ExperimentConfig load_config(const std::string &path) {
  if (path.empty())
    return {};
  json j;
  try {
    j = json::parse(detail::read_text(path));
  } catch (const json::parse_error &e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return j.get<ExperimentConfig>();
}

} // namespace

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  CLI::App app{"Channel subset search for multichannel sequence recognition"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  // Flags shared by every subcommand; each overrides the config file when given.
  struct Flags {
    std::string config, out_dir, corpus, cache_dir, init;
    std::optional<std::size_t> workers, seeds, epochs, batch_size, utterances, k, k_top, stop,
        finetune_epochs, channels_gen, taps, features;
    std::optional<std::uint64_t> seed, base_seed;
    std::optional<double> dropout, lr, noise, test_fraction;
    std::optional<std::string> metric;
  } f;
  bool force = false, from_scratch = false, compare = false;
  std::string subset, preset, sweep_path;
  std::size_t report_channels = 8;

  auto common = [&](CLI::App *sub) {
    sub->add_option("--config", f.config, "JSON experiment config");
    sub->add_option("--out", f.out_dir, "Output directory");
    sub->add_option("--workers", f.workers, "Worker threads (default: logical CPUs)");
    sub->add_option("--seed", f.seed, "Generator / training seed");
  };
  auto data_flags = [&](CLI::App *sub) {
    sub->add_option("--corpus", f.corpus, "Corpus directory (default: generate in memory)");
    sub->add_option("--test-fraction", f.test_fraction, "Held-out fraction of utterances");
    sub->add_option("--epochs", f.epochs, "Training epochs");
    sub->add_option("--batch-size", f.batch_size, "Mini-batch size in frames");
    sub->add_option("--lr", f.lr, "Learning rate");
    sub->add_option("--dropout", f.dropout, "Channel dropout probability (0, 0.125, 0.25 presets)");
    sub->add_option("--taps", f.taps, "Window taps per channel");
    sub->add_option("--features", f.features, "Hidden features");
  };
  auto search_flags = [&](CLI::App *sub) {
    sub->add_option("--seeds", f.seeds, "Training seeds averaged per subset");
    sub->add_option("--base-seed", f.base_seed, "First training seed");
    sub->add_option("--metric", f.metric, "Ranking metric: wer or per");
    sub->add_option("--init", f.init, "Start every subset from a slice of this model");
    sub->add_option("--cache-dir", f.cache_dir, "Result cache directory");
  };

  auto *gen = app.add_subcommand("gen-data", "Generate a synthetic corpus");
  common(gen);
  gen->add_option("--utterances", f.utterances, "Utterance count");
  gen->add_option("--channels", f.channels_gen, "Channel count");
  gen->add_option("--noise", f.noise, "Noise standard deviation");
  gen->add_flag("--force", force, "Overwrite an existing corpus");

  auto *pre = app.add_subcommand("pretrain", "Train the full-channel model");
  common(pre);
  data_flags(pre);

  auto *ft = app.add_subcommand("finetune", "Fine-tune a sliced model on a channel subset");
  common(ft);
  data_flags(ft);
  ft->add_option("--subset", subset, "Channel subset label, e.g. 1356 or 1,3,5,6");
  ft->add_option("--preset", preset, "Named subset: 7, 6, 5 or 4")
      ->check(CLI::IsMember({"7", "6", "5", "4"}));
  ft->add_option("--init", f.init, "Pretrained full-channel model");
  ft->add_option("--finetune-epochs", f.finetune_epochs, "Fine-tuning epochs (default: half)");
  ft->add_flag("--from-scratch", from_scratch, "Train the subset model from a fresh init");
  ft->add_flag("--compare", compare, "Also train from scratch and emit both rows");

  auto *be = app.add_subcommand("backward-elim", "Greedy backward channel elimination");
  common(be);
  data_flags(be);
  search_flags(be);
  be->add_option("--stop", f.stop, "Stop at this many channels");

  auto *ex = app.add_subcommand("exhaustive", "Evaluate every k-channel subset");
  common(ex);
  data_flags(ex);
  search_flags(ex);
  ex->add_option("--k", f.k, "Subset size");
  ex->add_option("--top", f.k_top, "Top subsets counted in the frequency table");

  auto *ab = app.add_subcommand("ablate7", "Remove each channel once and compare categories");
  common(ab);
  data_flags(ab);
  search_flags(ab);

  auto *rep = app.add_subcommand("report", "Rebuild ranking tables from a sweep CSV");
  common(rep);
  rep->add_option("--sweep", sweep_path, "Sweep CSV")->required();
  rep->add_option("--channels", report_channels, "Channel count of the sweep");
  rep->add_option("--top", f.k_top, "Top subsets counted in the frequency table");
  rep->add_option("--metric", f.metric, "Metric the sweep is ranked by");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    ExperimentConfig cfg = load_config(f.config);
    if (!f.out_dir.empty())
      cfg.output = f.out_dir;
    if (!f.corpus.empty())
      cfg.corpus = f.corpus;
    if (f.workers)
      cfg.search.workers = *f.workers;
    if (f.seed) {
      cfg.generator.seed = *f.seed;
      cfg.train.seed = *f.seed;
    }
    if (f.utterances)
      cfg.generator.utterances = *f.utterances;
    if (f.channels_gen && *f.channels_gen != cfg.generator.channels) {
      cfg.generator.channels = *f.channels_gen;
      cfg.generator.weights.assign(*f.channels_gen, 1.0);
    }
    if (f.noise)
      cfg.generator.noise_std = *f.noise;
    if (f.test_fraction)
      cfg.test_fraction = *f.test_fraction;
    if (f.epochs)
      cfg.train.epochs = *f.epochs;
    if (f.batch_size)
      cfg.train.batch_size = *f.batch_size;
    if (f.lr)
      cfg.train.learning_rate = *f.lr;
    if (f.dropout)
      cfg.train.dropout = *f.dropout;
    if (f.taps)
      cfg.taps = *f.taps;
    if (f.features)
      cfg.features = *f.features;
    if (f.finetune_epochs)
      cfg.finetune_epochs = *f.finetune_epochs;
    if (f.seeds)
      cfg.search.seeds = *f.seeds;
    if (f.base_seed)
      cfg.search.base_seed = *f.base_seed;
    if (f.metric)
      cfg.search.metric = parse_metric(*f.metric);
    if (f.k)
      cfg.search.k = *f.k;
    if (f.k_top)
      cfg.search.k_top = *f.k_top;
    if (f.stop)
      cfg.search.stop_size = *f.stop;
    if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0))
      throw ConfigError("test fraction must lie in (0, 1)");
    cfg.train.validate();

    Context ctx{std::move(cfg), out};
    if (gen->parsed())
      return cmd_gen_data(ctx, force);
    if (pre->parsed())
      return cmd_pretrain(ctx);
    if (ft->parsed())
      return cmd_finetune(ctx, subset, preset, f.init, from_scratch, compare);
    if (be->parsed())
      return cmd_backward_elim(ctx, f.init, f.cache_dir);
    if (ex->parsed())
      return cmd_exhaustive(ctx, f.init, f.cache_dir);
    if (ab->parsed())
      return cmd_ablate7(ctx, f.init, f.cache_dir);
    if (rep->parsed())
      return cmd_report(ctx, sweep_path, report_channels);
    return kExitUsage;
  } catch (const DivergenceError &e) {
    err << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const EvaluationError &e) {
    err << "error: " << e.what() << "\n";
    return e.diverged() ? kExitDivergence : kExitData;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  std::vector<const char *> argv;
  argv.push_back("chansel");
  for (const auto &a : args)
    argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

} // namespace chansel
