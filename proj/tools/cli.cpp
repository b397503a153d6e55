#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nudge/dataio.hpp"
#include "nudge/ensemble.hpp"
#include "nudge/errors.hpp"
#include "nudge/metrics.hpp"
#include "nudge/serialization.hpp"
#include "nudge/simulation.hpp"

#ifndef NUDGEBANDIT_VERSION
#define NUDGEBANDIT_VERSION "0.0.0"
#endif

namespace nudge::cli {
namespace {

namespace fs = std::filesystem;

constexpr const char* kSeedEnv = "NUDGEBANDIT_SEED";

std::uint64_t parse_seed(const std::string& text, const std::string& source) {
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    throw ConfigError(source + " must be an unsigned 64-bit integer, got '" + text + "'");
  }
  return value;
}

/// --seed beats NUDGEBANDIT_SEED, which beats the config file.
std::uint64_t effective_seed(const std::optional<std::uint64_t>& flag, std::uint64_t fallback) {
  if (flag) {
    return *flag;
  }
  if (const char* env = std::getenv(kSeedEnv); env != nullptr && *env != '\0') {
    return parse_seed(env, kSeedEnv);
  }
  return fallback;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw std::runtime_error("cannot create output directory '" + dir.string() + "': " + ec.message());
  }
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write '" + path.string() + "'");
  }
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open input file '" + path.string() + "'");
  }
  return in;
}

void write_json(const fs::path& path, const Json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

/// Re-throws CSV parse errors with the file name prefixed.
template <class F>
auto read_file(const fs::path& path, F&& reader) {
  auto in = open_in(path);
  try {
    return reader(in);
  } catch (const DataIntegrityError& e) {
    throw DataIntegrityError(path.string() + ": " + e.what());
  }
}

Json manifest(const std::string& command, const std::string& config_path, std::uint64_t seed,
              const fs::path& output_dir, Json args, std::vector<std::string> outputs) {
  return Json{{"command", command},
              {"config_path", config_path},
              {"seed", seed},
              {"output_dir", output_dir.string()},
              {"tool_version", NUDGEBANDIT_VERSION},
              {"args", std::move(args)},
              {"outputs", std::move(outputs)}};
}

// ---- bandit ---------------------------------------------------------------

struct BanditOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::uint64_t runs = 1;
};

int bandit_run(const BanditOptions& opt, std::ostream& out) {
  BanditConfigFile cfg = load_bandit_config(opt.config);
  cfg.experiment.seed = effective_seed(opt.seed, cfg.experiment.seed);
  const ExperimentResult result = run_experiment(cfg.arms, cfg.experiment);

  const fs::path dir(opt.out);
  ensure_dir(dir);
  {
    auto csv = open_out(dir / "trajectory.csv");
    write_trajectory_csv(csv, result);
  }
  write_json(dir / "summary.json", summary_json(result, cfg.arms, cfg.experiment));
  write_json(dir / "manifest.json",
             manifest("bandit run", opt.config, cfg.experiment.seed, dir, Json::object(),
                      {"trajectory.csv", "summary.json"}));

  out << "winner " << result.winner_id << " after " << result.iterations_run << " iterations ("
      << (result.terminated_early ? "value-remaining stop" : "iteration cap") << ")\n";
  for (std::size_t i = 0; i < result.arm_ids.size(); ++i) {
    out << "  " << result.arm_ids[i] << ": traffic " << result.traffic[i] << ", clicks " << result.clicks[i]
        << '\n';
  }
  return kSuccess;
}

int bandit_replicate(const BanditOptions& opt, std::ostream& out) {
  if (opt.runs < 1) {
    throw InvalidArgument("--runs must be at least 1");
  }
  BanditConfigFile cfg = load_bandit_config(opt.config);
  cfg.experiment.seed = effective_seed(opt.seed, cfg.experiment.seed);
  const ReplicationSummary summary =
      run_replications(cfg.arms, cfg.experiment, opt.runs, cfg.experiment.seed);

  const fs::path dir(opt.out);
  ensure_dir(dir);
  write_json(dir / "replicate_summary.json", summary_json(summary, cfg.arms, cfg.experiment));
  write_json(dir / "manifest.json",
             manifest("bandit replicate", opt.config, cfg.experiment.seed, dir, Json{{"runs", opt.runs}},
                      {"replicate_summary.json"}));

  out << summary.n_runs << " runs, " << summary.terminated_early_count() << " stopped early\n";
  for (std::size_t i = 0; i < summary.arm_ids.size(); ++i) {
    out << "  " << summary.arm_ids[i] << ": wins " << summary.win_counts[i] << ", mean traffic share "
        << summary.mean_traffic_share(i) << '\n';
  }
  return kSuccess;
}

// ---- data -----------------------------------------------------------------

struct DataPrepOptions {
  std::string input;
  std::string out = "out";
  double test_fraction = 0.2;
  std::uint64_t seed = 42;
};

int data_prep(const DataPrepOptions& opt, std::ostream& out) {
  const auto examples = read_file(opt.input, [](std::istream& in) { return read_examples_csv(in); });
  const auto balanced = downsample_balance(examples, opt.seed);
  const auto split_seed = derive_seed(opt.seed, 1);
  const SplitDataset split = stratified_split(balanced, opt.test_fraction, split_seed);

  const fs::path dir(opt.out);
  ensure_dir(dir);
  for (const auto& [name, rows] : {std::pair{"balanced.csv", &balanced}, std::pair{"train.csv", &split.train},
                                   std::pair{"test.csv", &split.test}}) {
    auto file = open_out(dir / name);
    write_examples_csv(file, *rows);
  }
  write_json(dir / "manifest.json",
             manifest("data prep", opt.input, opt.seed, dir,
                      Json{{"test_fraction", opt.test_fraction}, {"split_seed", split_seed}},
                      {"balanced.csv", "train.csv", "test.csv"}));

  const auto counts = class_counts(balanced);
  out << "read " << examples.size() << " rows; balanced to " << counts[0] << " per class; train "
      << split.train.size() << ", test " << split.test.size() << '\n';
  return kSuccess;
}

// ---- ensemble -------------------------------------------------------------

struct EnsembleOptions {
  std::string truth;
  std::vector<std::string> preds;
  std::string mode = "stack1";
  std::string out = "report.json";
  std::string model_out;
  std::string features = "onehot";
  std::size_t tiebreaker = 0;
  double test_fraction = 0.2;
  std::uint64_t seed = 42;
  MetaHyperparams hyper;
};

std::string describe_ids(const std::vector<std::string>& ids) {
  std::ostringstream msg;
  const std::size_t shown = std::min<std::size_t>(ids.size(), 10);
  for (std::size_t i = 0; i < shown; ++i) {
    msg << (i ? ", " : "") << ids[i];
  }
  if (ids.size() > shown) {
    msg << ", ... (" << ids.size() << " total)";
  }
  return msg.str();
}

int ensemble_eval(const EnsembleOptions& opt, std::ostream& out) {
  if (opt.preds.size() != kNumBaseModels) {
    throw InvalidArgument("exactly 3 --preds files are required");
  }
  if (opt.tiebreaker >= kNumBaseModels) {
    throw InvalidArgument("--tiebreaker must be 0, 1 or 2");
  }
  const StackMode mode = opt.mode == "stack2" ? StackMode::stack2 : StackMode::stack1;
  const FeatureEncoding encoding =
      opt.features == "proba" ? FeatureEncoding::probabilities : FeatureEncoding::one_hot;

  const auto examples = read_file(opt.truth, [](std::istream& in) { return read_examples_csv(in); });
  std::set<std::string> truth_ids;
  for (const auto& ex : examples) {
    truth_ids.insert(ex.example_id);
  }

  std::vector<PredictionRecord> records;
  std::vector<std::string> model_ids;
  std::set<std::string> offending;
  for (const auto& path : opt.preds) {
    auto file_records = read_file(path, [](std::istream& in) { return read_predictions_csv(in); });
    if (file_records.empty()) {
      throw DataIntegrityError(path + ": no predictions");
    }
    const std::string model_id = file_records.front().model_id;
    if (std::find(model_ids.begin(), model_ids.end(), model_id) != model_ids.end()) {
      throw DataIntegrityError(path + ": model id '" + model_id + "' appears in more than one file");
    }
    std::set<std::string> ids;
    for (const auto& rec : file_records) {
      if (rec.model_id != model_id) {
        throw DataIntegrityError(path + ": mixes model ids '" + model_id + "' and '" + rec.model_id + "'");
      }
      ids.insert(rec.example_id);
    }
    std::set_symmetric_difference(ids.begin(), ids.end(), truth_ids.begin(), truth_ids.end(),
                                  std::inserter(offending, offending.end()));
    model_ids.push_back(model_id);
    records.insert(records.end(), file_records.begin(), file_records.end());
  }
  if (!offending.empty()) {
    throw DataIntegrityError("prediction files and truth cover different example ids: " +
                             describe_ids({offending.begin(), offending.end()}));
  }
  const BasePredictions base = BasePredictions::from_records(records, model_ids);

  const SplitDataset split = stratified_split(examples, opt.test_fraction, opt.seed);
  const StackingPartitions partitions = stacking_split(split.train, opt.seed);

  auto ids_of = [](const std::vector<LabeledExample>& rows) {
    std::vector<std::string> ids;
    for (const auto& ex : rows) ids.push_back(ex.example_id);
    return ids;
  };
  auto labels_of = [](const std::vector<LabeledExample>& rows) {
    std::vector<SentimentLabel> labels;
    for (const auto& ex : rows) labels.push_back(ex.label);
    return labels;
  };
  const auto test_ids = ids_of(split.test);
  const auto test_truth = labels_of(split.test);

  StackOptions stack_opts{opt.tiebreaker, encoding};
  std::optional<MetaLearnerModel> model;
  if (mode == StackMode::stack2) {
    const auto meta_ids = ids_of(partitions.meta_train);
    model = train_meta_learner(stack_features(base, meta_ids, encoding), labels_of(partitions.meta_train),
                               opt.hyper);
  }
  const auto predicted = stack_predict(mode, base, test_ids, model ? &*model : nullptr, stack_opts);
  const EvalReport report = evaluate(test_truth, predicted);

  Json j = to_json(report);
  j["mode"] = mode == StackMode::stack2 ? "STACK2" : "STACK1";
  j["test_examples"] = test_ids.size();
  j["meta_train_examples"] = partitions.meta_train.size();
  Json bases = Json::object();
  for (std::size_t m = 0; m < kNumBaseModels; ++m) {
    std::vector<SentimentLabel> single;
    for (const auto& id : test_ids) {
      single.push_back(base.labels(id)[m]);
    }
    bases[model_ids[m]] = to_json(evaluate(test_truth, single));
  }
  j["base_models"] = std::move(bases);
  if (model) {
    j["meta_learner"] = to_json(*model);
  }

  const fs::path out_path(opt.out);
  if (out_path.has_parent_path()) {
    ensure_dir(out_path.parent_path());
  }
  write_json(out_path, j);
  std::vector<std::string> outputs = {out_path.filename().string()};
  if (model && !opt.model_out.empty()) {
    write_json(opt.model_out, to_json(*model));
    outputs.push_back(opt.model_out);
  }
  Json args{{"truth", opt.truth},         {"preds", opt.preds},        {"mode", opt.mode},
            {"features", opt.features},   {"tiebreaker", opt.tiebreaker}, {"test_fraction", opt.test_fraction},
            {"learning_rate", opt.hyper.learning_rate}, {"epochs", opt.hyper.epochs},
            {"l2_penalty", opt.hyper.l2_penalty}};
  fs::path manifest_path = out_path;
  manifest_path += ".manifest.json";
  write_json(manifest_path, manifest("ensemble eval", opt.truth, opt.seed,
                                     out_path.has_parent_path() ? out_path.parent_path() : fs::path("."),
                                     std::move(args), std::move(outputs)));

  out << j["mode"].get<std::string>() << ": accuracy " << report.accuracy << ", f1 " << report.f1 << " on "
      << test_ids.size() << " test examples\n";
  return kSuccess;
}

// ---- synth ----------------------------------------------------------------

struct SynthOptions {
  std::string out = "synth";
  std::vector<std::size_t> counts = {1000, 1000, 1000};
  std::vector<double> accuracies = {0.9, 0.6, 0.5};
  std::uint64_t seed = 42;
};

int synth_gen(const SynthOptions& opt, std::ostream& out) {
  if (opt.counts.size() != kNumClasses) {
    throw InvalidArgument("--counts needs 3 values (POSITIVE,NEGATIVE,NEUTRAL)");
  }
  const ClassCounts counts = {opt.counts[0], opt.counts[1], opt.counts[2]};
  const auto reviews = generate_synthetic_reviews(counts, opt.seed);
  std::vector<SyntheticModelSpec> specs;
  for (std::size_t m = 0; m < opt.accuracies.size(); ++m) {
    specs.push_back(SyntheticModelSpec{"base" + std::to_string(m + 1), opt.accuracies[m]});
  }
  const auto predictions = generate_synthetic_predictions(reviews, specs, opt.seed);

  const fs::path dir(opt.out);
  ensure_dir(dir);
  std::vector<std::string> outputs = {"reviews.csv"};
  {
    auto file = open_out(dir / "reviews.csv");
    write_examples_csv(file, reviews);
  }
  for (const auto& spec : specs) {
    std::vector<PredictionRecord> mine;
    std::copy_if(predictions.begin(), predictions.end(), std::back_inserter(mine),
                 [&](const PredictionRecord& r) { return r.model_id == spec.model_id; });
    const std::string name = "preds_" + spec.model_id + ".csv";
    auto file = open_out(dir / name);
    write_predictions_csv(file, mine);
    outputs.push_back(name);
  }
  write_json(dir / "manifest.json",
             manifest("synth gen", "", opt.seed, dir, Json{{"counts", opt.counts}, {"accuracies", opt.accuracies}},
                      outputs));
  out << "wrote " << reviews.size() << " reviews and " << specs.size() << " prediction files to " << dir.string()
      << '\n';
  return kSuccess;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Thompson-sampling nudge experiments and stacked sentiment ensembles", "nudgebandit"};
  app.set_version_flag("--version", NUDGEBANDIT_VERSION);
  app.require_subcommand(1);

  BanditOptions bandit_opts;
  std::optional<std::uint64_t> seed_flag;
  auto* bandit = app.add_subcommand("bandit", "Simulated Thompson-sampling experiments")->require_subcommand(1);
  auto* bandit_run_cmd = bandit->add_subcommand("run", "Run one experiment; writes trajectory and summary");
  auto* bandit_rep_cmd = bandit->add_subcommand("replicate", "Run seeded replications; writes aggregate summary");
  for (auto* cmd : {bandit_run_cmd, bandit_rep_cmd}) {
    cmd->add_option("--config", bandit_opts.config, "TOML experiment file")->required();
    cmd->add_option("--seed", seed_flag, "Override the config seed");
    cmd->add_option("--out", bandit_opts.out, "Output directory");
  }
  bandit_rep_cmd->add_option("--runs", bandit_opts.runs, "Number of replications")->required();

  DataPrepOptions prep_opts;
  auto* data = app.add_subcommand("data", "Dataset preparation")->require_subcommand(1);
  auto* prep = data->add_subcommand("prep", "Label, balance by down-sampling, stratified split");
  prep->add_option("--input,input", prep_opts.input, "Dataset CSV")->required();
  prep->add_option("--out", prep_opts.out, "Output directory");
  prep->add_option("--test-fraction", prep_opts.test_fraction, "Test fraction in (0, 1)");
  prep->add_option("--seed", prep_opts.seed, "Sampling seed");

  EnsembleOptions ens_opts;
  auto* ensemble = app.add_subcommand("ensemble", "Stacked ensembles over base predictions")->require_subcommand(1);
  auto* eval = ensemble->add_subcommand("eval", "Evaluate STACK1 or STACK2 on the test split");
  eval->add_option("--truth", ens_opts.truth, "Labelled dataset CSV")->required();
  eval->add_option("--preds", ens_opts.preds, "Prediction CSV (repeat 3 times; first is the tiebreaker default)")
      ->required();
  eval->add_option("--mode", ens_opts.mode, "stack1 or stack2")
      ->transform(CLI::IsMember({"stack1", "stack2"}, CLI::ignore_case));
  eval->add_option("--out", ens_opts.out, "Report JSON path");
  eval->add_option("--model-out", ens_opts.model_out, "Write the trained meta-learner JSON here");
  eval->add_option("--features", ens_opts.features, "onehot or proba")
      ->transform(CLI::IsMember({"onehot", "proba"}, CLI::ignore_case));
  eval->add_option("--tiebreaker", ens_opts.tiebreaker, "Model position used when all three disagree");
  eval->add_option("--test-fraction", ens_opts.test_fraction, "Test fraction in (0, 1)");
  eval->add_option("--seed", ens_opts.seed, "Split seed");
  eval->add_option("--learning-rate", ens_opts.hyper.learning_rate, "Meta-learner learning rate");
  eval->add_option("--epochs", ens_opts.hyper.epochs, "Meta-learner epochs");
  eval->add_option("--l2", ens_opts.hyper.l2_penalty, "Meta-learner L2 penalty");

  SynthOptions synth_opts;
  auto* synth = app.add_subcommand("synth", "Synthetic data")->require_subcommand(1);
  auto* gen = synth->add_subcommand("gen", "Synthetic reviews plus synthetic base-model predictions");
  gen->add_option("--out", synth_opts.out, "Output directory");
  gen->add_option("--counts", synth_opts.counts, "Per-class counts POSITIVE,NEGATIVE,NEUTRAL")->delimiter(',');
  gen->add_option("--accuracies", synth_opts.accuracies, "Per-model accuracies")->delimiter(',');
  gen->add_option("--seed", synth_opts.seed, "Generation seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsageError;
  }

  try {
    bandit_opts.seed = seed_flag;
    if (*bandit_run_cmd) return bandit_run(bandit_opts, out);
    if (*bandit_rep_cmd) return bandit_replicate(bandit_opts, out);
    if (*prep) return data_prep(prep_opts, out);
    if (*eval) return ensemble_eval(ens_opts, out);
    if (*gen) return synth_gen(synth_opts, out);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const DataIntegrityError& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  err << app.help();
  return kUsageError;
}

}  // namespace nudge::cli
