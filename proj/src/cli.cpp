#include "srgnn/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "srgnn/ablation.hpp"
#include "srgnn/checkpoint.hpp"
#include "srgnn/data_pipeline.hpp"
#include "srgnn/errors.hpp"
#include "srgnn/evaluator.hpp"
#include "srgnn/trainer.hpp"

namespace srgnn::cli {

namespace {

namespace fs = std::filesystem;

struct PreprocessArgs {
  std::string input;
  std::string format = "yoochoose";
  int fraction = 1;
  double horizon_days = 1;
  std::size_t min_item_count = 5;
  std::string out;
  std::string reference;
};

struct TrainArgs {
  std::string data;
  std::string checkpoint;
  std::string out = ".";
  std::string loss = "paper-bce";
  std::string readout = "hybrid";
  std::string connection = "standard";
  TrainConfig config;
};

struct EvaluateArgs {
  std::string checkpoint;
  std::string test;
  std::string data;
  int k = 20;
  bool groups = false;
  std::size_t pivot = 5;
  std::string out;
};

struct AblateArgs {
  std::vector<std::string> variants;
  std::vector<std::string> connections;
};

void add_training_flags(CLI::App* cmd, TrainArgs& a) {
  auto& c = a.config;
  cmd->add_option("--data", a.data, "Dataset directory written by preprocess")->required();
  cmd->add_option("--d", c.model.dim, "Latent dimension")->capture_default_str();
  cmd->add_option("--lr", c.lr, "Initial learning rate")->capture_default_str();
  cmd->add_option("--lr-decay", c.lr_decay, "Learning-rate decay factor")
      ->capture_default_str();
  cmd->add_option("--decay-every", c.decay_every, "Epochs between decays")
      ->capture_default_str();
  cmd->add_option("--batch", c.batch_size, "Mini-batch size")->capture_default_str();
  cmd->add_option("--l2", c.l2, "L2 penalty")->capture_default_str();
  cmd->add_option("--epochs", c.epochs, "Training epochs")
      ->capture_default_str();
  cmd->add_option("--steps", c.model.steps, "Propagation steps T")
      ->capture_default_str();
  cmd->add_option("--loss", a.loss, "Loss: paper-bce | ce")
      ->capture_default_str()
      ->check(CLI::IsMember({"paper-bce", "ce"}));
  cmd->add_option("--readout", a.readout, "Session embedding: l | avg | att | hybrid")
      ->capture_default_str()
      ->check(CLI::IsMember({"l", "avg", "att", "hybrid"}, CLI::ignore_case));
  cmd->add_option("--connection", a.connection, "Connection scheme: standard | ngc | fc")
      ->capture_default_str()
      ->check(CLI::IsMember({"standard", "ngc", "fc"}));
  cmd->add_flag("--normalize-attention", c.model.normalize_attention,
                "Softmax-normalise attention scores");
  cmd->add_option("--validation-fraction", c.validation_fraction,
                  "Share of training samples held out")
      ->capture_default_str();
  cmd->add_option("--k", c.k, "Cutoff for P@k and MRR@k")->capture_default_str();
  cmd->add_option("--seed", c.seed, "Seed for every random choice")->capture_default_str();
  cmd->add_option("--checkpoint", a.checkpoint, "Checkpoint path (default: <out>/model.ckpt)");
  cmd->add_option("--out", a.out, "Output directory")->capture_default_str();
}

TrainConfig resolve(TrainArgs& a) {
  TrainConfig c = a.config;
  c.model.loss = parse_loss_mode(a.loss);
  c.model.readout = parse_readout_mode(a.readout);
  c.model.connection = parse_connection_scheme(a.connection);
  validate(c);
  return c;
}

struct PreparedData {
  SessionDataset dataset;
  std::vector<Session> train;
  std::vector<Session> validation;
  GlobalGraph global;
};

PreparedData prepare(const std::string& dir, const TrainConfig& config) {
  if (!fs::is_directory(dir)) throw IoError("data directory '" + dir + "' does not exist");
  PreparedData p;
  p.dataset = read_dataset(dir);
  if (p.dataset.train.empty()) throw ContractError("training set is empty");
  const auto sequences = reconstruct_sessions(p.dataset.train);
  p.global = build_global_graph(sequences);
  if (config.validation_fraction > 0 && p.dataset.train.size() >= 2) {
    Rng split_rng(config.seed + 1);
    auto [tr, va] = validate_split(p.dataset.train, config.validation_fraction, split_rng);
    p.train = std::move(tr);
    p.validation = std::move(va);
  } else {
    p.train = p.dataset.train;
  }
  return p;
}

int do_preprocess(const PreprocessArgs& a, std::ostream& out) {
  if (!fs::exists(a.input)) throw IoError("input file '" + a.input + "' does not exist");
  PreprocessOptions opts;
  opts.format = parse_click_format(a.format);
  opts.fraction = a.fraction;
  opts.horizon_days = a.horizon_days;
  opts.min_item_count = a.min_item_count;
  const SessionDataset ds = preprocess(a.input, opts);
  write_dataset(a.out, ds);
  out << format_stats(ds.stats);
  if (!a.reference.empty()) {
    const auto ref = reference_stats(a.reference);
    if (!ref) throw ContractError("unknown reference '" + a.reference + "'");
    out << compare_stats(ds.stats, *ref);
  }
  return 0;
}

int do_train(TrainArgs& a, std::ostream& out) {
  const TrainConfig config = resolve(a);
  PreparedData data = prepare(a.data, config);
  out << "train samples=" << data.train.size() << " validation samples=" << data.validation.size()
      << " items=" << data.dataset.catalog() << "\n";

  const auto result = train(config, data.dataset.catalog(), data.train, data.validation,
                            data.global, [&](const EpochSummary& s, const EvalReport* v) {
                              out << "epoch " << (s.epoch + 1) << " loss=" << s.mean_loss
                                  << " lr=" << s.lr;
                              if (v) {
                                out << " val_P@" << v->k << "=" << 100.0 * v->p_at_k << " val_MRR@"
                                    << v->k << "=" << 100.0 * v->mrr_at_k;
                              }
                              out << std::endl;
                            });

  const fs::path ckpt_path = a.checkpoint.empty() ? fs::path(a.out) / "model.ckpt" : fs::path(a.checkpoint);
  if (ckpt_path.has_parent_path()) fs::create_directories(ckpt_path.parent_path());
  Checkpoint ckpt;
  ckpt.config = config;
  ckpt.model = result.model;
  ckpt.adam = result.adam;
  ckpt.epoch = static_cast<std::uint64_t>(result.epochs_completed);
  save_checkpoint(ckpt_path, ckpt);
  out << "best epoch " << result.best_epoch << ", checkpoint written to " << ckpt_path.string()
      << "\n";

  if (!data.dataset.test.empty()) {
    out << format_table(evaluate(result.model, data.dataset.test, config.k));
  }
  return 0;
}

int do_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  fs::path test_path;
  if (!a.test.empty()) test_path = a.test;
  else if (!a.data.empty()) test_path = fs::path(a.data) / "test.txt";
  else throw ContractError("evaluate needs --test or --data");
  const auto samples = read_samples(test_path);
  for (const auto& s : samples) {
    auto bad = [&](ItemId id) { return id >= ckpt.model.catalog(); };
    if (std::any_of(s.items.begin(), s.items.end(), bad) || bad(*s.label)) {
      throw CatalogError("test sample references an item outside the checkpoint catalog");
    }
  }
  const EvalReport report = a.groups ? length_group_report(ckpt.model, samples, a.k, a.pivot)
                                     : evaluate(ckpt.model, samples, a.k);
  out << format_table(report);
  out << format_key_values(report);
  if (!a.out.empty()) {
    std::ofstream kv(a.out, std::ios::trunc);
    if (!kv) throw IoError("cannot write '" + a.out + "'");
    kv << format_key_values(report);
  }
  return 0;
}

int do_ablate(TrainArgs& t, const AblateArgs& a, std::ostream& out) {
  const TrainConfig config = resolve(t);
  PreparedData data = prepare(t.data, config);
  if (data.dataset.test.empty()) throw ContractError("ablation needs a non-empty test set");

  std::vector<ConnectionScheme> schemes;
  std::vector<ReadoutMode> modes;
  for (const auto& s : a.connections) schemes.push_back(parse_connection_scheme(s));
  for (const auto& v : a.variants) modes.push_back(parse_readout_mode(v));
  // an axis that was not given is pinned to the full model, unless neither was
  if (schemes.empty() && modes.empty()) {
    schemes = {ConnectionScheme::Standard, ConnectionScheme::NGC, ConnectionScheme::FC};
    modes = {ReadoutMode::Local, ReadoutMode::Average, ReadoutMode::Attention, ReadoutMode::Hybrid};
  } else if (schemes.empty()) {
    schemes = {ConnectionScheme::Standard};
  } else if (modes.empty()) {
    modes = {ReadoutMode::Hybrid};
  }

  const auto rows = run_ablation(config, data.dataset.catalog(), data.train, data.validation,
                                 data.dataset.test, data.global, schemes, modes);
  const std::string table = format_ablation(rows, config.k);
  out << table;
  if (!t.out.empty() && t.out != ".") {
    fs::create_directories(t.out);
    std::ofstream f(fs::path(t.out) / "ablation.txt", std::ios::trunc);
    f << table;
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Session-based recommendation with gated graph neural networks", "srgnn"};
  app.require_subcommand(1, 1);
  app.set_config("--config", "", "INI/TOML file with flag values (flags on the command line win)");

  PreprocessArgs pre;
  auto* preprocess_cmd = app.add_subcommand("preprocess", "Turn a click log into a dataset directory");
  preprocess_cmd->add_option("--input", pre.input, "Click log")->required();
  preprocess_cmd->add_option("--format", pre.format, "yoochoose | diginetica | tsv")
      ->capture_default_str()
      ->check(CLI::IsMember({"yoochoose", "diginetica", "tsv", "yoochoose_csv", "diginetica_csv",
                             "generic_tsv"}));
  preprocess_cmd->add_option("--fraction", pre.fraction, "Keep the most recent 1/N of training sessions")
      ->capture_default_str()
      ->check(CLI::IsMember({1, 4, 64}));
  preprocess_cmd->add_option("--horizon-days", pre.horizon_days,
                             "Final window used as test set (1 for yoochoose, 7 for diginetica)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  preprocess_cmd->add_option("--min-item-count", pre.min_item_count, "Minimum item frequency")
      ->capture_default_str();
  preprocess_cmd->add_option("--out", pre.out, "Output dataset directory")->required();
  preprocess_cmd->add_option("--reference", pre.reference,
                             "Compare stats against yoochoose-64 | yoochoose-4 | diginetica");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  add_training_flags(train_cmd, train_args);

  EvaluateArgs eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a test set with a checkpoint");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--test", eval.test, "Test samples file");
  eval_cmd->add_option("--data", eval.data, "Dataset directory (uses test.txt)");
  eval_cmd->add_option("--k", eval.k, "Cutoff")->capture_default_str();
  eval_cmd->add_flag("--groups", eval.groups, "Add the short/long prefix-length breakdown");
  eval_cmd->add_option("--pivot", eval.pivot, "Short group is length <= pivot")
      ->capture_default_str();
  eval_cmd->add_option("--out", eval.out, "Write key=value report to this file");

  TrainArgs ablate_train;
  AblateArgs ablate;
  auto* ablate_cmd = app.add_subcommand("ablate", "Train and compare connection/readout variants");
  add_training_flags(ablate_cmd, ablate_train);
  ablate_cmd->add_option("--variants", ablate.variants, "Readouts to compare: l,avg,att,hybrid")
      ->delimiter(',');
  ablate_cmd->add_option("--connections", ablate.connections,
                         "Connection schemes to compare: standard,ngc,fc")
      ->delimiter(',');

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* failed = &app;
    for (auto* sub : app.get_subcommands()) failed = sub;
    err << failed->help();
    return 2;
  }

  try {
    if (*preprocess_cmd) return do_preprocess(pre, out);
    if (*train_cmd) return do_train(train_args, out);
    if (*eval_cmd) return do_evaluate(eval, out);
    if (*ablate_cmd) return do_ablate(ablate_train, ablate, out);
  } catch (const ContractError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, out, err);
}

}  // namespace srgnn::cli
