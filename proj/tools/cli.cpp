#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dsner/conll.hpp"
#include "dsner/distant_annotator.hpp"
#include "dsner/errors.hpp"
#include "dsner/evaluation.hpp"
#include "dsner/kernels.hpp"
#include "dsner/synthetic.hpp"
#include "dsner/training.hpp"

namespace dsner::cli {
namespace fs = std::filesystem;
namespace {

struct CommonOptions {
  std::string out;
  std::string config;
  bool single_thread = false;
};

struct TrainOptions {
  std::string train;
  std::string dev;
  std::string strategy = "topneg";
  double rate = 0.05;
  std::uint64_t seed = 1;
  std::size_t seeds = 1;
  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  double learning_rate = 1e-3;
  std::string optimizer = "adam";
  bool selection_log = false;
  EncoderConfig encoder;
};

const std::vector<std::string> kStrategyNames = {"all", "uniform", "weighted", "topneg",
                                                 "bottomneg"};

void add_common(CLI::App* sub, CommonOptions& o) {
  sub->add_option("--out", o.out, "Output directory (created if absent)")->required();
  sub->add_flag("--single-thread", o.single_thread, "Run every kernel on one thread");
  sub->add_option("--config", o.config, "Flat key=value configuration file")
      ->check(CLI::ExistingFile);
}

void add_training_options(CLI::App* sub, TrainOptions& o) {
  sub->add_option("--train", o.train, "Training corpus (CoNLL)")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--dev", o.dev, "Development corpus (CoNLL, gold)")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--seed", o.seed, "Base random seed")->capture_default_str();
  sub->add_option("--seeds", o.seeds, "Number of runs (seed, seed+1, ...)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--epochs", o.epochs)->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--batch-size", o.batch_size, "Sentences per batch")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--lr", o.learning_rate, "Learning rate")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--optimizer", o.optimizer)
      ->capture_default_str()
      ->check(CLI::IsMember({"sgd", "momentum", "adam"}));
  sub->add_option("--max-span-width", o.encoder.max_span_width, "L: spans satisfy j - i <= L")
      ->capture_default_str();
  sub->add_option("--embed-dim", o.encoder.embed_dim)->capture_default_str();
  sub->add_option("--context-dim", o.encoder.context_dim)->capture_default_str();
  sub->add_option("--width-dim", o.encoder.width_dim)->capture_default_str();
  sub->add_option("--window", o.encoder.context_window, "Context tokens on each side")
      ->capture_default_str();
  sub->add_option("--hidden", o.encoder.hidden, "Classifier hidden size")->capture_default_str();
  sub->add_option("--dropout", o.encoder.dropout)->capture_default_str();
}

TrainConfig make_train_config(const TrainOptions& o, Strategy strategy, double rate,
                              std::uint64_t seed) {
  TrainConfig c;
  c.epochs = o.epochs;
  c.batch_size = o.batch_size;
  c.optimizer.kind = optimizer_from_string(o.optimizer);
  c.optimizer.learning_rate = o.learning_rate;
  c.sampling.strategy = strategy;
  c.sampling.rate = rate;
  c.encoder = o.encoder;
  c.seed = seed;
  return c;
}

void echo_config(const CLI::App* sub, const std::string& dir) {
  write_text_file((fs::path(dir) / "effective_config.txt").string(),
                  sub->config_to_str(true, false));
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// ---------------------------------------------------------------- annotate

struct AnnotateOptions {
  std::string corpus;
  std::string dict;
  double delete_rate = -1.0;
  std::uint64_t seed = 1;
  bool case_insensitive = false;
};

int cmd_annotate(const CLI::App* sub, const CommonOptions& common, const AnnotateOptions& o,
                 std::ostream& out) {
  fs::create_directories(common.out);
  Corpus gold = read_conll_file(o.corpus);
  gold.validate();
  const bool case_sensitive = !o.case_insensitive;
  Dictionary dict = o.dict.empty()
                        ? build_noisy_dictionary(gold, o.delete_rate, o.seed, case_sensitive)
                        : load_dictionary(o.dict, case_sensitive);
  Corpus distant = annotate(gold, dict);
  auto report = evaluate_annotation(distant, gold);

  const fs::path dir(common.out);
  write_text_file((dir / "distant.conll").string(), write_conll(distant, Provenance::Distant));
  write_text_file((dir / "dictionary.tsv").string(), dict.to_tsv());
  write_text_file((dir / "annotation_report.json").string(), report.to_json().dump(2) + "\n");
  echo_config(sub, common.out);
  char line[160];
  std::snprintf(line, sizeof line, "distant annotation: P=%.4f R=%.4f F1=%.4f (%zu entries)\n",
                report.micro.precision, report.micro.recall, report.micro.f1, dict.size());
  out << line;
  return kOk;
}

// ------------------------------------------------------------------- train

int cmd_train(const CLI::App* sub, const CommonOptions& common, const TrainOptions& o,
              std::ostream& out) {
  fs::create_directories(common.out);
  const Strategy strategy = strategy_from_string(o.strategy);
  const Corpus train_corpus = read_conll_file(o.train);
  const Corpus dev_corpus = read_conll_file(o.dev);
  echo_config(sub, common.out);

  nlohmann::ordered_json summary;
  summary["strategy"] = o.strategy;
  summary["rate"] = o.rate;
  summary["seeds"] = nlohmann::ordered_json::array();
  summary["runs"] = nlohmann::ordered_json::array();
  std::vector<double> f1s;
  for (std::size_t r = 0; r < o.seeds; ++r) {
    const std::uint64_t seed = o.seed + r;
    fs::path dir(common.out);
    if (o.seeds > 1) dir /= "seed-" + std::to_string(seed);
    fs::create_directories(dir);
    TrainConfig config = make_train_config(o, strategy, o.rate, seed);
    config.checkpoint_path = (dir / "checkpoint.bin").string();
    if (o.selection_log) config.selection_log_path = (dir / "selection.jsonl").string();
    auto state = train(train_corpus, dev_corpus, config);
    write_text_file((dir / "diagnostics.csv").string(), diagnostics_csv(epoch_diagnostics(state)));

    nlohmann::ordered_json run;
    run["seed"] = seed;
    run["best_epoch"] = state.best_epoch;
    run["dev_precision"] = state.best_dev_metrics.micro.precision;
    run["dev_recall"] = state.best_dev_metrics.micro.recall;
    run["dev_f1"] = state.best_dev_f1;
    summary["seeds"].push_back(seed);
    summary["runs"].push_back(run);
    f1s.push_back(state.best_dev_f1);

    char line[160];
    std::snprintf(line, sizeof line, "seed %llu: best epoch %zu dev P=%.4f R=%.4f F1=%.4f\n",
                  static_cast<unsigned long long>(seed), state.best_epoch,
                  state.best_dev_metrics.micro.precision, state.best_dev_metrics.micro.recall,
                  state.best_dev_f1);
    out << line;
  }
  summary["mean_dev_f1"] = mean(f1s);
  summary["stddev_dev_f1"] = sample_stddev(f1s);
  write_text_file((fs::path(common.out) / "summary.json").string(), summary.dump(2) + "\n");
  char line[120];
  std::snprintf(line, sizeof line, "dev F1 over %zu run(s): mean %.4f stddev %.4f\n", f1s.size(),
                mean(f1s), sample_stddev(f1s));
  out << line;
  return kOk;
}

// ------------------------------------------------------------------ ablate

struct GridCell {
  std::string label;
  Strategy strategy;
  double rate;
};

std::string percent_label(const std::string& prefix, double rate) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s %g%%", prefix.c_str(), rate * 100.0);
  return buf;
}

std::vector<GridCell> parse_grid(const std::string& spec) {
  std::vector<GridCell> cells;
  std::istringstream in(spec);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    if (item == "all") {
      cells.push_back({"All", Strategy::All, 1.0});
      continue;
    }
    auto colon = item.find(':');
    if (colon == std::string::npos)
      throw InputError("grid cell '" + item + "' must look like top:0.05");
    const std::string kind = item.substr(0, colon);
    double rate = 0.0;
    try {
      rate = std::stod(item.substr(colon + 1));
    } catch (const std::exception&) {
      throw InputError("grid cell '" + item + "' has no valid rate");
    }
    if (kind == "top") cells.push_back({percent_label("Top", rate), Strategy::TopNeg, rate});
    else if (kind == "bottom")
      cells.push_back({percent_label("Bottom", rate), Strategy::BottomNeg, rate});
    else if (kind == "uniform")
      cells.push_back({percent_label("Uniform", rate), Strategy::Uniform, rate});
    else if (kind == "weighted")
      cells.push_back({percent_label("Weighted", rate), Strategy::Weighted, rate});
    else
      throw InputError("grid cell '" + item + "': kind must be top, bottom, uniform or weighted");
    SamplingConfig{cells.back().strategy, rate, 1}.validate();
  }
  if (cells.empty()) throw InputError("empty ablation grid");
  return cells;
}

int cmd_ablate(const CLI::App* sub, const CommonOptions& common, const TrainOptions& o,
               const std::string& grid, std::ostream& out) {
  fs::create_directories(common.out);
  const auto cells = parse_grid(grid);
  const Corpus train_corpus = read_conll_file(o.train);
  const Corpus dev_corpus = read_conll_file(o.dev);
  echo_config(sub, common.out);

  std::string tsv = "sampling\tP\tR\tF1\n";
  nlohmann::ordered_json report = nlohmann::ordered_json::array();
  for (const auto& cell : cells) {
    std::vector<double> ps, rs, fs_;
    for (std::size_t r = 0; r < o.seeds; ++r) {
      auto config = make_train_config(o, cell.strategy, cell.rate, o.seed + r);
      config.evaluate_train = false;
      auto state = train(train_corpus, dev_corpus, config);
      ps.push_back(state.best_dev_metrics.micro.precision);
      rs.push_back(state.best_dev_metrics.micro.recall);
      fs_.push_back(state.best_dev_f1);
    }
    char row[160];
    std::snprintf(row, sizeof row, "%s\t%.2f\t%.2f\t%.2f\n", cell.label.c_str(), 100 * mean(ps),
                  100 * mean(rs), 100 * mean(fs_));
    tsv += row;
    nlohmann::ordered_json j;
    j["sampling"] = cell.label;
    j["strategy"] = std::string(to_string(cell.strategy));
    j["rate"] = cell.rate;
    j["precision"] = mean(ps);
    j["recall"] = mean(rs);
    j["f1"] = mean(fs_);
    j["f1_per_seed"] = fs_;
    report.push_back(j);
  }
  write_text_file((fs::path(common.out) / "ablation.tsv").string(), tsv);
  write_text_file((fs::path(common.out) / "ablation.json").string(), report.dump(2) + "\n");
  out << tsv;
  return kOk;
}

// -------------------------------------------------------------------- eval

int cmd_eval(const CLI::App* sub, const CommonOptions& common, const std::string& corpus_path,
             const std::string& checkpoint, bool errors, bool no_filter, std::ostream& out) {
  fs::create_directories(common.out);
  const Corpus corpus = read_conll_file(corpus_path);
  corpus.validate();
  const Model model = load_checkpoint(checkpoint);
  const auto gold_types = corpus.entity_types(Provenance::Gold);
  for (const auto& type : gold_types.labels())
    if (!model.types.contains(type))
      throw ArtifactMismatch("entity type '" + type + "' is unknown to the checkpoint");

  DecodeOptions options;
  options.resolve_overlaps = !no_filter;
  const Corpus predicted = predict_corpus(corpus, model, options);
  const auto metrics = micro_f1(predicted, corpus);
  const fs::path dir(common.out);
  write_text_file((dir / "metrics.json").string(), metrics.to_json().dump(2) + "\n");
  if (errors)
    write_text_file((dir / "errors.jsonl").string(), errors_to_jsonl(list_errors(predicted, corpus)));
  echo_config(sub, common.out);
  char line[120];
  std::snprintf(line, sizeof line, "P=%.4f R=%.4f F1=%.4f\n", metrics.micro.precision,
                metrics.micro.recall, metrics.micro.f1);
  out << line;
  return kOk;
}

// ------------------------------------------------------------------- synth

int cmd_synth(const CLI::App* sub, const CommonOptions& common, const SyntheticConfig& config,
              std::ostream& out) {
  fs::create_directories(common.out);
  const auto data = make_synthetic(config);
  const fs::path dir(common.out);
  write_text_file((dir / "train.conll").string(), write_conll(data.train));
  write_text_file((dir / "dev.conll").string(), write_conll(data.dev));
  if (!data.test.empty()) write_text_file((dir / "test.conll").string(), write_conll(data.test));
  echo_config(sub, common.out);
  out << "wrote " << data.train.size() << " train / " << data.dev.size() << " dev / "
      << data.test.size() << " test sentences\n";
  return kOk;
}

// CLI11 reads config files only for the top-level app, so the entries of a
// subcommand's --config file are spliced in as flags right after the
// subcommand name. Keys already given on the command line are skipped.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t k = 1; k < args.size(); ++k) {
    if (args[k] == "--config" && k + 1 < args.size()) path = args[k + 1];
    else if (args[k].rfind("--config=", 0) == 0) path = args[k].substr(9);
  }
  if (path.empty() || !fs::is_regular_file(path)) return args;

  auto given = [&](const std::string& flag) {
    for (std::size_t k = 1; k < args.size(); ++k)
      if (args[k] == flag || args[k].rfind(flag + "=", 0) == 0) return true;
    return false;
  };
  std::vector<std::string> injected;
  for (const auto& item : CLI::ConfigINI().from_file(path)) {
    if (!item.parents.empty()) throw InputError("config file '" + path + "': sections are not supported");
    const std::string flag = "--" + item.name;
    if (given(flag)) continue;
    if (item.inputs.size() == 1) {
      injected.push_back(flag + "=" + item.inputs.front());
    } else {
      injected.push_back(flag);
      injected.insert(injected.end(), item.inputs.begin(), item.inputs.end());
    }
  }
  std::vector<std::string> out(args.begin(), args.begin() + 1);
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Distantly supervised span NER with negative sampling"};
  app.name("dsner");
  app.require_subcommand(1);

  CommonOptions common;

  auto* annotate_cmd = app.add_subcommand("annotate", "Dictionary-match a corpus and score it");
  AnnotateOptions annotate_opts;
  add_common(annotate_cmd, common);
  annotate_cmd->add_option("--corpus", annotate_opts.corpus, "Gold corpus (CoNLL)")
      ->required()
      ->check(CLI::ExistingFile);
  auto* dict_opt = annotate_cmd->add_option("--dict", annotate_opts.dict, "Dictionary TSV")
                       ->check(CLI::ExistingFile);
  auto* delete_opt =
      annotate_cmd
          ->add_option("--delete-rate", annotate_opts.delete_rate,
                       "Build the dictionary from gold forms, dropping this fraction")
          ->check(CLI::Range(0.0, 1.0));
  dict_opt->excludes(delete_opt);
  annotate_cmd->add_option("--seed", annotate_opts.seed)->capture_default_str();
  annotate_cmd->add_flag("--case-insensitive", annotate_opts.case_insensitive);

  auto* train_cmd = app.add_subcommand("train", "Train a span classifier");
  TrainOptions train_opts;
  add_common(train_cmd, common);
  add_training_options(train_cmd, train_opts);
  train_cmd->add_option("--strategy", train_opts.strategy, "Negative sampling strategy")
      ->capture_default_str()
      ->check(CLI::IsMember(kStrategyNames));
  train_cmd->add_option("--rate", train_opts.rate, "Fraction of negatives kept")
      ->capture_default_str();
  train_cmd->add_flag("--selection-log", train_opts.selection_log,
                      "Write per-batch selections to selection.jsonl");

  auto* ablate_cmd = app.add_subcommand("ablate", "Compare sampling strategies and rates");
  TrainOptions ablate_opts;
  ablate_opts.seeds = 3;
  std::string grid = "top:0.03,top:0.05,top:0.10,bottom:0.90,bottom:0.95,bottom:0.97";
  add_common(ablate_cmd, common);
  add_training_options(ablate_cmd, ablate_opts);
  ablate_cmd->add_option("--grid", grid, "Comma separated cells: all, top:R, bottom:R, ...")
      ->capture_default_str();

  auto* eval_cmd = app.add_subcommand("eval", "Score a checkpoint on a gold corpus");
  std::string eval_corpus, eval_checkpoint;
  bool eval_errors = false, eval_no_filter = false;
  add_common(eval_cmd, common);
  eval_cmd->add_option("--corpus", eval_corpus, "Gold corpus (CoNLL)")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "Model checkpoint")->required();
  eval_cmd->add_flag("--errors", eval_errors, "Also write errors.jsonl");
  eval_cmd->add_flag("--no-overlap-filter", eval_no_filter, "Keep overlapping predictions");

  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic train/dev fixture");
  SyntheticConfig synth;
  add_common(synth_cmd, common);
  synth_cmd->add_option("--train-sentences", synth.train_sentences)->capture_default_str();
  synth_cmd->add_option("--dev-sentences", synth.dev_sentences)->capture_default_str();
  synth_cmd->add_option("--test-sentences", synth.test_sentences)->capture_default_str();
  synth_cmd->add_option("--forms-per-type", synth.forms_per_type)->capture_default_str();
  synth_cmd->add_option("--filler-rate", synth.filler_rate, "Share of entity slots filled by common nouns")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  synth_cmd->add_option("--seed", synth.seed)->capture_default_str();

  std::vector<std::string> reversed;
  try {
    const auto expanded = expand_config(args);
    reversed.assign(expanded.rbegin(), expanded.rend());
  } catch (const std::exception& e) {
    err << "dsner: " << e.what() << '\n';
    return kInputError;
  }
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "dsner: " << e.what() << '\n';
    return kInputError;
  }

  if (common.single_thread) kernels::set_threads(1);
  try {
    if (annotate_cmd->parsed()) {
      if (annotate_opts.dict.empty() && annotate_opts.delete_rate < 0.0)
        throw InputError("one of --dict or --delete-rate is required");
      return cmd_annotate(annotate_cmd, common, annotate_opts, out);
    }
    if (train_cmd->parsed()) return cmd_train(train_cmd, common, train_opts, out);
    if (ablate_cmd->parsed()) return cmd_ablate(ablate_cmd, common, ablate_opts, grid, out);
    if (eval_cmd->parsed())
      return cmd_eval(eval_cmd, common, eval_corpus, eval_checkpoint, eval_errors, eval_no_filter,
                      out);
    if (synth_cmd->parsed()) return cmd_synth(synth_cmd, common, synth, out);
  } catch (const ArtifactMismatch& e) {
    err << "dsner: " << e.what() << '\n';
    return kArtifactMismatch;
  } catch (const DivergenceError& e) {
    err << "dsner: " << e.what() << '\n';
    return kDivergence;
  } catch (const InputError& e) {
    err << "dsner: " << e.what() << '\n';
    return kInputError;
  } catch (const fs::filesystem_error& e) {
    err << "dsner: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}

}  // namespace dsner::cli
