#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "dsner/conll.hpp"
#include "dsner/distant_annotator.hpp"
#include "support.hpp"

using namespace dsner;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string text(const fs::path& p) { return read_text_file(p.string()); }

// Writes a small synthetic train/dev pair once per test binary.
const fs::path& fixture() {
  static const fs::path dir = [] {
    auto d = testing::scratch_dir("cli-fixture");
    const auto r = run({"synth", "--out", d.string(), "--train-sentences", "30", "--dev-sentences",
                        "10", "--seed", "3"});
    REQUIRE(r.code == cli::kOk);
    return d;
  }();
  return dir;
}

std::vector<std::string> train_args(const fs::path& out) {
  return {"train",        "--out",       out.string(), "--train", (fixture() / "train.conll").string(),
          "--dev",        (fixture() / "dev.conll").string(),     "--epochs", "2",
          "--embed-dim",  "8",           "--context-dim", "8",    "--hidden", "16"};
}

std::vector<std::string> with(std::vector<std::string> base, std::initializer_list<std::string> extra) {
  base.insert(base.end(), extra);
  return base;
}

}  // namespace

TEST_CASE("synth writes a readable fixture") {
  const auto train = read_conll_file((fixture() / "train.conll").string());
  const auto dev = read_conll_file((fixture() / "dev.conll").string());
  CHECK(train.size() == 30);
  CHECK(dev.size() == 10);
  CHECK_NOTHROW(train.validate());
  CHECK(fs::exists(fixture() / "effective_config.txt"));
}

TEST_CASE("input errors exit with 2") {
  const auto dir = testing::scratch_dir("cli-errors");
  auto r = run(with(train_args(dir), {"--strategy", "random"}));
  CHECK(r.code == cli::kInputError);
  CHECK(r.err.find("{all,uniform,weighted,topneg,bottomneg}") != std::string::npos);

  r = run({"annotate", "--out", dir.string(), "--corpus", (fixture() / "train.conll").string(),
           "--dict", (dir / "no-such.tsv").string()});
  CHECK(r.code == cli::kInputError);

  r = run({"annotate", "--out", dir.string(), "--corpus", (fixture() / "train.conll").string()});
  CHECK(r.code == cli::kInputError);

  r = run({"train", "--out", dir.string()});
  CHECK(r.code == cli::kInputError);

  r = run(with(train_args(dir), {"--rate", "0"}));
  CHECK(r.code == cli::kInputError);

  r = run({"ablate", "--out", dir.string(), "--train", (fixture() / "train.conll").string(), "--dev",
           (fixture() / "dev.conll").string(), "--grid", "top"});
  CHECK(r.code == cli::kInputError);

  write_text_file((dir / "broken.conll").string(), "Anna B-PER\nsaid\n");
  r = run({"train", "--out", dir.string(), "--train", (dir / "broken.conll").string(), "--dev",
           (fixture() / "dev.conll").string()});
  CHECK(r.code == cli::kInputError);
  CHECK(r.err.find("2") != std::string::npos);
}

TEST_CASE("a missing or broken checkpoint exits with 3") {
  const auto dir = testing::scratch_dir("cli-ckpt");
  auto r = run({"eval", "--out", dir.string(), "--corpus", (fixture() / "dev.conll").string(),
                "--checkpoint", (dir / "missing.bin").string()});
  CHECK(r.code == cli::kArtifactMismatch);
  write_text_file((dir / "junk.bin").string(), "not a checkpoint");
  r = run({"eval", "--out", dir.string(), "--corpus", (fixture() / "dev.conll").string(),
           "--checkpoint", (dir / "junk.bin").string()});
  CHECK(r.code == cli::kArtifactMismatch);
}

TEST_CASE("a diverging run exits with 4") {
  const auto dir = testing::scratch_dir("cli-diverge");
  const auto r = run(with(train_args(dir), {"--optimizer", "sgd", "--lr", "1e308"}));
  CHECK(r.code == cli::kDivergence);
}

TEST_CASE("annotate with a deleted-entry dictionary replays exactly") {
  const auto a = testing::scratch_dir("cli-annotate-a");
  const auto b = testing::scratch_dir("cli-annotate-b");
  const auto corpus = (fixture() / "train.conll").string();
  for (const auto& dir : {a, b}) {
    const auto r = run({"annotate", "--out", dir.string(), "--corpus", corpus, "--delete-rate", "0.4",
                        "--seed", "7"});
    REQUIRE(r.code == cli::kOk);
  }
  CHECK(text(a / "dictionary.tsv") == text(b / "dictionary.tsv"));
  CHECK(text(a / "distant.conll") == text(b / "distant.conll"));

  const auto gold = read_conll_file(corpus);
  CHECK(text(a / "dictionary.tsv") == build_noisy_dictionary(gold, 0.4, 7, true).to_tsv());

  const auto report = nlohmann::json::parse(text(a / "annotation_report.json"));
  CHECK(report.at("micro").at("precision").get<double>() == 1.0);
  CHECK(report.at("micro").at("recall").get<double>() < 1.0);

  // A dictionary file round-trips through annotate.
  const auto c = testing::scratch_dir("cli-annotate-c");
  const auto r = run({"annotate", "--out", c.string(), "--corpus", corpus, "--dict",
                      (a / "dictionary.tsv").string()});
  REQUIRE(r.code == cli::kOk);
  CHECK(text(c / "distant.conll") == text(a / "distant.conll"));
}

TEST_CASE("train and eval: multi-seed summary, checkpoint replay, error listing") {
  const auto dir = testing::scratch_dir("cli-train");
  auto r = run(with(train_args(dir), {"--seeds", "3", "--seed", "11", "--selection-log"}));
  REQUIRE(r.code == cli::kOk);
  CHECK(fs::exists(dir / "effective_config.txt"));

  const auto summary = nlohmann::ordered_json::parse(text(dir / "summary.json"));
  CHECK(summary.at("seeds") == nlohmann::json::array({11, 12, 13}));
  std::vector<double> f1;
  for (const auto& run : summary.at("runs")) f1.push_back(run.at("dev_f1").get<double>());
  REQUIRE(f1.size() == 3);
  const double m = (f1[0] + f1[1] + f1[2]) / 3.0;
  double ss = 0.0;
  for (double x : f1) ss += (x - m) * (x - m);
  CHECK(summary.at("mean_dev_f1").get<double>() == doctest::Approx(m).epsilon(1e-12));
  CHECK(summary.at("stddev_dev_f1").get<double>() == doctest::Approx(std::sqrt(ss / 2.0)).epsilon(1e-12));

  for (int seed : {11, 12, 13}) {
    const auto sub = dir / ("seed-" + std::to_string(seed));
    CHECK(fs::exists(sub / "checkpoint.bin"));
    CHECK(fs::exists(sub / "diagnostics.csv"));
    CHECK(fs::exists(sub / "selection.jsonl"));
  }

  const auto sub = dir / "seed-12";
  const auto meta = nlohmann::json::parse(text(sub / "checkpoint.bin.json"));
  const auto eval_dir = dir / "eval";
  r = run({"eval", "--out", eval_dir.string(), "--corpus", (fixture() / "dev.conll").string(),
           "--checkpoint", (sub / "checkpoint.bin").string(), "--errors"});
  REQUIRE(r.code == cli::kOk);
  const auto metrics = nlohmann::json::parse(text(eval_dir / "metrics.json"));
  CHECK(std::abs(metrics.at("micro").at("f1").get<double>() - meta.at("best_dev_f1").get<double>()) <=
        1e-9);
  CHECK(fs::exists(eval_dir / "errors.jsonl"));
  std::istringstream lines(text(eval_dir / "errors.jsonl"));
  for (std::string line; std::getline(lines, line);)
    CHECK(nlohmann::json::parse(line).contains("sentence"));
}

TEST_CASE("single-thread training is byte-for-byte reproducible") {
  const auto a = testing::scratch_dir("cli-repro-a");
  const auto b = testing::scratch_dir("cli-repro-b");
  for (const auto& dir : {a, b})
    REQUIRE(run(with(train_args(dir), {"--single-thread", "--strategy", "topneg"})).code == cli::kOk);
  CHECK(text(a / "checkpoint.bin") == text(b / "checkpoint.bin"));
  CHECK(text(a / "diagnostics.csv") == text(b / "diagnostics.csv"));
}

TEST_CASE("a config file supplies options and flags override it") {
  const auto dir = testing::scratch_dir("cli-config");
  write_text_file((dir / "run.ini").string(), "epochs=1\nstrategy=\"all\"\nseed=5\n");
  auto r = run(with(train_args(dir), {"--config", (dir / "run.ini").string()}));
  REQUIRE(r.code == cli::kOk);
  // train_args passes --epochs 2 on the command line.
  const auto diag = text(dir / "diagnostics.csv");
  CHECK(std::count(diag.begin(), diag.end(), '\n') == 3);
  const auto summary = nlohmann::json::parse(text(dir / "summary.json"));
  CHECK(summary.at("strategy") == "all");
  CHECK(summary.at("seeds") == nlohmann::json::array({5}));
}

TEST_CASE("ablate prints one row per grid cell") {
  const auto dir = testing::scratch_dir("cli-ablate");
  const auto r = run({"ablate", "--out", dir.string(), "--train", (fixture() / "train.conll").string(),
                      "--dev", (fixture() / "dev.conll").string(), "--epochs", "1", "--seeds", "1",
                      "--embed-dim", "8", "--context-dim", "8", "--hidden", "16"});
  REQUIRE(r.code == cli::kOk);
  std::istringstream in(text(dir / "ablation.tsv"));
  std::vector<std::string> rows;
  for (std::string line; std::getline(in, line);) rows.push_back(line);
  REQUIRE(rows.size() == 7);
  CHECK(rows[0] == "sampling\tP\tR\tF1");
  const std::vector<std::string> labels = {"Top 3%",     "Top 5%",     "Top 10%",
                                           "Bottom 90%", "Bottom 95%", "Bottom 97%"};
  for (std::size_t k = 0; k < labels.size(); ++k) CHECK(rows[k + 1].rfind(labels[k] + "\t", 0) == 0);
  CHECK(r.out == text(dir / "ablation.tsv"));
}

TEST_CASE("help exits cleanly") {
  const auto r = run({"--help"});
  CHECK(r.code == cli::kOk);
  CHECK(r.out.find("train") != std::string::npos);
}
