// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"
#include "dsner/conll.hpp"
#include "dsner/distant_annotator.hpp"
#include "dsner/encoder.hpp"
#include "dsner/evaluation.hpp"
#include "dsner/kernels.hpp"
#include "dsner/metrics.hpp"
#include "dsner/sampling.hpp"
#include "dsner/synthetic.hpp"
#include "dsner/training.hpp"
#include "support.hpp"

using namespace dsner;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ------------------------------------------------------------ 1. phi oracle

Outcome phi_oracle() {
  Rng rng(101);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto neg = testing::random_matrix(rng, 1 + rng.below(50), 16);
    const auto pos = testing::random_matrix(rng, 1 + rng.below(20), 16);
    for (const auto& phi : {kernels::omp::phi(neg, pos), kernels::serial::phi(neg, pos)})
      for (std::size_t r = 0; r < neg.rows(); ++r)
        worst = std::max(worst, std::abs(phi[r] - testing::brute_phi(neg, r, pos)));
  }
  return {worst <= 1e-9, fmt("max |batched - brute force| = %.3g (tol 1e-9)", worst)};
}

// --------------------------------------------------------- 2. selection laws

std::vector<NegativeKey> keys_for(std::size_t n) {
  std::vector<NegativeKey> keys;
  for (std::size_t k = 0; k < n; ++k) keys.push_back({k / 9, {k % 9, k % 9}});
  return keys;
}

SamplingConfig sampling(Strategy s, double rate) {
  SamplingConfig c;
  c.strategy = s;
  c.rate = rate;
  c.seed = 1;
  return c;
}

Outcome selection_laws() {
  Rng rng(202);
  std::size_t cases = 0, size_failures = 0, oracle_failures = 0;
  const std::vector<std::size_t> percents = {1, 5, 10, 50, 100};
  for (std::size_t n = 0; n <= 200; ++n) {
    const auto keys = keys_for(n);
    auto neg = testing::random_matrix(rng, n, 6);
    // Duplicate a few rows so equal scores exercise the tie order.
    for (std::size_t k = 1; k < n; k += 5) {
      const auto prev = neg.row(k - 1);
      std::copy(prev.begin(), prev.end(), neg.row(k).begin());
    }
    const auto pos = testing::random_matrix(rng, 1 + rng.below(6), 6);
    std::vector<double> probs(n);
    for (double& p : probs) p = rng.uniform();

    // Oracle: sort by (-phi, sentence, start, end).
    std::vector<std::size_t> order(n);
    std::vector<double> phi(n);
    for (std::size_t k = 0; k < n; ++k) order[k] = k, phi[k] = testing::brute_phi(neg, k, pos);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (std::abs(phi[a] - phi[b]) > 1e-12) return phi[a] > phi[b];
      return std::tie(keys[a].sentence, keys[a].span.start, keys[a].span.end) <
             std::tie(keys[b].sentence, keys[b].span.start, keys[b].span.end);
    });

    for (std::size_t pct : percents) {
      const double r = double(pct) / 100.0;
      const std::size_t k = std::min(n, (n * pct + 99) / 100);
      const auto top = select_top_neg(keys, neg, pos, sampling(Strategy::TopNeg, r));
      const std::size_t sizes[] = {
          top.selected.size(),
          select_bottom(keys, neg, pos, r).selected.size(),
          select_uniform(n, sampling(Strategy::Uniform, r)).selected.size(),
          select_weighted(probs, sampling(Strategy::Weighted, r)).selected.size()};
      for (std::size_t s : sizes) size_failures += s != k;
      const std::set<std::size_t> got(top.selected.begin(), top.selected.end());
      const std::set<std::size_t> want(order.begin(), order.begin() + static_cast<long>(k));
      oracle_failures += got != want;
      ++cases;
    }
  }
  return {size_failures == 0 && oracle_failures == 0,
          fmt("%zu (N, r) cases; %zu size violations, %zu TopNeg sets differing from the sort oracle",
              cases, size_failures, oracle_failures)};
}

// -------------------------------------------------------- 3. scale invariance

Outcome scale_invariance() {
  Rng rng(303);
  double worst = 0.0;
  std::size_t set_changes = 0;
  for (int t = 0; t < 50; ++t) {
    auto neg = testing::random_matrix(rng, 5 + rng.below(46), 16);
    auto pos = testing::random_matrix(rng, 1 + rng.below(20), 16);
    const auto keys = keys_for(neg.rows());
    const auto cfg = sampling(Strategy::TopNeg, 0.2);
    const auto base = select_top_neg(keys, neg, pos, cfg);
    for (double c : {0.1, 10.0}) {
      auto n2 = neg, p2 = pos;
      if (t % 2 == 0) {
        for (double& v : n2.row(rng.below(n2.rows()))) v *= c;
      } else {
        for (double& v : p2.row(rng.below(p2.rows()))) v *= c;
      }
      const auto scaled = select_top_neg(keys, n2, p2, cfg);
      for (std::size_t k = 0; k < base.scores.size(); ++k)
        worst = std::max(worst, std::abs(base.scores[k] - scaled.scores[k]));
      set_changes += std::set<std::size_t>(base.selected.begin(), base.selected.end()) !=
                     std::set<std::size_t>(scaled.selected.begin(), scaled.selected.end());
    }
  }
  return {worst <= 1e-9 && set_changes == 0,
          fmt("max phi change %.3g (tol 1e-9), %zu TopNeg set changes", worst, set_changes)};
}

// ---------------------------------------------------------- 4. gradient check

Outcome gradient_check() {
  double worst = 0.0;
  std::string worst_name;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    EncoderConfig c;
    c.vocab_size = 10;
    c.embed_dim = 4;
    c.context_dim = 5;
    c.width_dim = 3;
    c.context_window = 1;
    c.max_span_width = 3;
    c.hidden = 6;
    c.num_labels = 4;
    c.seed = seed;
    auto params = init_parameters(c);
    Rng rng(500 + seed);
    for (auto& p : params.params())
      if (p.name.ends_with(".bias"))
        for (double& v : p.value.data()) v = rng.uniform(-0.5, 0.5);

    std::vector<SentenceTargets> batch;
    for (std::size_t n : {6u, 3u}) {
      SentenceTargets s;
      for (std::size_t t = 0; t < n; ++t) s.token_ids.push_back(rng.below(c.vocab_size));
      for (const auto& span : enumerate_spans(n, c.max_span_width))
        s.targets.push_back({span, rng.bernoulli(0.3) ? 1 + rng.below(c.num_labels - 1) : 0});
      batch.push_back(std::move(s));
    }

    params.zero_grad();
    LossGraph graph(params, c);
    graph.forward(batch);
    graph.backward(params);

    const double eps = 1e-5;
    for (auto& p : params.params())
      for (std::size_t k = 0; k < p.value.size(); ++k) {
        const double keep = p.value.data()[k];
        p.value.data()[k] = keep + eps;
        const double up = LossGraph(params, c).forward(batch);
        p.value.data()[k] = keep - eps;
        const double down = LossGraph(params, c).forward(batch);
        p.value.data()[k] = keep;
        const double numeric = (up - down) / (2 * eps);
        const double analytic = p.grad.data()[k];
        const double rel = std::abs(numeric - analytic) /
                           std::max({std::abs(numeric), std::abs(analytic), 1e-6});
        if (rel > worst) worst = rel, worst_name = p.name;
      }
  }
  return {worst < 1e-4, fmt("max relative error %.3g in %s (tol 1e-4)", worst, worst_name.c_str())};
}

// --------------------------------------------------------- training fixtures

struct Fixture {
  SyntheticData clean;
  Corpus distant;  // training sentences with Distant-provenance labels only
  double annotation_recall = 0.0;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture x;
    x.clean = make_synthetic(SyntheticConfig{});
    const auto dict = build_noisy_dictionary(x.clean.train, 0.4, 7);
    x.distant = annotate(x.clean.train, dict);
    x.annotation_recall = evaluate_annotation(x.distant, x.clean.train).micro.recall;
    return x;
  }();
  return f;
}

TrainConfig config_for(Strategy s, double rate, std::uint64_t seed, Provenance labels) {
  TrainConfig c;
  c.epochs = 30;
  c.sampling.strategy = s;
  c.sampling.rate = rate;
  c.seed = seed;
  c.train_labels = labels;
  return c;
}

struct RunSummary {
  double p = 0.0, r = 0.0, f1 = 0.0;
};

// Best-dev-epoch metrics averaged over seeds 1..3.
RunSummary mean_over_seeds(Strategy s, double rate, Provenance labels) {
  const auto& fx = fixture();
  const Corpus& corpus = labels == Provenance::Gold ? fx.clean.train : fx.distant;
  RunSummary m;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    auto c = config_for(s, rate, seed, labels);
    c.evaluate_train = false;
    const auto st = train(corpus, fx.clean.dev, c);
    m.p += st.best_dev_metrics.micro.precision / 3.0;
    m.r += st.best_dev_metrics.micro.recall / 3.0;
    m.f1 += st.best_dev_f1 / 3.0;
  }
  return m;
}

const RunSummary& clean_all() {
  static const RunSummary s = mean_over_seeds(Strategy::All, 1.0, Provenance::Gold);
  return s;
}

const RunSummary& distant_all() {
  static const RunSummary s = mean_over_seeds(Strategy::All, 1.0, Provenance::Distant);
  return s;
}

// ------------------------------------------------------------- 5. learnability

Outcome learnability() {
  const int threads = kernels::max_threads();
  kernels::set_threads(1);
  const auto& fx = fixture();
  const auto st = train(fx.clean.train, fx.clean.dev, config_for(Strategy::All, 1.0, 1, Provenance::Gold));
  const auto& last = st.history.back();
  const double train_f1 =
      last.train_p + last.train_r > 0 ? 2 * last.train_p * last.train_r / (last.train_p + last.train_r) : 0.0;
  const std::size_t vocab = st.model.vocab.size();
  kernels::set_threads(threads);
  return {train_f1 >= 0.95 && st.best_dev_f1 >= 0.85 && vocab <= 300,
          fmt("train F1 %.4f (>= 0.95), best dev F1 %.4f at epoch %zu (>= 0.85), vocabulary %zu (<= 300)",
              train_f1, st.best_dev_f1, st.best_epoch, vocab)};
}

// ------------------------------------------------------------ 6. noise signature

Outcome noise_signature() {
  const auto& clean = clean_all();
  const auto& ds = distant_all();
  const double recall_gap = 100 * (clean.r - ds.r);
  const double precision_gap = 100 * std::abs(clean.p - ds.p);
  return {recall_gap >= 15.0 && precision_gap <= 5.0,
          fmt("annotation recall %.3f; dev R clean %.2f vs distant %.2f (gap %.2f >= 15), "
              "dev P %.2f vs %.2f (gap %.2f <= 5)",
              fixture().annotation_recall, 100 * clean.r, 100 * ds.r, recall_gap, 100 * clean.p,
              100 * ds.p, precision_gap)};
}

// --------------------------------------------------------------- 7. top-neg gain

Outcome topneg_gain() {
  const auto& all = distant_all();
  const auto top = mean_over_seeds(Strategy::TopNeg, 0.05, Provenance::Distant);
  const double gain = 100 * (top.r - all.r);
  return {gain >= 5.0 && top.f1 > all.f1,
          fmt("dev R TopNeg %.2f vs All %.2f (gain %.2f >= 5), dev F1 %.2f vs %.2f", 100 * top.r,
              100 * all.r, gain, 100 * top.f1, 100 * all.f1)};
}

// ------------------------------------------------------- 8. sampling direction

Outcome sampling_direction() {
  const auto dir = testing::scratch_dir("acceptance-ablate");
  const auto& fx = fixture();
  // The distant labels become the file's only (gold-column) annotations.
  write_text_file((dir / "train.conll").string(), write_conll(fx.distant, Provenance::Distant));
  write_text_file((dir / "dev.conll").string(), write_conll(fx.clean.dev));
  std::ostringstream out, err;
  const int code = cli::run({"ablate", "--out", (dir / "out").string(), "--train",
                             (dir / "train.conll").string(), "--dev", (dir / "dev.conll").string(),
                             "--grid", "top:0.05,bottom:0.95", "--seeds", "3"},
                            out, err);
  if (code != cli::kOk) return {false, "ablate exited with " + std::to_string(code) + ": " + err.str()};
  const auto rows = nlohmann::json::parse(read_text_file((dir / "out" / "ablation.json").string()));
  const double top = rows.at(0).at("f1"), bottom = rows.at(1).at("f1");
  return {top > bottom, fmt("mean dev F1 Top 5%% %.2f vs Bottom 95%% %.2f", 100 * top, 100 * bottom)};
}

// -------------------------------------------------------- 9. annotation quality

std::string surface(const Sentence& s, const LabeledSpan& a) {
  std::string out;
  for (std::size_t t = a.start; t <= a.end; ++t) out += (t > a.start ? " " : "") + s.tokens[t];
  return out;
}

Outcome annotation_quality() {
  const Corpus& gold = fixture().clean.train;
  std::map<std::string, std::string> forms;
  for (std::size_t k = 0; k < gold.size(); ++k)
    for (const auto& a : gold.annotations[k]) forms[surface(gold.sentences[k], a)] = a.type;
  std::vector<std::string> keys;
  for (const auto& [f, t] : forms) keys.push_back(f);
  Rng rng(60);
  rng.shuffle(keys);
  const std::set<std::string> kept(keys.begin(), keys.begin() + static_cast<long>(keys.size() * 6 / 10));
  Dictionary dict;
  for (const auto& f : kept) dict.add(f, forms.at(f));

  std::map<std::string, std::pair<std::size_t, std::size_t>> cover;
  std::size_t hit = 0, total = 0;
  for (std::size_t k = 0; k < gold.size(); ++k)
    for (const auto& a : gold.annotations[k]) {
      const bool h = kept.count(surface(gold.sentences[k], a)) > 0;
      cover[a.type].first += h;
      cover[a.type].second += 1;
      hit += h;
      total += 1;
    }

  const auto report = evaluate_annotation(annotate(gold, dict), gold);
  bool ok = report.micro.precision == 1.0 &&
            std::abs(report.micro.recall - double(hit) / double(total)) <= 1e-12;
  std::string per_type;
  for (const auto& [type, c] : cover) {
    const auto& s = report.per_type.at(type);
    ok = ok && s.precision == 1.0 &&
         std::abs(s.recall - double(c.first) / double(c.second)) <= 1e-12;
    per_type += fmt(" %s R=%.4f", type.c_str(), s.recall);
  }
  return {ok, fmt("%zu of %zu forms kept; P=%.4f R=%.4f (oracle %zu/%zu);", kept.size(), forms.size(),
                  report.micro.precision, report.micro.recall, hit, total) +
                  per_type};
}

// --------------------------------------------------------- 10. evaluator oracle

Outcome evaluator_oracle() {
  Corpus worked;
  worked.add({"s0", {"a", "b", "c", "d"}}, {{0, 1, "PER", Provenance::Gold},
                                             {0, 1, "PER", Provenance::Predicted},
                                             {2, 2, "LOC", Provenance::Predicted}});
  const auto w = micro_f1(worked, worked);
  bool ok = w.micro.precision == 0.5 && w.micro.recall == 1.0 && w.micro.f1 == 2.0 / 3.0;

  Rng rng(1010);
  std::size_t mismatches = 0;
  for (int t = 0; t < 200; ++t) {
    Corpus gold, pred;
    const std::size_t sentences = 1 + rng.below(4);
    for (std::size_t s = 0; s < sentences; ++s) {
      const std::size_t n = 1 + rng.below(8);
      const auto sentence = testing::random_sentence(rng, n, "s" + std::to_string(s));
      gold.add(sentence, testing::random_spans(rng, n, 2, Provenance::Gold));
      auto p = testing::random_spans(rng, n, 2, Provenance::Predicted);
      for (const auto& g : gold.annotations.back())
        if (rng.bernoulli(0.5)) p.push_back({g.start, g.end, g.type, Provenance::Predicted});
      pred.add(sentence, p);
    }
    const auto m = micro_f1(pred, gold);
    const auto o = testing::count_matches(pred, Provenance::Predicted, gold, Provenance::Gold);
    mismatches += m.total.true_positives != o.tp || m.total.predicted != o.pred ||
                  m.total.gold != o.gold || std::abs(m.micro.f1 - o.f()) > 1e-15;
  }
  ok = ok && mismatches == 0;
  return {ok, fmt("worked example P=%.4f R=%.4f F1=%.6f; %zu of 200 random instances disagree",
                  w.micro.precision, w.micro.recall, w.micro.f1, mismatches)};
}

// -------------------------------------------------------------- 11. determinism

Outcome determinism() {
  const int threads = kernels::max_threads();
  const auto dir = testing::scratch_dir("acceptance-determinism");
  const auto& fx = fixture();
  write_text_file((dir / "train.conll").string(), write_conll(fx.distant, Provenance::Distant));
  write_text_file((dir / "dev.conll").string(), write_conll(fx.clean.dev));
  for (const char* run : {"a", "b"}) {
    std::ostringstream out, err;
    const int code = cli::run({"train", "--out", (dir / run).string(), "--train", (dir / "train.conll").string(),
                               "--dev", (dir / "dev.conll").string(), "--strategy", "topneg",
                               "--epochs", "5", "--seed", "4", "--single-thread"},
                              out, err);
    if (code != cli::kOk) return {false, "train exited with " + std::to_string(code) + ": " + err.str()};
  }
  const auto ca = read_text_file((dir / "a" / "checkpoint.bin").string());
  const auto cb = read_text_file((dir / "b" / "checkpoint.bin").string());
  const auto da = read_text_file((dir / "a" / "diagnostics.csv").string());
  const auto db = read_text_file((dir / "b" / "diagnostics.csv").string());
  kernels::set_threads(threads);
  return {ca == cb && da == db,
          fmt("checkpoint %zu bytes %s, diagnostics %s", ca.size(), ca == cb ? "identical" : "DIFFER",
              da == db ? "identical" : "DIFFER")};
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;  // 0: no limit
  std::function<Outcome()> check;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "phi oracle", 1.0, phi_oracle},
      {2, "selection laws", 5.0, selection_laws},
      {3, "scale invariance", 0.0, scale_invariance},
      {4, "gradient check", 30.0, gradient_check},
      {5, "learnability (single thread)", 120.0, learnability},
      {6, "noise signature", 0.0, noise_signature},
      {7, "top-neg gain", 0.0, topneg_gain},
      {8, "sampling direction via ablate", 0.0, sampling_direction},
      {9, "annotation quality", 0.0, annotation_quality},
      {10, "evaluator oracle", 0.0, evaluator_oracle},
      {11, "determinism", 0.0, determinism},
  };

  // Criterion 7 bounds the total time of the three-seed comparison, which
  // includes the All baseline shared with criterion 6.
  double comparison_seconds = 0.0;
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string timing = fmt("%.2fs", secs);
    if (c.id == 6 || c.id == 7) comparison_seconds += secs;
    double limit = c.limit_seconds;
    double measured = secs;
    if (c.id == 7) limit = 300.0, measured = comparison_seconds, timing = fmt("%.2fs with baseline", measured);
    if (limit > 0) {
      timing += fmt(" (limit %.0fs)", limit);
      if (measured >= limit) o.pass = false;
    }
    failures += !o.pass;
    std::printf("%s [%d] %s: %s; %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                timing.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
