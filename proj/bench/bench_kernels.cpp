// Serial vs OpenMP timings for the similarity and span-scoring kernels.
//
//   bench_kernels [--negatives N] [--positives M] [--dim D] [--repeats R]
//                 [--sentences S] [--threads T]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dsner/encoder.hpp"
#include "dsner/kernels.hpp"
#include "dsner/rng.hpp"
#include "dsner/synthetic.hpp"

using namespace dsner;
using Clock = std::chrono::steady_clock;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(-1.0, 1.0);
  return m;
}

template <class F>
double best_ms(int repeats, F&& f) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = Clock::now();
    f();
    const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    if (ms < best) best = ms;
  }
  return best;
}

void report(const char* name, double serial_ms, double omp_ms, double max_diff) {
  std::printf("%-12s serial %9.3f ms   omp %9.3f ms   speedup %5.2fx   max|diff| %.2e\n", name,
              serial_ms, omp_ms, serial_ms / omp_ms, max_diff);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Serial vs OpenMP kernel benchmark"};
  std::size_t negatives = 20000, positives = 200, dim = 144, sentences = 400;
  int repeats = 5, threads = 0;
  app.add_option("--negatives", negatives)->capture_default_str();
  app.add_option("--positives", positives)->capture_default_str();
  app.add_option("--dim", dim)->capture_default_str();
  app.add_option("--sentences", sentences)->capture_default_str();
  app.add_option("--repeats", repeats)->capture_default_str();
  app.add_option("--threads", threads, "0 keeps the OpenMP default")->capture_default_str();
  CLI11_PARSE(app, argc, argv);
  if (threads > 0) kernels::set_threads(threads);
  std::printf("threads: %d\n", kernels::max_threads());

  Rng rng(42);
  const Matrix neg = random_matrix(negatives, dim, rng);
  const Matrix pos = random_matrix(positives, dim, rng);
  std::vector<double> a, b;
  const double phi_serial = best_ms(repeats, [&] { a = kernels::serial::phi(neg, pos); });
  const double phi_omp = best_ms(repeats, [&] { b = kernels::omp::phi(neg, pos); });
  double diff = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) diff = std::max(diff, std::abs(a[k] - b[k]));
  report("phi", phi_serial, phi_omp, diff);

  SyntheticConfig sc;
  sc.train_sentences = sentences;
  sc.dev_sentences = 0;
  const auto data = make_synthetic(sc);
  const Vocabulary vocab = Vocabulary::from_corpus(data.train);
  EncoderConfig config;
  config.vocab_size = vocab.size();
  config.num_labels = 4;
  config.seed = 7;
  const ParameterStore params = init_parameters(config);
  std::vector<std::vector<std::size_t>> ids;
  std::vector<kernels::SentenceSpans> spans;
  for (const auto& s : data.train.sentences) {
    ids.push_back(vocab.ids(s));
    spans.push_back(enumerate_spans(s, config.max_span_width));
  }
  std::vector<std::vector<kernels::ScoredSpan>> x, y;
  const double score_serial =
      best_ms(repeats, [&] { x = kernels::serial::score_spans(ids, spans, params, config); });
  const double score_omp =
      best_ms(repeats, [&] { y = kernels::omp::score_spans(ids, spans, params, config); });
  diff = 0.0;
  for (std::size_t s = 0; s < x.size(); ++s)
    for (std::size_t k = 0; k < x[s].size(); ++k)
      for (std::size_t c = 0; c < x[s][k].probabilities.size(); ++c)
        diff = std::max(diff, std::abs(x[s][k].probabilities[c] - y[s][k].probabilities[c]));
  report("score_spans", score_serial, score_omp, diff);
  return 0;
}
