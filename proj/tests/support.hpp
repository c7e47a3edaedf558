#pragma once

// Generators and independent oracles shared by the test binaries. Nothing
// here calls into the library code it is used to check.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <tuple>
#include <unistd.h>
#include <vector>

#include "dsner/corpus.hpp"
#include "dsner/rng.hpp"
#include "dsner/tensor.hpp"

namespace testing {

inline const std::vector<std::string> kTypes = {"PER", "LOC", "ORG"};

inline dsner::Sentence random_sentence(dsner::Rng& rng, std::size_t n, const std::string& id) {
  static const std::vector<std::string> words = {"alpha", "beta", "gamma", "delta", "Paris",
                                                 "Obama", "said", ",",     ".",     "the"};
  dsner::Sentence s;
  s.id = id;
  for (std::size_t k = 0; k < n; ++k) s.tokens.push_back(words[rng.below(words.size())]);
  return s;
}

// Non-overlapping spans with random types, widths up to max_width + 1 tokens.
inline std::vector<dsner::LabeledSpan> random_spans(dsner::Rng& rng, std::size_t n,
                                                    std::size_t max_width,
                                                    dsner::Provenance prov) {
  std::vector<dsner::LabeledSpan> out;
  std::size_t pos = 0;
  while (pos < n) {
    if (rng.bernoulli(0.4)) {
      const std::size_t w = rng.below(std::min(max_width + 1, n - pos));
      out.push_back({pos, pos + w, kTypes[rng.below(kTypes.size())], prov});
      pos += w + 1 + rng.below(2);
    } else {
      ++pos;
    }
  }
  return out;
}

inline dsner::Matrix random_matrix(dsner::Rng& rng, std::size_t rows, std::size_t cols) {
  dsner::Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = rng.uniform(-1.0, 1.0);
  return m;
}

// Mean pairwise cosine, written out longhand.
inline double brute_phi(const dsner::Matrix& negatives, std::size_t row,
                        const dsner::Matrix& positives) {
  double total = 0.0;
  for (std::size_t p = 0; p < positives.rows(); ++p) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t c = 0; c < negatives.cols(); ++c) {
      ab += negatives(row, c) * positives(p, c);
      aa += negatives(row, c) * negatives(row, c);
      bb += positives(p, c) * positives(p, c);
    }
    total += ab / (std::sqrt(aa) * std::sqrt(bb));
  }
  return total / static_cast<double>(positives.rows());
}

struct OracleCounts {
  std::size_t tp = 0, pred = 0, gold = 0;
  double p() const { return pred ? double(tp) / double(pred) : 0.0; }
  double r() const { return gold ? double(tp) / double(gold) : 0.0; }
  double f() const { return p() + r() > 0 ? 2 * p() * r() / (p() + r()) : 0.0; }
};

using SpanKey = std::tuple<std::string, std::size_t, std::size_t, std::string>;

// Exact-match counting over (sentence id, start, end, type) tuples, optionally
// restricted to one type.
inline OracleCounts count_matches(const dsner::Corpus& predicted, dsner::Provenance pred_prov,
                                  const dsner::Corpus& gold, dsner::Provenance gold_prov,
                                  const std::string& only_type = "") {
  std::set<SpanKey> g, p;
  auto collect = [&](const dsner::Corpus& c, dsner::Provenance prov, std::set<SpanKey>& out) {
    for (std::size_t k = 0; k < c.size(); ++k)
      for (const auto& a : c.annotations[k])
        if (a.provenance == prov && (only_type.empty() || a.type == only_type))
          out.insert({c.sentences[k].id, a.start, a.end, a.type});
  };
  collect(gold, gold_prov, g);
  collect(predicted, pred_prov, p);
  OracleCounts o;
  o.gold = g.size();
  o.pred = p.size();
  for (const auto& k : p) o.tp += g.count(k);
  return o;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
  static std::atomic<int> counter{0};
  auto dir = std::filesystem::temp_directory_path() /
             ("dsner-test-" + name + "-" + std::to_string(::getpid()) + "-" +
              std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
