#pragma once

#include <cstddef>
#include <map>
#include <string>

#include <json.hpp>

#include "dsner/corpus.hpp"

namespace dsner {

struct Counts {
  std::size_t true_positives = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;
};

struct Scores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  static Scores from(const Counts& c);
};

// Exact-match span scores. Also used as the annotation-quality report.
struct Metrics {
  Scores micro;
  std::map<std::string, Scores> per_type;
  Counts total;
  std::map<std::string, Counts> per_type_counts;

  // {"micro": {...}, "per_type": {...}, "counts": {...}} in that key order.
  nlohmann::ordered_json to_json() const;
};

// Scores spans of `predicted_provenance` in `predicted` against spans of
// `gold_provenance` in `gold`. Sentences are matched by id; a missing or
// extra id raises InputError.
Metrics score_corpus(const Corpus& predicted, Provenance predicted_provenance,
                     const Corpus& gold, Provenance gold_provenance);

}  // namespace dsner
