#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dsner/corpus.hpp"
#include "dsner/metrics.hpp"
#include "dsner/model.hpp"

namespace dsner {

struct DecodeOptions {
  // Greedy removal of overlapping candidates. Off keeps every non-O span.
  bool resolve_overlaps = true;
};

struct Candidate {
  SpanIndex span;
  std::size_t label = 0;
  double confidence = 0.0;  // probability of the predicted entity label
};

// Keeps candidates in descending confidence (ties by (start, end)) that do
// not overlap an already kept one. Output is sorted by (start, end).
std::vector<Candidate> resolve_overlaps(std::vector<Candidate> candidates);

// Argmax label for every enumerated span; non-O argmaxes become candidates.
std::vector<LabeledSpan> predict(const Sentence& sentence, const Model& model,
                                 const DecodeOptions& options = {});

// Copy of `corpus` with predicted spans replaced by fresh predictions.
// Sentences are scored in parallel.
Corpus predict_corpus(const Corpus& corpus, const Model& model, const DecodeOptions& options = {});

// Predicted spans of `predicted` against gold spans of `gold`.
Metrics micro_f1(const Corpus& predicted, const Corpus& gold);

struct SentenceErrors {
  std::string sentence_id;
  std::vector<LabeledSpan> false_positives;
  std::vector<LabeledSpan> false_negatives;
};

// Sentences with at least one error, in corpus order.
std::vector<SentenceErrors> list_errors(const Corpus& predicted, const Corpus& gold);
std::string errors_to_jsonl(const std::vector<SentenceErrors>& errors);

}  // namespace dsner
