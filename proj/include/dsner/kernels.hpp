#pragma once

// Data-parallel kernels. Each has a serial reference kept for tests and
// the benchmark. Parallel versions write disjoint outputs per index and
// perform reductions serially, so results do not depend on thread count.

#include <cstddef>
#include <vector>

#include "dsner/encoder.hpp"
#include "dsner/tensor.hpp"

namespace dsner::kernels {

void set_threads(int threads);
int max_threads();

// Mean cosine similarity of every row of `negatives` to all rows of
// `positives`. Throws Error on a zero-norm row or empty positives.
namespace serial {
std::vector<double> phi(const Matrix& negatives, const Matrix& positives);
}
namespace omp {
std::vector<double> phi(const Matrix& negatives, const Matrix& positives);
}

struct ScoredSpan {
  SpanIndex span;
  std::vector<double> probabilities;
};

// Eval-mode label distributions for the given spans of each sentence.
using SentenceSpans = std::vector<SpanIndex>;
namespace serial {
std::vector<std::vector<ScoredSpan>> score_spans(
    const std::vector<std::vector<std::size_t>>& token_ids, const std::vector<SentenceSpans>& spans,
    const ParameterStore& params, const EncoderConfig& config);
}
namespace omp {
std::vector<std::vector<ScoredSpan>> score_spans(
    const std::vector<std::vector<std::size_t>>& token_ids, const std::vector<SentenceSpans>& spans,
    const ParameterStore& params, const EncoderConfig& config);
}

// Eval-mode span representations for the given spans of each sentence,
// stacked in sentence order.
Matrix span_representations(const std::vector<std::vector<std::size_t>>& token_ids,
                            const std::vector<SentenceSpans>& spans,
                            const ParameterStore& params, const EncoderConfig& config);

}  // namespace dsner::kernels
