#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dsner/corpus.hpp"
#include "dsner/tensor.hpp"

namespace dsner {

enum class Strategy { All, Uniform, Weighted, TopNeg, BottomNeg };

std::string_view to_string(Strategy s);
// Accepts all, uniform, weighted, topneg, bottomneg.
Strategy strategy_from_string(std::string_view name);
std::string valid_strategies();

struct SamplingConfig {
  Strategy strategy = Strategy::TopNeg;
  // Fraction of the batch's negatives kept; for BottomNeg the fraction
  // taken from the low-similarity end. Ignored by All.
  double rate = 0.05;
  std::uint64_t seed = 1;

  void validate() const;
};

// Negative span identity used for the tie order: (sentence, start, end),
// where `sentence` is the sentence's position in its corpus.
struct NegativeKey {
  std::size_t sentence = 0;
  SpanIndex span;
  friend auto operator<=>(const NegativeKey&, const NegativeKey&) = default;
};

struct SelectionResult {
  // Indices into the candidate list, in selection order.
  std::vector<std::size_t> selected;
  // Phi per candidate (TopNeg, BottomNeg) or sampling weight (Weighted).
  std::vector<double> scores;
  Strategy strategy = Strategy::All;
  // No positives in the batch; negatives were drawn uniformly instead.
  bool zero_positive_fallback = false;
  // Weighted sampling found only zero weights and drew uniformly.
  bool zero_weight_fallback = false;
};

// min(ceil(n * rate), n). Products within 1e-9 of an integer are treated
// as that integer, so 0.1 * 30 selects 3.
std::size_t selection_size(std::size_t n, double rate);

// Mean cosine similarity of `negative` to every row of `positives`;
// nullopt when there are no positives. Zero-norm vectors throw Error.
std::optional<double> similarity_phi(std::span<const double> negative, const Matrix& positives);

SelectionResult select_all(std::size_t n);

// Highest Phi first; ties by key. Falls back to seeded uniform sampling
// when `positives` is empty.
SelectionResult select_top_neg(std::span<const NegativeKey> keys, const Matrix& negatives,
                               const Matrix& positives, const SamplingConfig& config,
                               std::uint64_t batch_index = 0);

// Lowest Phi first; ties by key. Takes ceil(N * fraction).
SelectionResult select_bottom(std::span<const NegativeKey> keys, const Matrix& negatives,
                              const Matrix& positives, double fraction,
                              std::uint64_t seed = 1, std::uint64_t batch_index = 0);

// Same ranking as above from precomputed scores (no RNG involved).
std::vector<std::size_t> rank_by_score(std::span<const NegativeKey> keys,
                                       std::span<const double> scores, bool descending);

SelectionResult select_uniform(std::size_t n, const SamplingConfig& config,
                               std::uint64_t batch_index = 0);

// Draws without replacement with probability proportional to P(O | span),
// renormalizing after each draw. Weights must lie in [0, 1].
SelectionResult select_weighted(std::span<const double> outside_probs,
                                const SamplingConfig& config, std::uint64_t batch_index = 0);

}  // namespace dsner
