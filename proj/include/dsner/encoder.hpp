#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dsner/corpus.hpp"
#include "dsner/rng.hpp"
#include "dsner/tensor.hpp"

namespace dsner {

struct EncoderConfig {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 32;       // d_e
  std::size_t context_dim = 64;     // d_h
  std::size_t width_dim = 16;       // d_w
  std::size_t context_window = 2;   // tokens mixed on each side
  std::size_t max_span_width = 8;   // L: spans satisfy j - i <= L
  std::size_t hidden = 150;
  double dropout = 0.2;
  std::size_t num_labels = 0;       // entity types + O
  std::uint64_t seed = 1;
  std::string precision = "double";

  void validate() const;
  std::size_t window_dim() const { return (2 * context_window + 1) * embed_dim; }
  std::size_t span_dim() const { return 2 * context_dim + width_dim; }
};

// Token strings to ids. Id 0 is reserved for unknown tokens.
class Vocabulary {
 public:
  static constexpr std::size_t kUnknown = 0;
  static constexpr std::string_view kUnknownToken = "<unk>";

  Vocabulary();
  static Vocabulary from_corpus(const Corpus& corpus);

  std::size_t add(const std::string& word);
  std::size_t id(const std::string& word) const;
  std::vector<std::size_t> ids(const Sentence& sentence) const;
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
};

namespace param {
inline constexpr std::string_view kEmbedding = "embedding";          // [V, d_e]
inline constexpr std::string_view kContextWeight = "context.weight";  // [d_h, (2w+1) d_e]
inline constexpr std::string_view kContextBias = "context.bias";      // [1, d_h]
inline constexpr std::string_view kWidth = "width";                   // [L+1, d_w]
inline constexpr std::string_view kHiddenWeight = "ffnn.hidden.weight";  // [H, 2 d_h + d_w]
inline constexpr std::string_view kHiddenBias = "ffnn.hidden.bias";      // [1, H]
inline constexpr std::string_view kOutWeight = "ffnn.out.weight";        // [K, H]
inline constexpr std::string_view kOutBias = "ffnn.out.bias";            // [1, K]
}  // namespace param

// Uniform(-a, a) weights with a = sqrt(6 / (rows + cols)), zero biases.
ParameterStore init_parameters(const EncoderConfig& config);

// Contextual vectors h_1..h_n (n x d_h). Dropout on the output only when
// `training` is set, in which case `rng` must be non-null.
Matrix encode(std::span<const std::size_t> token_ids, const ParameterStore& params,
              const EncoderConfig& config, bool training = false, Rng* rng = nullptr);

struct SpanRepresentation {
  std::vector<double> values;  // [h_i ; h_j ; f(j - i)]
  SpanIndex source;
};

SpanRepresentation span_rep(const Matrix& h, std::size_t i, std::size_t j,
                            const ParameterStore& params, const EncoderConfig& config);

struct ClassifierOutput {
  std::vector<double> logits;
  std::vector<double> probabilities;
};

// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);
double log_softmax_at(std::span<const double> logits, std::size_t index);

// Two affine layers with tanh between them and softmax on top.
ClassifierOutput classify(std::span<const double> rep, const ParameterStore& params,
                          const EncoderConfig& config, bool training = false,
                          Rng* rng = nullptr);

// Eval-mode scorer for every span of one sentence. The first classifier
// layer is split over the three blocks of the span representation and
// applied per token, so scoring a span costs O(H K) instead of O(H D).
class SentenceScorer {
 public:
  SentenceScorer(std::span<const std::size_t> token_ids, const ParameterStore& params,
                 const EncoderConfig& config);

  const Matrix& contextual() const { return h_; }
  std::size_t length() const { return h_.rows(); }
  SpanRepresentation representation(SpanIndex span) const;
  std::vector<double> logits(SpanIndex span) const;
  std::vector<double> probabilities(SpanIndex span) const;

 private:
  const ParameterStore& params_;
  const EncoderConfig& config_;
  Matrix h_;
  Matrix start_proj_;  // W1[:, 0:d_h] h_t
  Matrix end_proj_;    // W1[:, d_h:2d_h] h_t
  Matrix width_proj_;  // W1[:, 2d_h:] f(w) + b1
};

struct SpanTarget {
  SpanIndex span;
  std::size_t label = 0;
};

struct SentenceTargets {
  std::vector<std::size_t> token_ids;
  std::vector<SpanTarget> targets;
};

// Forward record of the summed cross-entropy over a batch of span targets:
//   loss = -sum log P(label | span)
// backward() adds the analytic gradient into the store's grad buffers.
class LossGraph {
 public:
  LossGraph(const ParameterStore& params, const EncoderConfig& config);

  // Runs the forward pass and returns the loss. Dropout is active when
  // `training` is set (rng required).
  double forward(const std::vector<SentenceTargets>& batch, bool training = false,
                 Rng* rng = nullptr);

  double loss() const { return loss_; }
  std::size_t sample_count() const { return samples_; }
  // Per-target probabilities, in batch order.
  const std::vector<std::vector<double>>& probabilities() const { return probs_; }

  // Throws Error unless forward() ran since the last backward().
  void backward(ParameterStore& params);

 private:
  struct SentenceTape {
    std::vector<std::size_t> ids;
    Matrix pre_dropout;  // tanh output u
    Matrix keep;         // dropout scale per entry (empty when not training)
    Matrix h;
    std::vector<SpanTarget> targets;
    Matrix hidden;       // tanh of first classifier layer per target
    Matrix hidden_keep;
    std::size_t first_prob = 0;
  };

  const ParameterStore& params_;
  const EncoderConfig& config_;
  std::vector<SentenceTape> tapes_;
  std::vector<std::vector<double>> probs_;
  double loss_ = 0.0;
  std::size_t samples_ = 0;
  bool recorded_ = false;
  bool training_ = false;
};

}  // namespace dsner
