#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dsner/corpus.hpp"
#include "dsner/encoder.hpp"
#include "dsner/metrics.hpp"
#include "dsner/model.hpp"
#include "dsner/optimizer.hpp"
#include "dsner/sampling.hpp"

namespace dsner {

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  OptimizerConfig optimizer;
  // The sampling seed is derived from `seed`; sampling.seed is ignored.
  SamplingConfig sampling;
  // Architecture. vocab_size, num_labels and seed are filled in by train().
  EncoderConfig encoder;
  std::uint64_t seed = 1;
  // Which annotations of the training corpus are the labels.
  Provenance train_labels = Provenance::Gold;
  // Best checkpoint (plus "<path>.json" metadata); empty keeps it in memory.
  std::string checkpoint_path;
  // Per-batch selection records as JSON lines; empty disables.
  std::string selection_log_path;
  // Score the training set every epoch (train P/R columns).
  bool evaluate_train = true;

  void validate() const;
};

struct EpochDiagnostics {
  std::size_t epoch = 0;
  double train_p = 0.0;
  double train_r = 0.0;
  double dev_p = 0.0;
  double dev_r = 0.0;
  double dev_f1 = 0.0;
  double loss = 0.0;
  std::size_t zero_pos_batches = 0;
};

struct TrainState {
  std::size_t epoch = 0;
  std::size_t global_step = 0;
  Model model;  // parameters after the last epoch
  Model best;   // parameters at best_epoch
  double best_dev_f1 = -1.0;
  std::size_t best_epoch = 0;
  Metrics best_dev_metrics;
  std::vector<EpochDiagnostics> history;
};

struct LabeledRep {
  std::vector<double> rep;
  std::size_t label = 0;
};

// Summed cross-entropy -sum_pos log P(t*|s) - sum_neg log P(O|s), eval mode.
double compute_loss(const std::vector<LabeledRep>& positives,
                    const std::vector<std::vector<double>>& negatives,
                    const ParameterStore& params, const EncoderConfig& config);

// -sum_k log softmax(logits_k)[labels_k], via log-sum-exp.
double cross_entropy_sum(const std::vector<std::vector<double>>& logits,
                         std::span<const std::size_t> labels);

TrainState train(const Corpus& train_corpus, const Corpus& dev_corpus, const TrainConfig& config);

// Throws Error before the first completed epoch.
const std::vector<EpochDiagnostics>& epoch_diagnostics(const TrainState& state);

// Header: epoch,train_p,train_r,dev_p,dev_r,dev_f1,loss,zero_pos_batches
std::string diagnostics_csv(const std::vector<EpochDiagnostics>& rows);

}  // namespace dsner
