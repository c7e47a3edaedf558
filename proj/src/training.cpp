#include "dsner/training.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "dsner/errors.hpp"
#include "dsner/evaluation.hpp"
#include "dsner/kernels.hpp"
#include "dsner/rng.hpp"

namespace dsner {

void TrainConfig::validate() const {
  if (epochs < 1) throw InputError("epochs must be >= 1");
  if (batch_size < 1) throw InputError("batch size must be >= 1");
  if (!(optimizer.learning_rate > 0.0)) throw InputError("learning rate must be > 0");
  optimizer.validate();
  sampling.validate();
}

double cross_entropy_sum(const std::vector<std::vector<double>>& logits,
                         std::span<const std::size_t> labels) {
  if (logits.size() != labels.size()) throw Error("cross_entropy_sum: size mismatch");
  double loss = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) loss -= log_softmax_at(logits[k], labels[k]);
  return loss;
}

double compute_loss(const std::vector<LabeledRep>& positives,
                    const std::vector<std::vector<double>>& negatives,
                    const ParameterStore& params, const EncoderConfig& config) {
  std::vector<std::vector<double>> logits;
  std::vector<std::size_t> labels;
  for (const auto& p : positives) {
    logits.push_back(classify(p.rep, params, config).logits);
    labels.push_back(p.label);
  }
  for (const auto& n : negatives) {
    logits.push_back(classify(n, params, config).logits);
    labels.push_back(EntityTypeSet::kOutside);
  }
  return cross_entropy_sum(logits, labels);
}

const std::vector<EpochDiagnostics>& epoch_diagnostics(const TrainState& state) {
  if (state.history.empty()) throw Error("no completed epochs");
  return state.history;
}

std::string diagnostics_csv(const std::vector<EpochDiagnostics>& rows) {
  std::string out = "epoch,train_p,train_r,dev_p,dev_r,dev_f1,loss,zero_pos_batches\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%zu\n", r.epoch, r.train_p,
                  r.train_r, r.dev_p, r.dev_r, r.dev_f1, r.loss, r.zero_pos_batches);
    out += buf;
  }
  return out;
}

namespace {

struct PreparedSentence {
  std::size_t corpus_index = 0;
  std::vector<std::size_t> ids;
  std::vector<SpanTarget> positives;
  std::vector<SpanIndex> negatives;
};

std::vector<PreparedSentence> prepare(const Corpus& corpus, Provenance labels, const Model& model,
                                      std::size_t* truncated) {
  std::vector<PreparedSentence> out;
  out.reserve(corpus.size());
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    const auto& sentence = corpus.sentences[k];
    auto split = split_pos_neg(enumerate_spans(sentence, model.config.max_span_width),
                               corpus.spans(k, labels));
    *truncated += split.truncated;
    PreparedSentence p;
    p.corpus_index = k;
    p.ids = model.vocab.ids(sentence);
    for (const auto& pos : split.positives)
      p.positives.push_back({pos.span, model.types.index(pos.type)});
    p.negatives = std::move(split.negatives);
    out.push_back(std::move(p));
  }
  return out;
}

void write_metadata(const std::string& path, const TrainState& state, const TrainConfig& config) {
  nlohmann::ordered_json j;
  j["best_epoch"] = state.best_epoch;
  j["best_dev_f1"] = state.best_dev_f1;
  j["best_dev_precision"] = state.best_dev_metrics.micro.precision;
  j["best_dev_recall"] = state.best_dev_metrics.micro.recall;
  j["epochs"] = config.epochs;
  j["batch_size"] = config.batch_size;
  j["seed"] = config.seed;
  j["strategy"] = std::string(to_string(config.sampling.strategy));
  j["rate"] = config.sampling.rate;
  j["optimizer"] = std::string(to_string(config.optimizer.kind));
  j["learning_rate"] = config.optimizer.learning_rate;
  j["train_labels"] = std::string(to_string(config.train_labels));
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << j.dump(2) << '\n';
}

}  // namespace

TrainState train(const Corpus& train_corpus, const Corpus& dev_corpus, const TrainConfig& config) {
  config.validate();
  train_corpus.validate();
  dev_corpus.validate();
  if (train_corpus.empty()) throw InputError("training corpus is empty");

  TrainState state;
  Model& model = state.model;
  model.types = merge_types(train_corpus.entity_types(config.train_labels),
                            dev_corpus.entity_types(Provenance::Gold));
  model.vocab = Vocabulary::from_corpus(train_corpus);
  model.config = config.encoder;
  model.config.vocab_size = model.vocab.size();
  model.config.num_labels = model.types.size();
  model.config.seed = derive_seed(config.seed, 1);
  model.params = init_parameters(model.config);

  SamplingConfig sampling = config.sampling;
  sampling.seed = derive_seed(config.seed, 4);

  std::size_t truncated = 0;
  auto data = prepare(train_corpus, config.train_labels, model, &truncated);

  Optimizer optimizer(config.optimizer);
  Rng dropout_rng(derive_seed(config.seed, 3));
  std::ofstream selection_log;
  if (!config.selection_log_path.empty()) {
    selection_log.open(config.selection_log_path);
    if (!selection_log) throw InputError("cannot write '" + config.selection_log_path + "'");
  }

  std::vector<std::size_t> order(data.size());
  std::size_t batch_counter = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    Rng shuffle_rng(derive_seed(config.seed, 1000 + epoch));
    shuffle_rng.shuffle(order);

    EpochDiagnostics diag;
    diag.epoch = epoch;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const std::uint64_t batch_index = batch_counter++;

      std::vector<std::vector<std::size_t>> ids;
      std::vector<kernels::SentenceSpans> neg_spans, pos_spans;
      std::vector<NegativeKey> keys;
      std::vector<std::size_t> owner;  // batch-local sentence of each negative
      std::size_t positives = 0;
      for (std::size_t b = begin; b < end; ++b) {
        const auto& s = data[order[b]];
        ids.push_back(s.ids);
        neg_spans.push_back(s.negatives);
        kernels::SentenceSpans ps;
        for (const auto& t : s.positives) ps.push_back(t.span);
        positives += ps.size();
        pos_spans.push_back(std::move(ps));
        for (const auto& n : s.negatives) {
          keys.push_back({s.corpus_index, n});
          owner.push_back(b - begin);
        }
      }
      if (positives == 0) ++diag.zero_pos_batches;

      SelectionResult sel;
      switch (sampling.strategy) {
        case Strategy::All:
          sel = select_all(keys.size());
          break;
        case Strategy::Uniform:
          sel = select_uniform(keys.size(), sampling, batch_index);
          break;
        case Strategy::Weighted: {
          auto scored = kernels::omp::score_spans(ids, neg_spans, model.params, model.config);
          std::vector<double> outside;
          outside.reserve(keys.size());
          for (const auto& sentence : scored)
            for (const auto& s : sentence)
              outside.push_back(s.probabilities[EntityTypeSet::kOutside]);
          sel = select_weighted(outside, sampling, batch_index);
          break;
        }
        case Strategy::TopNeg:
        case Strategy::BottomNeg: {
          Matrix neg_reps, pos_reps;
          if (positives > 0) {
            neg_reps = kernels::span_representations(ids, neg_spans, model.params, model.config);
            pos_reps = kernels::span_representations(ids, pos_spans, model.params, model.config);
          } else {
            neg_reps = Matrix(keys.size(), model.config.span_dim());
          }
          sel = sampling.strategy == Strategy::TopNeg
                    ? select_top_neg(keys, neg_reps, pos_reps, sampling, batch_index)
                    : select_bottom(keys, neg_reps, pos_reps, sampling.rate, sampling.seed,
                                    batch_index);
          break;
        }
      }

      if (selection_log.is_open()) {
        nlohmann::ordered_json j;
        j["batch"] = batch_index;
        j["N"] = keys.size();
        j["k_selected"] = sel.selected.size();
        j["strategy"] = std::string(to_string(sel.strategy));
        auto phi = nlohmann::ordered_json::array();
        if (!sel.scores.empty())
          for (auto idx : sel.selected) phi.push_back(sel.scores[idx]);
        j["phi"] = phi;
        selection_log << j.dump() << '\n';
      }

      std::vector<SentenceTargets> batch(end - begin);
      for (std::size_t b = begin; b < end; ++b) {
        const auto& s = data[order[b]];
        batch[b - begin].token_ids = s.ids;
        batch[b - begin].targets = s.positives;
      }
      for (auto idx : sel.selected)
        batch[owner[idx]].targets.push_back({keys[idx].span, EntityTypeSet::kOutside});

      LossGraph graph(model.params, model.config);
      const double loss = graph.forward(batch, true, &dropout_rng);
      if (!std::isfinite(loss)) throw DivergenceError(batch_index, "non-finite loss");
      diag.loss += loss;
      model.params.zero_grad();
      graph.backward(model.params);
      optimizer.step(model.params);
      for (const auto& p : model.params.params())
        for (double v : p.value.data())
          if (!std::isfinite(v))
            throw DivergenceError(batch_index, "non-finite value in " + p.name + " after update");
      ++state.global_step;
    }

    if (config.evaluate_train) {
      auto predicted = predict_corpus(train_corpus, model);
      auto m = score_corpus(predicted, Provenance::Predicted, train_corpus, config.train_labels);
      diag.train_p = m.micro.precision;
      diag.train_r = m.micro.recall;
    }
    auto dev_metrics = micro_f1(predict_corpus(dev_corpus, model), dev_corpus);
    diag.dev_p = dev_metrics.micro.precision;
    diag.dev_r = dev_metrics.micro.recall;
    diag.dev_f1 = dev_metrics.micro.f1;
    state.history.push_back(diag);
    state.epoch = epoch;

    if (diag.dev_f1 > state.best_dev_f1) {
      state.best_dev_f1 = diag.dev_f1;
      state.best_epoch = epoch;
      state.best_dev_metrics = dev_metrics;
      state.best = model;
      if (!config.checkpoint_path.empty()) {
        save_checkpoint(config.checkpoint_path, state.best);
        write_metadata(config.checkpoint_path + ".json", state, config);
      }
    }
  }
  return state;
}

}  // namespace dsner
