#include "dsner/evaluation.hpp"

#include <algorithm>
#include <set>
#include <tuple>
#include <unordered_map>

#include <json.hpp>

#include "dsner/errors.hpp"
#include "dsner/kernels.hpp"

namespace dsner {

std::vector<Candidate> resolve_overlaps(std::vector<Candidate> candidates) {
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.span < b.span;
  });
  std::vector<Candidate> kept;
  for (const auto& c : candidates) {
    bool clash = std::any_of(kept.begin(), kept.end(), [&](const Candidate& k) {
      return c.span.start <= k.span.end && k.span.start <= c.span.end;
    });
    if (!clash) kept.push_back(c);
  }
  std::sort(kept.begin(), kept.end(),
            [](const Candidate& a, const Candidate& b) { return a.span < b.span; });
  return kept;
}

namespace {

std::vector<LabeledSpan> decode(const std::vector<kernels::ScoredSpan>& scored,
                                const EntityTypeSet& types, const DecodeOptions& options) {
  std::vector<Candidate> candidates;
  for (const auto& s : scored) {
    const auto& p = s.probabilities;
    const auto best = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    if (best != EntityTypeSet::kOutside) candidates.push_back({s.span, best, p[best]});
  }
  if (options.resolve_overlaps) {
    candidates = resolve_overlaps(std::move(candidates));
  } else {
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& a, const Candidate& b) { return a.span < b.span; });
  }
  std::vector<LabeledSpan> out;
  for (const auto& c : candidates)
    out.push_back({c.span.start, c.span.end, types.name(c.label), Provenance::Predicted});
  return out;
}

}  // namespace

std::vector<LabeledSpan> predict(const Sentence& sentence, const Model& model,
                                 const DecodeOptions& options) {
  auto scored = kernels::serial::score_spans(
      {model.vocab.ids(sentence)}, {enumerate_spans(sentence, model.config.max_span_width)},
      model.params, model.config);
  return decode(scored.front(), model.types, options);
}

Corpus predict_corpus(const Corpus& corpus, const Model& model, const DecodeOptions& options) {
  std::vector<std::vector<std::size_t>> ids;
  std::vector<kernels::SentenceSpans> spans;
  ids.reserve(corpus.size());
  spans.reserve(corpus.size());
  for (const auto& s : corpus.sentences) {
    ids.push_back(model.vocab.ids(s));
    spans.push_back(enumerate_spans(s, model.config.max_span_width));
  }
  auto scored = kernels::omp::score_spans(ids, spans, model.params, model.config);
  Corpus out = corpus;
  out.clear(Provenance::Predicted);
  for (std::size_t k = 0; k < out.size(); ++k)
    for (auto& span : decode(scored[k], model.types, options))
      out.annotations[k].push_back(std::move(span));
  return out;
}

Metrics micro_f1(const Corpus& predicted, const Corpus& gold) {
  return score_corpus(predicted, Provenance::Predicted, gold, Provenance::Gold);
}

std::vector<SentenceErrors> list_errors(const Corpus& predicted, const Corpus& gold) {
  if (predicted.size() != gold.size()) throw InputError("sentence count mismatch");
  std::vector<SentenceErrors> out;
  using Key = std::tuple<std::size_t, std::size_t, std::string>;
  for (std::size_t k = 0; k < predicted.size(); ++k) {
    auto g = gold.find(predicted.sentences[k].id);
    if (!g) throw InputError("sentence '" + predicted.sentences[k].id + "' missing from gold");
    auto pred = predicted.spans(k, Provenance::Predicted);
    auto ref = gold.spans(*g, Provenance::Gold);
    std::set<Key> pred_keys, gold_keys;
    for (const auto& s : pred) pred_keys.emplace(s.start, s.end, s.type);
    for (const auto& s : ref) gold_keys.emplace(s.start, s.end, s.type);
    SentenceErrors e{predicted.sentences[k].id, {}, {}};
    for (const auto& s : pred)
      if (!gold_keys.count({s.start, s.end, s.type})) e.false_positives.push_back(s);
    for (const auto& s : ref)
      if (!pred_keys.count({s.start, s.end, s.type})) e.false_negatives.push_back(s);
    if (!e.false_positives.empty() || !e.false_negatives.empty()) out.push_back(std::move(e));
  }
  return out;
}

std::string errors_to_jsonl(const std::vector<SentenceErrors>& errors) {
  auto spans_json = [](const std::vector<LabeledSpan>& spans) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& s : spans) {
      nlohmann::ordered_json j;
      j["start"] = s.start;
      j["end"] = s.end;
      j["type"] = s.type;
      arr.push_back(j);
    }
    return arr;
  };
  std::string out;
  for (const auto& e : errors) {
    nlohmann::ordered_json j;
    j["sentence"] = e.sentence_id;
    j["false_positives"] = spans_json(e.false_positives);
    j["false_negatives"] = spans_json(e.false_negatives);
    out += j.dump() + '\n';
  }
  return out;
}

}  // namespace dsner
