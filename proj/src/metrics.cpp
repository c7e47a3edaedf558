#include "dsner/metrics.hpp"

#include <set>
#include <tuple>
#include <unordered_map>

#include "dsner/errors.hpp"

namespace dsner {

Scores Scores::from(const Counts& c) {
  Scores s;
  s.precision = c.predicted ? static_cast<double>(c.true_positives) / c.predicted : 0.0;
  s.recall = c.gold ? static_cast<double>(c.true_positives) / c.gold : 0.0;
  double sum = s.precision + s.recall;
  s.f1 = sum > 0.0 ? 2.0 * s.precision * s.recall / sum : 0.0;
  return s;
}

namespace {

nlohmann::ordered_json scores_json(const Scores& s) {
  nlohmann::ordered_json j;
  j["precision"] = s.precision;
  j["recall"] = s.recall;
  j["f1"] = s.f1;
  return j;
}

nlohmann::ordered_json counts_json(const Counts& c) {
  nlohmann::ordered_json j;
  j["true_positives"] = c.true_positives;
  j["predicted"] = c.predicted;
  j["gold"] = c.gold;
  return j;
}

}  // namespace

nlohmann::ordered_json Metrics::to_json() const {
  nlohmann::ordered_json j;
  j["micro"] = scores_json(micro);
  j["per_type"] = nlohmann::ordered_json::object();
  for (const auto& [type, s] : per_type) j["per_type"][type] = scores_json(s);
  j["counts"] = nlohmann::ordered_json::object();
  j["counts"]["micro"] = counts_json(total);
  for (const auto& [type, c] : per_type_counts) j["counts"][type] = counts_json(c);
  return j;
}

Metrics score_corpus(const Corpus& predicted, Provenance predicted_provenance,
                     const Corpus& gold, Provenance gold_provenance) {
  if (predicted.size() != gold.size())
    throw InputError("sentence count mismatch between predicted and gold corpora");
  std::unordered_map<std::string, std::size_t> gold_index;
  for (std::size_t k = 0; k < gold.size(); ++k) gold_index.emplace(gold.sentences[k].id, k);

  Metrics m;
  using Key = std::tuple<std::size_t, std::size_t, std::string>;
  for (std::size_t k = 0; k < predicted.size(); ++k) {
    auto it = gold_index.find(predicted.sentences[k].id);
    if (it == gold_index.end())
      throw InputError("sentence '" + predicted.sentences[k].id + "' missing from gold corpus");

    std::set<Key> gold_keys;
    for (const auto& s : gold.spans(it->second, gold_provenance)) {
      if (gold_keys.emplace(s.start, s.end, s.type).second) {
        ++m.per_type_counts[s.type].gold;
        ++m.total.gold;
      }
    }
    std::set<Key> pred_keys;
    for (const auto& s : predicted.spans(k, predicted_provenance)) {
      if (!pred_keys.emplace(s.start, s.end, s.type).second) continue;
      auto& c = m.per_type_counts[s.type];
      ++c.predicted;
      ++m.total.predicted;
      if (gold_keys.count({s.start, s.end, s.type})) {
        ++c.true_positives;
        ++m.total.true_positives;
      }
    }
  }
  m.micro = Scores::from(m.total);
  for (const auto& [type, c] : m.per_type_counts) m.per_type[type] = Scores::from(c);
  return m;
}

}  // namespace dsner
