#include "dsner/corpus.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_set>

#include "dsner/errors.hpp"

namespace dsner {

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Gold: return "gold";
    case Provenance::Distant: return "distant";
    case Provenance::Predicted: return "predicted";
  }
  return "gold";
}

Provenance provenance_from_string(std::string_view name) {
  if (name == "gold") return Provenance::Gold;
  if (name == "distant") return Provenance::Distant;
  if (name == "predicted") return Provenance::Predicted;
  throw InputError("unknown provenance '" + std::string(name) + "'");
}

EntityTypeSet::EntityTypeSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
  std::set<std::string_view> seen;
  for (const auto& l : labels_) {
    if (l.empty() || l == kOutsideName)
      throw InputError("invalid entity type '" + l + "'");
    if (!seen.insert(l).second) throw InputError("duplicate entity type '" + l + "'");
  }
}

bool EntityTypeSet::contains(std::string_view label) const {
  return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

std::size_t EntityTypeSet::index(std::string_view label) const {
  if (label == kOutsideName) return kOutside;
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw InputError("entity type '" + std::string(label) + "' not declared");
  return static_cast<std::size_t>(it - labels_.begin()) + 1;
}

const std::string& EntityTypeSet::name(std::size_t index) const {
  static const std::string outside(kOutsideName);
  if (index == kOutside) return outside;
  if (index > labels_.size()) throw InputError("label index out of range");
  return labels_[index - 1];
}

EntityTypeSet merge_types(const EntityTypeSet& a, const EntityTypeSet& b) {
  std::set<std::string> all(a.labels().begin(), a.labels().end());
  all.insert(b.labels().begin(), b.labels().end());
  return EntityTypeSet(std::vector<std::string>(all.begin(), all.end()));
}

void Corpus::add(Sentence sentence, std::vector<LabeledSpan> spans) {
  sentences.push_back(std::move(sentence));
  annotations.push_back(std::move(spans));
}

std::optional<std::size_t> Corpus::find(std::string_view id) const {
  for (std::size_t k = 0; k < sentences.size(); ++k)
    if (sentences[k].id == id) return k;
  return std::nullopt;
}

std::vector<LabeledSpan> Corpus::spans(std::size_t k, Provenance provenance) const {
  std::vector<LabeledSpan> out;
  for (const auto& s : annotations.at(k))
    if (s.provenance == provenance) out.push_back(s);
  std::sort(out.begin(), out.end(), [](const LabeledSpan& a, const LabeledSpan& b) {
    return std::tie(a.start, a.end, a.type) < std::tie(b.start, b.end, b.type);
  });
  return out;
}

std::size_t Corpus::count(Provenance provenance) const {
  std::size_t total = 0;
  for (const auto& list : annotations)
    total += static_cast<std::size_t>(std::count_if(
        list.begin(), list.end(), [&](const LabeledSpan& s) { return s.provenance == provenance; }));
  return total;
}

void Corpus::clear(Provenance provenance) {
  for (auto& list : annotations)
    std::erase_if(list, [&](const LabeledSpan& s) { return s.provenance == provenance; });
}

EntityTypeSet Corpus::entity_types(Provenance provenance) const {
  std::set<std::string> types;
  for (const auto& list : annotations)
    for (const auto& s : list)
      if (s.provenance == provenance) types.insert(s.type);
  return EntityTypeSet(std::vector<std::string>(types.begin(), types.end()));
}

void Corpus::validate() const {
  if (annotations.size() != sentences.size())
    throw InputError("annotation table does not match sentence count");
  std::unordered_set<std::string> ids;
  for (std::size_t k = 0; k < sentences.size(); ++k) {
    const auto& s = sentences[k];
    if (s.tokens.empty()) throw InputError("sentence '" + s.id + "' is empty");
    if (!ids.insert(s.id).second) throw InputError("duplicate sentence id '" + s.id + "'");
    for (const auto& t : s.tokens)
      if (t.empty()) throw InputError("sentence '" + s.id + "' has an empty token");
    for (const auto& span : annotations[k]) {
      if (span.start > span.end || span.end >= s.size())
        throw InputError("span out of bounds in sentence '" + s.id + "'");
      if (span.type.empty() || span.type == EntityTypeSet::kOutsideName)
        throw InputError("span with invalid type in sentence '" + s.id + "'");
    }
    auto gold = spans(k, Provenance::Gold);
    for (std::size_t a = 1; a < gold.size(); ++a)
      if (gold[a - 1].overlaps(gold[a]))
        throw InputError("overlapping gold spans in sentence '" + s.id + "'");
  }
}

std::vector<SpanIndex> enumerate_spans(std::size_t length, std::size_t max_width) {
  std::vector<SpanIndex> out;
  for (std::size_t i = 0; i < length; ++i)
    for (std::size_t j = i; j < length && j - i <= max_width; ++j) out.push_back({i, j});
  return out;
}

std::vector<SpanIndex> enumerate_spans(const Sentence& sentence, std::size_t max_width) {
  return enumerate_spans(sentence.size(), max_width);
}

PosNegSplit split_pos_neg(const std::vector<SpanIndex>& spans,
                          const std::vector<LabeledSpan>& annotations) {
  std::map<SpanIndex, std::string> labeled;
  for (const auto& a : annotations) {
    auto [it, inserted] = labeled.emplace(a.index(), a.type);
    if (!inserted && it->second != a.type)
      throw InputError("conflicting types for span (" + std::to_string(a.start) + "," +
                       std::to_string(a.end) + "): " + it->second + " vs " + a.type);
  }
  PosNegSplit out;
  std::size_t matched = 0;
  for (const auto& s : spans) {
    auto it = labeled.find(s);
    if (it == labeled.end()) {
      out.negatives.push_back(s);
    } else {
      out.positives.push_back({s, it->second});
      ++matched;
    }
  }
  out.truncated = labeled.size() - matched;
  return out;
}

}  // namespace dsner
