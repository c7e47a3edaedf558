#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dsner {

enum class Provenance { Gold, Distant, Predicted };

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view name);

struct Sentence {
  std::string id;
  std::vector<std::string> tokens;

  std::size_t size() const { return tokens.size(); }
};

// Inclusive token interval [start, end].
struct SpanIndex {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t width() const { return end - start; }
  friend auto operator<=>(const SpanIndex&, const SpanIndex&) = default;
};

struct LabeledSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  std::string type;
  Provenance provenance = Provenance::Gold;

  SpanIndex index() const { return {start, end}; }
  bool overlaps(const LabeledSpan& other) const {
    return start <= other.end && other.start <= end;
  }
  friend bool operator==(const LabeledSpan&, const LabeledSpan&) = default;
};

// Entity labels plus the implicit O label, which always has index 0.
class EntityTypeSet {
 public:
  static constexpr std::size_t kOutside = 0;
  static constexpr std::string_view kOutsideName = "O";

  EntityTypeSet() = default;
  explicit EntityTypeSet(std::vector<std::string> labels);

  // Number of labels including O.
  std::size_t size() const { return labels_.size() + 1; }
  const std::vector<std::string>& labels() const { return labels_; }
  bool contains(std::string_view label) const;
  std::size_t index(std::string_view label) const;
  const std::string& name(std::size_t index) const;

  friend bool operator==(const EntityTypeSet&, const EntityTypeSet&) = default;

 private:
  std::vector<std::string> labels_;
};

enum class Split { Train, Dev, Test };

// Sentences with span annotations of mixed provenance. annotations[k]
// belongs to sentences[k].
struct Corpus {
  std::vector<Sentence> sentences;
  std::vector<std::vector<LabeledSpan>> annotations;
  Split split = Split::Train;

  std::size_t size() const { return sentences.size(); }
  bool empty() const { return sentences.empty(); }

  void add(Sentence sentence, std::vector<LabeledSpan> spans = {});
  std::optional<std::size_t> find(std::string_view id) const;

  // Annotations of sentence k restricted to one provenance, sorted by (start, end).
  std::vector<LabeledSpan> spans(std::size_t k, Provenance provenance) const;
  std::size_t count(Provenance provenance) const;

  // Drops every annotation of the given provenance.
  void clear(Provenance provenance);

  // Sorted union of the entity types used by annotations of this provenance.
  EntityTypeSet entity_types(Provenance provenance) const;

  // Throws InputError on any broken invariant (empty tokens, bad bounds,
  // overlapping gold spans, duplicate sentence ids).
  void validate() const;
};

EntityTypeSet merge_types(const EntityTypeSet& a, const EntityTypeSet& b);

// All (i, j) with 0 <= j - i <= max_width and j < n, in lexicographic order.
std::vector<SpanIndex> enumerate_spans(const Sentence& sentence, std::size_t max_width);
std::vector<SpanIndex> enumerate_spans(std::size_t length, std::size_t max_width);

struct TypedSpan {
  SpanIndex span;
  std::string type;
};

struct PosNegSplit {
  std::vector<TypedSpan> positives;
  std::vector<SpanIndex> negatives;
  // Annotations wider than the enumeration limit, left out of positives.
  std::size_t truncated = 0;
};

// Partitions the enumerated universe into annotated spans and O spans.
// Conflicting types on one (i, j) raise InputError.
PosNegSplit split_pos_neg(const std::vector<SpanIndex>& spans,
                          const std::vector<LabeledSpan>& annotations);

}  // namespace dsner
