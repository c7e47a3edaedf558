#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dsner/corpus.hpp"
#include "dsner/metrics.hpp"

namespace dsner {

// Surface form (token sequence) to entity type gazetteer, matched
// longest-first, left to right, without overlaps.
class Dictionary {
 public:
  explicit Dictionary(bool case_sensitive = true) : case_sensitive_(case_sensitive) {}

  // Rejects empty forms and any repeated surface form.
  void add(const std::vector<std::string>& form, std::string type);
  void add(std::string_view surface, std::string type);

  bool case_sensitive() const { return case_sensitive_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t max_length() const { return max_length_; }

  // Type of the exact token sequence, or nullptr.
  const std::string* lookup(std::span<const std::string> tokens) const;

  // Entries in key order, as "surface form<TAB>TYPE" lines.
  std::string to_tsv() const;

 private:
  std::string key(std::span<const std::string> tokens) const;

  bool case_sensitive_;
  std::size_t max_length_ = 0;
  std::map<std::string, std::string> entries_;
  std::map<std::string, std::string> surfaces_;
};

// TSV: "surface form<TAB>TYPE" per line, '#' comment lines and blank lines ignored.
Dictionary parse_dictionary(std::string_view text, bool case_sensitive = true);
Dictionary load_dictionary(const std::string& path, bool case_sensitive = true);

// Replaces any distant spans with dictionary matches; other provenances are kept.
Corpus annotate(const Corpus& corpus, const Dictionary& dictionary);

using AnnotationReport = Metrics;

// Distant spans of `distant` against gold spans of `gold`, matched by sentence id.
AnnotationReport evaluate_annotation(const Corpus& distant, const Corpus& gold);

// Dictionary of a seeded uniform (1 - delete_rate) fraction of the gold surface
// forms. Forms seen with more than one type are left out.
Dictionary build_noisy_dictionary(const Corpus& gold, double delete_rate, std::uint64_t seed,
                                  bool case_sensitive = true);

}  // namespace dsner
