#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "dsner/corpus.hpp"

namespace dsner {

struct ConllStats {
  // I-X tags with no open X span, rewritten to B-X.
  std::size_t repaired_tags = 0;
  std::size_t sentences = 0;
  std::size_t spans = 0;
};

// Column format: one token per line, whitespace separated columns, the
// first column is the token and the last the BIO tag. Blank lines end
// sentences; -DOCSTART- lines are skipped. Spans are tagged with
// `provenance`. Sentence ids are "<prefix><ordinal>".
Corpus parse_conll(std::string_view text, Provenance provenance = Provenance::Gold,
                   ConllStats* stats = nullptr, std::string_view id_prefix = "s");

// Two-column "token TAG" output of the spans with the given provenance.
// Overlapping spans cannot be BIO encoded and raise InputError.
std::string write_conll(const Corpus& corpus, Provenance provenance = Provenance::Gold);

Corpus read_conll_file(const std::string& path, Provenance provenance = Provenance::Gold,
                       ConllStats* stats = nullptr);
void write_text_file(const std::string& path, std::string_view contents);
std::string read_text_file(const std::string& path);

}  // namespace dsner
