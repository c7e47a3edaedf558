#include "dsner/conll.hpp"

#include <fstream>
#include <sstream>

#include "dsner/errors.hpp"

namespace dsner {
namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    std::size_t start = pos;
    while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t') ++pos;
    if (pos > start) out.push_back(line.substr(start, pos - start));
  }
  return out;
}

struct Pending {
  Sentence sentence;
  std::vector<LabeledSpan> spans;
  bool open = false;
};

}  // namespace

Corpus parse_conll(std::string_view text, Provenance provenance, ConllStats* stats,
                   std::string_view id_prefix) {
  Corpus corpus;
  ConllStats local;
  Pending cur;

  auto flush = [&] {
    if (cur.sentence.tokens.empty()) return;
    cur.sentence.id = std::string(id_prefix) + std::to_string(corpus.size());
    local.spans += cur.spans.size();
    corpus.add(std::move(cur.sentence), std::move(cur.spans));
    cur = Pending{};
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    auto cols = split_ws(line);
    if (cols.empty()) {
      flush();
      continue;
    }
    if (cols.front() == "-DOCSTART-") {
      flush();
      continue;
    }
    if (cols.size() < 2) throw ParseError(line_no, "expected token and tag columns");

    std::string_view tag = cols.back();
    std::size_t idx = cur.sentence.tokens.size();
    cur.sentence.tokens.emplace_back(cols.front());

    if (tag == "O") {
      cur.open = false;
      continue;
    }
    if (tag.size() < 3 || tag[1] != '-' || (tag[0] != 'B' && tag[0] != 'I'))
      throw ParseError(line_no, "malformed tag '" + std::string(tag) + "'");
    std::string type(tag.substr(2));
    if (type == EntityTypeSet::kOutsideName)
      throw ParseError(line_no, "malformed tag '" + std::string(tag) + "'");

    bool continues = tag[0] == 'I' && cur.open && cur.spans.back().type == type;
    if (continues) {
      cur.spans.back().end = idx;
    } else {
      if (tag[0] == 'I') ++local.repaired_tags;
      cur.spans.push_back({idx, idx, std::move(type), provenance});
      cur.open = true;
    }
  }
  flush();
  local.sentences = corpus.size();
  if (stats) *stats = local;
  return corpus;
}

std::string write_conll(const Corpus& corpus, Provenance provenance) {
  std::ostringstream out;
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    const auto& sentence = corpus.sentences[k];
    std::vector<std::string> tags(sentence.size(), "O");
    auto spans = corpus.spans(k, provenance);
    for (std::size_t a = 0; a < spans.size(); ++a) {
      if (a > 0 && spans[a - 1].overlaps(spans[a]))
        throw InputError("overlapping spans in sentence '" + sentence.id + "'");
      const auto& s = spans[a];
      if (s.end >= sentence.size())
        throw InputError("span out of bounds in sentence '" + sentence.id + "'");
      tags[s.start] = "B-" + s.type;
      for (std::size_t t = s.start + 1; t <= s.end; ++t) tags[t] = "I-" + s.type;
    }
    for (std::size_t t = 0; t < sentence.size(); ++t)
      out << sentence.tokens[t] << ' ' << tags[t] << '\n';
    out << '\n';
  }
  return out.str();
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << contents;
}

Corpus read_conll_file(const std::string& path, Provenance provenance, ConllStats* stats) {
  return parse_conll(read_text_file(path), provenance, stats);
}

}  // namespace dsner
