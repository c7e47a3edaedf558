#include "dsner/distant_annotator.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "dsner/conll.hpp"
#include "dsner/errors.hpp"
#include "dsner/rng.hpp"

namespace dsner {
namespace {

std::vector<std::string> tokenize(std::string_view surface) {
  std::vector<std::string> out;
  std::istringstream in{std::string(surface)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

std::string join(std::span<const std::string> tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

}  // namespace

std::string Dictionary::key(std::span<const std::string> tokens) const {
  std::string k = join(tokens);
  if (!case_sensitive_)
    for (auto& c : k) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return k;
}

void Dictionary::add(const std::vector<std::string>& form, std::string type) {
  if (form.empty()) throw InputError("dictionary entry with empty surface form");
  if (type.empty() || type == EntityTypeSet::kOutsideName)
    throw InputError("dictionary entry '" + join(form) + "' has invalid type");
  auto k = key(form);
  if (entries_.count(k)) throw InputError("duplicate dictionary surface form '" + join(form) + "'");
  entries_.emplace(k, type);
  surfaces_.emplace(join(form), std::move(type));
  max_length_ = std::max(max_length_, form.size());
}

void Dictionary::add(std::string_view surface, std::string type) {
  add(tokenize(surface), std::move(type));
}

const std::string* Dictionary::lookup(std::span<const std::string> tokens) const {
  auto it = entries_.find(key(tokens));
  return it == entries_.end() ? nullptr : &it->second;
}

std::string Dictionary::to_tsv() const {
  std::string out;
  for (const auto& [surface, type] : surfaces_) out += surface + '\t' + type + '\n';
  return out;
}

Dictionary parse_dictionary(std::string_view text, bool case_sensitive) {
  Dictionary dict(case_sensitive);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    auto tab = line.rfind('\t');
    if (tab == std::string_view::npos) throw ParseError(line_no, "expected 'surface<TAB>TYPE'");
    auto type = tokenize(line.substr(tab + 1));
    if (type.size() != 1) throw ParseError(line_no, "expected a single type label");
    try {
      dict.add(line.substr(0, tab), type.front());
    } catch (const InputError& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return dict;
}

Dictionary load_dictionary(const std::string& path, bool case_sensitive) {
  return parse_dictionary(read_text_file(path), case_sensitive);
}

Corpus annotate(const Corpus& corpus, const Dictionary& dictionary) {
  Corpus out = corpus;
  out.clear(Provenance::Distant);
  const std::size_t max_len = dictionary.max_length();
  for (std::size_t k = 0; k < out.size(); ++k) {
    const auto& tokens = out.sentences[k].tokens;
    const std::size_t n = tokens.size();
    std::size_t i = 0;
    while (i < n) {
      std::size_t matched = 0;
      for (std::size_t len = std::min(max_len, n - i); len >= 1; --len) {
        if (const auto* type = dictionary.lookup(std::span(tokens).subspan(i, len))) {
          out.annotations[k].push_back({i, i + len - 1, *type, Provenance::Distant});
          matched = len;
          break;
        }
      }
      i += matched ? matched : 1;
    }
  }
  return out;
}

AnnotationReport evaluate_annotation(const Corpus& distant, const Corpus& gold) {
  return score_corpus(distant, Provenance::Distant, gold, Provenance::Gold);
}

Dictionary build_noisy_dictionary(const Corpus& gold, double delete_rate, std::uint64_t seed,
                                  bool case_sensitive) {
  if (!(delete_rate >= 0.0 && delete_rate <= 1.0))
    throw InputError("delete rate must lie in [0, 1]");
  std::map<std::string, std::set<std::string>> types;
  std::map<std::string, std::vector<std::string>> forms;
  for (std::size_t k = 0; k < gold.size(); ++k) {
    const auto& tokens = gold.sentences[k].tokens;
    for (const auto& s : gold.spans(k, Provenance::Gold)) {
      std::vector<std::string> form(tokens.begin() + s.start, tokens.begin() + s.end + 1);
      std::string key = join(form);
      if (!case_sensitive)
        for (auto& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      types[key].insert(s.type);
      forms.emplace(key, std::move(form));
    }
  }
  std::vector<std::string> keys;
  for (const auto& [key, ts] : types)
    if (ts.size() == 1) keys.push_back(key);

  const auto keep = static_cast<std::size_t>(
      std::llround(static_cast<double>(keys.size()) * (1.0 - delete_rate)));
  Rng rng(derive_seed(seed, 0x64696374ULL));
  rng.shuffle(keys);
  keys.resize(std::min(keep, keys.size()));
  std::sort(keys.begin(), keys.end());

  Dictionary dict(case_sensitive);
  for (const auto& key : keys) dict.add(forms.at(key), *types.at(key).begin());
  return dict;
}

}  // namespace dsner
