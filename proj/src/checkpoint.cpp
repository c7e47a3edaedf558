#include "dsner/model.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "dsner/errors.hpp"

namespace dsner {
namespace {

constexpr char kMagic[6] = {'D', 'S', 'N', 'E', 'R', '1'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int b = 0; b < 4; ++b) buf_.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int b = 0; b < 8; ++b) buf_.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_ += s;
  }
  void raw(const char* p, std::size_t n) { buf_.append(p, n); }
  const std::string& bytes() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string bytes) : buf_(std::move(bytes)) {}

  std::uint64_t bytes_le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int b = 0; b < n; ++b)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + b])) << (8 * b);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::uint32_t u32() { return static_cast<std::uint32_t>(bytes_le(4)); }
  double f64() { return std::bit_cast<double>(bytes_le(8)); }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string raw(std::size_t n) {
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t n) const {
    if (buf_.size() - pos_ < n) throw ArtifactMismatch("checkpoint truncated");
  }
  std::string buf_;
  std::size_t pos_ = 0;
};

std::map<std::string, std::string> config_entries(const EncoderConfig& c) {
  return {{"vocab_size", std::to_string(c.vocab_size)},
          {"embed_dim", std::to_string(c.embed_dim)},
          {"context_dim", std::to_string(c.context_dim)},
          {"width_dim", std::to_string(c.width_dim)},
          {"context_window", std::to_string(c.context_window)},
          {"max_span_width", std::to_string(c.max_span_width)},
          {"hidden", std::to_string(c.hidden)},
          {"dropout", [&] {
             std::ostringstream s;
             s.precision(17);
             s << c.dropout;
             return s.str();
           }()},
          {"num_labels", std::to_string(c.num_labels)},
          {"seed", std::to_string(c.seed)},
          {"precision", c.precision}};
}

std::size_t to_size(const std::map<std::string, std::string>& m, const std::string& key) {
  auto it = m.find(key);
  if (it == m.end()) throw ArtifactMismatch("checkpoint config lacks '" + key + "'");
  try {
    return static_cast<std::size_t>(std::stoull(it->second));
  } catch (const std::exception&) {
    throw ArtifactMismatch("checkpoint config '" + key + "' is not a number");
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const Model& model) {
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kVersion);
  const auto entries = config_entries(model.config);
  w.u32(static_cast<std::uint32_t>(entries.size()));
  for (const auto& [k, v] : entries) {
    w.str(k);
    w.str(v);
  }
  w.u32(static_cast<std::uint32_t>(model.vocab.size()));
  for (const auto& word : model.vocab.words()) w.str(word);
  w.u32(static_cast<std::uint32_t>(model.types.labels().size()));
  for (const auto& label : model.types.labels()) w.str(label);
  const auto& params = model.params.params();
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    w.str(p.name);
    w.u32(static_cast<std::uint32_t>(p.value.rows()));
    w.u32(static_cast<std::uint32_t>(p.value.cols()));
    for (double v : p.value.data()) w.f64(v);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write checkpoint '" + path + "'");
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw InputError("failed writing checkpoint '" + path + "'");
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactMismatch("cannot open checkpoint '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  Reader r(ss.str());

  if (r.raw(sizeof kMagic) != std::string(kMagic, sizeof kMagic))
    throw ArtifactMismatch("'" + path + "' is not a checkpoint (bad magic)");
  if (r.u32() != kVersion) throw ArtifactMismatch("unsupported checkpoint version");

  std::map<std::string, std::string> entries;
  for (std::uint32_t n = r.u32(), k = 0; k < n; ++k) {
    auto key = r.str();
    entries[key] = r.str();
  }
  Model m;
  m.config.vocab_size = to_size(entries, "vocab_size");
  m.config.embed_dim = to_size(entries, "embed_dim");
  m.config.context_dim = to_size(entries, "context_dim");
  m.config.width_dim = to_size(entries, "width_dim");
  m.config.context_window = to_size(entries, "context_window");
  m.config.max_span_width = to_size(entries, "max_span_width");
  m.config.hidden = to_size(entries, "hidden");
  m.config.num_labels = to_size(entries, "num_labels");
  m.config.seed = to_size(entries, "seed");
  if (!entries.count("dropout") || !entries.count("precision"))
    throw ArtifactMismatch("checkpoint config incomplete");
  m.config.dropout = std::stod(entries.at("dropout"));
  m.config.precision = entries.at("precision");

  const std::uint32_t vocab = r.u32();
  std::vector<std::string> words;
  for (std::uint32_t k = 0; k < vocab; ++k) words.push_back(r.str());
  if (words.empty() || words.front() != Vocabulary::kUnknownToken)
    throw ArtifactMismatch("checkpoint vocabulary lacks the unknown token");
  for (std::size_t k = 1; k < words.size(); ++k)
    if (m.vocab.add(words[k]) != k) throw ArtifactMismatch("duplicate vocabulary entry");

  std::vector<std::string> labels;
  for (std::uint32_t n = r.u32(), k = 0; k < n; ++k) labels.push_back(r.str());
  try {
    m.types = EntityTypeSet(labels);
  } catch (const InputError& e) {
    throw ArtifactMismatch(std::string("checkpoint label set: ") + e.what());
  }

  for (std::uint32_t n = r.u32(), k = 0; k < n; ++k) {
    auto name = r.str();
    const std::uint32_t rows = r.u32();
    const std::uint32_t cols = r.u32();
    auto& p = m.params.add(name, rows, cols);
    for (auto& v : p.value.data()) v = r.f64();
  }
  if (!r.done()) throw ArtifactMismatch("trailing bytes in checkpoint");

  if (m.vocab.size() != m.config.vocab_size || m.types.size() != m.config.num_labels)
    throw ArtifactMismatch("checkpoint vocabulary or label count disagrees with its config");
  try {
    m.config.validate();
  } catch (const InputError& e) {
    throw ArtifactMismatch(std::string("checkpoint config: ") + e.what());
  }
  const auto expected = init_parameters(m.config);
  for (const auto& p : expected.params()) {
    if (!m.params.contains(p.name)) throw ArtifactMismatch("checkpoint lacks tensor '" + p.name + "'");
    const auto& got = m.params.at(p.name).value;
    if (got.rows() != p.value.rows() || got.cols() != p.value.cols())
      throw ArtifactMismatch("tensor '" + p.name + "' has the wrong shape");
  }
  if (m.params.params().size() != expected.params().size())
    throw ArtifactMismatch("checkpoint has unexpected tensors");
  return m;
}

}  // namespace dsner
