#include "dsner/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dsner/errors.hpp"

namespace dsner {

void EncoderConfig::validate() const {
  if (vocab_size == 0) throw InputError("encoder: vocabulary is empty");
  if (embed_dim == 0 || context_dim == 0 || width_dim == 0 || hidden == 0)
    throw InputError("encoder: all widths must be >= 1");
  if (num_labels == 0) throw InputError("encoder: num_labels must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InputError("encoder: dropout must lie in [0, 1)");
  if (precision != "double") throw InputError("encoder: only double precision is supported");
}

Vocabulary::Vocabulary() { add(std::string(kUnknownToken)); }

Vocabulary Vocabulary::from_corpus(const Corpus& corpus) {
  Vocabulary v;
  for (const auto& s : corpus.sentences)
    for (const auto& t : s.tokens) v.add(t);
  return v;
}

std::size_t Vocabulary::add(const std::string& word) {
  auto [it, inserted] = index_.emplace(word, words_.size());
  if (inserted) words_.push_back(word);
  return it->second;
}

std::size_t Vocabulary::id(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? kUnknown : it->second;
}

std::vector<std::size_t> Vocabulary::ids(const Sentence& sentence) const {
  std::vector<std::size_t> out;
  out.reserve(sentence.size());
  for (const auto& t : sentence.tokens) out.push_back(id(t));
  return out;
}

ParameterStore init_parameters(const EncoderConfig& config) {
  config.validate();
  ParameterStore store;
  store.add(std::string(param::kEmbedding), config.vocab_size, config.embed_dim);
  store.add(std::string(param::kContextWeight), config.context_dim, config.window_dim());
  store.add(std::string(param::kContextBias), 1, config.context_dim);
  store.add(std::string(param::kWidth), config.max_span_width + 1, config.width_dim);
  store.add(std::string(param::kHiddenWeight), config.hidden, config.span_dim());
  store.add(std::string(param::kHiddenBias), 1, config.hidden);
  store.add(std::string(param::kOutWeight), config.num_labels, config.hidden);
  store.add(std::string(param::kOutBias), 1, config.num_labels);

  Rng rng(config.seed);
  for (auto& p : store.params()) {
    if (p.name.ends_with(".bias")) continue;
    const double a = std::sqrt(6.0 / static_cast<double>(p.value.rows() + p.value.cols()));
    for (auto& v : p.value.data()) v = rng.uniform(-a, a);
  }
  return store;
}

namespace {

// out = W x (+ bias)
void affine(const Matrix& w, std::span<const double> x, std::span<const double> bias,
            std::span<double> out) {
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const double* row = w.row(r).data();
    double s = bias.empty() ? 0.0 : bias[r];
    for (std::size_t c = 0; c < w.cols(); ++c) s += row[c] * x[c];
    out[r] = s;
  }
}

// out = W[:, offset : offset + x.size()] x
void affine_block(const Matrix& w, std::size_t offset, std::span<const double> x,
                  std::span<double> out) {
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const double* row = w.row(r).data() + offset;
    double s = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) s += row[c] * x[c];
    out[r] = s;
  }
}

void window_input(std::span<const std::size_t> ids, std::size_t t, const Matrix& embedding,
                  std::size_t window, std::span<double> out) {
  const std::size_t d = embedding.cols();
  const auto n = static_cast<std::ptrdiff_t>(ids.size());
  for (std::size_t o = 0; o <= 2 * window; ++o) {
    const auto p = static_cast<std::ptrdiff_t>(t + o) - static_cast<std::ptrdiff_t>(window);
    auto dst = out.subspan(o * d, d);
    if (p < 0 || p >= n) {
      std::fill(dst.begin(), dst.end(), 0.0);
    } else {
      const std::size_t id = ids[static_cast<std::size_t>(p)];
      if (id >= embedding.rows()) throw Error("token id outside vocabulary");
      auto src = embedding.row(id);
      std::copy(src.begin(), src.end(), dst.begin());
    }
  }
}

// Contextual vectors; optionally records the pre-dropout activations and masks.
Matrix encode_impl(std::span<const std::size_t> ids, const ParameterStore& params,
                   const EncoderConfig& config, bool training, Rng* rng, Matrix* pre_dropout,
                   Matrix* keep) {
  if (training && config.dropout > 0.0 && !rng) throw Error("encode: dropout requires an rng");
  const auto& emb = params.at(param::kEmbedding).value;
  const auto& w = params.at(param::kContextWeight).value;
  const auto& b = params.at(param::kContextBias).value;
  const std::size_t n = ids.size();
  Matrix h(n, config.context_dim);
  std::vector<double> x(config.window_dim());
  const bool drop = training && config.dropout > 0.0;
  const double scale = 1.0 / (1.0 - config.dropout);
  if (pre_dropout) *pre_dropout = Matrix(n, config.context_dim);
  if (keep) *keep = drop ? Matrix(n, config.context_dim) : Matrix();
  for (std::size_t t = 0; t < n; ++t) {
    window_input(ids, t, emb, config.context_window, x);
    auto out = h.row(t);
    affine(w, x, b.row(0), out);
    for (std::size_t c = 0; c < out.size(); ++c) {
      const double u = std::tanh(out[c]);
      if (pre_dropout) (*pre_dropout)(t, c) = u;
      double k = 1.0;
      if (drop) {
        k = rng->bernoulli(config.dropout) ? 0.0 : scale;
        if (keep) (*keep)(t, c) = k;
      }
      out[c] = u * k;
    }
  }
  return h;
}

// (L+1) x H: W1[:, 2d_h:] f(w) + b1
Matrix width_projection(const ParameterStore& params, const EncoderConfig& config) {
  const auto& w1 = params.at(param::kHiddenWeight).value;
  const auto& b1 = params.at(param::kHiddenBias).value;
  const auto& widths = params.at(param::kWidth).value;
  Matrix out(widths.rows(), config.hidden);
  for (std::size_t w = 0; w < widths.rows(); ++w) {
    affine_block(w1, 2 * config.context_dim, widths.row(w), out.row(w));
    for (std::size_t r = 0; r < config.hidden; ++r) out(w, r) += b1(0, r);
  }
  return out;
}

// n x H: W1[:, offset : offset + d_h] h_t for every t
Matrix token_projection(const Matrix& h, const ParameterStore& params, std::size_t offset) {
  const auto& w1 = params.at(param::kHiddenWeight).value;
  Matrix out(h.rows(), w1.rows());
  for (std::size_t t = 0; t < h.rows(); ++t) affine_block(w1, offset, h.row(t), out.row(t));
  return out;
}

void check_span(SpanIndex s, std::size_t n, std::size_t max_width) {
  if (s.start > s.end || s.end >= n) throw Error("span out of bounds");
  if (s.width() > max_width)
    throw Error("span width " + std::to_string(s.width()) + " exceeds limit " +
                std::to_string(max_width));
}

}  // namespace

Matrix encode(std::span<const std::size_t> token_ids, const ParameterStore& params,
              const EncoderConfig& config, bool training, Rng* rng) {
  return encode_impl(token_ids, params, config, training, rng, nullptr, nullptr);
}

SpanRepresentation span_rep(const Matrix& h, std::size_t i, std::size_t j,
                            const ParameterStore& params, const EncoderConfig& config) {
  check_span({i, j}, h.rows(), config.max_span_width);
  const auto& widths = params.at(param::kWidth).value;
  SpanRepresentation rep;
  rep.source = {i, j};
  rep.values.reserve(2 * h.cols() + widths.cols());
  auto hi = h.row(i);
  auto hj = h.row(j);
  auto f = widths.row(j - i);
  rep.values.insert(rep.values.end(), hi.begin(), hi.end());
  rep.values.insert(rep.values.end(), hj.begin(), hj.end());
  rep.values.insert(rep.values.end(), f.begin(), f.end());
  return rep;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> p(logits.size());
  if (logits.empty()) return p;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) z += (p[k] = std::exp(logits[k] - mx));
  for (auto& v : p) v /= z;
  return p;
}

double log_softmax_at(std::span<const double> logits, std::size_t index) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - mx);
  return logits[index] - mx - std::log(z);
}

ClassifierOutput classify(std::span<const double> rep, const ParameterStore& params,
                          const EncoderConfig& config, bool training, Rng* rng) {
  const auto& w1 = params.at(param::kHiddenWeight).value;
  const auto& b1 = params.at(param::kHiddenBias).value;
  const auto& w2 = params.at(param::kOutWeight).value;
  const auto& b2 = params.at(param::kOutBias).value;
  if (rep.size() != w1.cols()) throw Error("classify: representation width mismatch");
  const bool drop = training && config.dropout > 0.0;
  if (drop && !rng) throw Error("classify: dropout requires an rng");

  std::vector<double> hidden(w1.rows());
  affine(w1, rep, b1.row(0), hidden);
  const double scale = 1.0 / (1.0 - config.dropout);
  for (auto& v : hidden) {
    v = std::tanh(v);
    if (drop) v *= rng->bernoulli(config.dropout) ? 0.0 : scale;
  }
  ClassifierOutput out;
  out.logits.resize(w2.rows());
  affine(w2, hidden, b2.row(0), out.logits);
  out.probabilities = softmax(out.logits);
  return out;
}

SentenceScorer::SentenceScorer(std::span<const std::size_t> token_ids,
                               const ParameterStore& params, const EncoderConfig& config)
    : params_(params), config_(config) {
  h_ = encode(token_ids, params, config, false, nullptr);
  start_proj_ = token_projection(h_, params, 0);
  end_proj_ = token_projection(h_, params, config.context_dim);
  width_proj_ = width_projection(params, config);
}

SpanRepresentation SentenceScorer::representation(SpanIndex span) const {
  return span_rep(h_, span.start, span.end, params_, config_);
}

std::vector<double> SentenceScorer::logits(SpanIndex span) const {
  check_span(span, h_.rows(), config_.max_span_width);
  const auto& w2 = params_.at(param::kOutWeight).value;
  const auto& b2 = params_.at(param::kOutBias).value;
  std::vector<double> hidden(config_.hidden);
  auto a = start_proj_.row(span.start);
  auto b = end_proj_.row(span.end);
  auto c = width_proj_.row(span.width());
  for (std::size_t r = 0; r < hidden.size(); ++r) hidden[r] = std::tanh(a[r] + b[r] + c[r]);
  std::vector<double> out(w2.rows());
  affine(w2, hidden, b2.row(0), out);
  return out;
}

std::vector<double> SentenceScorer::probabilities(SpanIndex span) const {
  return softmax(logits(span));
}

LossGraph::LossGraph(const ParameterStore& params, const EncoderConfig& config)
    : params_(params), config_(config) {}

double LossGraph::forward(const std::vector<SentenceTargets>& batch, bool training, Rng* rng) {
  const bool drop = training && config_.dropout > 0.0;
  if (drop && !rng) throw Error("LossGraph: dropout requires an rng");
  const auto& w2 = params_.at(param::kOutWeight).value;
  const auto& b2 = params_.at(param::kOutBias).value;
  const std::size_t hidden_dim = config_.hidden;
  const double scale = 1.0 / (1.0 - config_.dropout);
  const Matrix width_proj = width_projection(params_, config_);

  tapes_.clear();
  probs_.clear();
  loss_ = 0.0;
  samples_ = 0;
  training_ = drop;

  std::vector<double> logits(w2.rows());
  for (const auto& item : batch) {
    SentenceTape tape;
    tape.ids = item.token_ids;
    tape.targets = item.targets;
    tape.h = encode_impl(tape.ids, params_, config_, training, rng, &tape.pre_dropout, &tape.keep);
    const Matrix start_proj = token_projection(tape.h, params_, 0);
    const Matrix end_proj = token_projection(tape.h, params_, config_.context_dim);
    tape.hidden = Matrix(tape.targets.size(), hidden_dim);
    if (drop) tape.hidden_keep = Matrix(tape.targets.size(), hidden_dim);
    tape.first_prob = probs_.size();

    for (std::size_t k = 0; k < tape.targets.size(); ++k) {
      const auto& target = tape.targets[k];
      check_span(target.span, tape.h.rows(), config_.max_span_width);
      if (target.label >= config_.num_labels) throw Error("LossGraph: label out of range");
      auto a = start_proj.row(target.span.start);
      auto b = end_proj.row(target.span.end);
      auto c = width_proj.row(target.span.width());
      auto g = tape.hidden.row(k);
      std::vector<double> dropped(hidden_dim);
      for (std::size_t r = 0; r < hidden_dim; ++r) {
        g[r] = std::tanh(a[r] + b[r] + c[r]);
        double keep = 1.0;
        if (drop) keep = tape.hidden_keep(k, r) = rng->bernoulli(config_.dropout) ? 0.0 : scale;
        dropped[r] = g[r] * keep;
      }
      affine(w2, dropped, b2.row(0), logits);
      loss_ -= log_softmax_at(logits, target.label);
      probs_.push_back(softmax(logits));
      ++samples_;
    }
    tapes_.push_back(std::move(tape));
  }
  recorded_ = true;
  return loss_;
}

void LossGraph::backward(ParameterStore& params) {
  if (!recorded_) throw Error("backward called without a recorded forward pass");
  recorded_ = false;

  const auto& w1 = params.at(param::kHiddenWeight).value;
  const auto& w2 = params.at(param::kOutWeight).value;
  const auto& wc = params.at(param::kContextWeight).value;
  const auto& widths = params.at(param::kWidth).value;
  auto& g_emb = params.at(param::kEmbedding).grad;
  auto& g_wc = params.at(param::kContextWeight).grad;
  auto& g_bc = params.at(param::kContextBias).grad;
  auto& g_width = params.at(param::kWidth).grad;
  auto& g_w1 = params.at(param::kHiddenWeight).grad;
  auto& g_b1 = params.at(param::kHiddenBias).grad;
  auto& g_w2 = params.at(param::kOutWeight).grad;
  auto& g_b2 = params.at(param::kOutBias).grad;

  const std::size_t hidden_dim = config_.hidden;
  const std::size_t dh = config_.context_dim;
  const std::size_t labels = config_.num_labels;
  Matrix d_width_proj(widths.rows(), hidden_dim);
  std::vector<double> dlogits(labels);
  std::vector<double> da(hidden_dim);
  std::vector<double> x(config_.window_dim());
  std::vector<double> dx(config_.window_dim());
  const auto& emb = params.at(param::kEmbedding).value;

  for (const auto& tape : tapes_) {
    const std::size_t n = tape.h.rows();
    Matrix d_start(n, hidden_dim);
    Matrix d_end(n, hidden_dim);

    for (std::size_t k = 0; k < tape.targets.size(); ++k) {
      const auto& target = tape.targets[k];
      const auto& p = probs_[tape.first_prob + k];
      for (std::size_t l = 0; l < labels; ++l)
        dlogits[l] = p[l] - (l == target.label ? 1.0 : 0.0);
      auto g = tape.hidden.row(k);
      for (std::size_t l = 0; l < labels; ++l) {
        auto grow = g_w2.row(l);
        for (std::size_t r = 0; r < hidden_dim; ++r) {
          const double keep = training_ ? tape.hidden_keep(k, r) : 1.0;
          grow[r] += dlogits[l] * g[r] * keep;
        }
        g_b2(0, l) += dlogits[l];
      }
      for (std::size_t r = 0; r < hidden_dim; ++r) {
        double dg = 0.0;
        for (std::size_t l = 0; l < labels; ++l) dg += w2(l, r) * dlogits[l];
        if (training_) dg *= tape.hidden_keep(k, r);
        da[r] = dg * (1.0 - g[r] * g[r]);
      }
      auto ds = d_start.row(target.span.start);
      auto de = d_end.row(target.span.end);
      auto dw = d_width_proj.row(target.span.width());
      for (std::size_t r = 0; r < hidden_dim; ++r) {
        ds[r] += da[r];
        de[r] += da[r];
        dw[r] += da[r];
      }
    }

    // Token projections back to the first classifier layer and h.
    Matrix dh_mat(n, dh);
    for (std::size_t t = 0; t < n; ++t) {
      auto ht = tape.h.row(t);
      auto ds = d_start.row(t);
      auto de = d_end.row(t);
      auto dht = dh_mat.row(t);
      for (std::size_t r = 0; r < hidden_dim; ++r) {
        if (ds[r] == 0.0 && de[r] == 0.0) continue;
        auto grow = g_w1.row(r);
        auto wrow = w1.row(r);
        for (std::size_t c = 0; c < dh; ++c) {
          grow[c] += ds[r] * ht[c];
          grow[dh + c] += de[r] * ht[c];
          dht[c] += wrow[c] * ds[r] + wrow[dh + c] * de[r];
        }
      }
    }

    // Contextual mixing layer and embeddings.
    const std::size_t de_dim = config_.embed_dim;
    const auto n_signed = static_cast<std::ptrdiff_t>(n);
    for (std::size_t t = 0; t < n; ++t) {
      std::vector<double> dz(dh);
      bool any = false;
      for (std::size_t c = 0; c < dh; ++c) {
        double du = dh_mat(t, c);
        if (training_) du *= tape.keep(t, c);
        const double u = tape.pre_dropout(t, c);
        dz[c] = du * (1.0 - u * u);
        any = any || dz[c] != 0.0;
      }
      if (!any) continue;
      window_input(tape.ids, t, emb, config_.context_window, x);
      std::fill(dx.begin(), dx.end(), 0.0);
      for (std::size_t c = 0; c < dh; ++c) {
        g_bc(0, c) += dz[c];
        auto grow = g_wc.row(c);
        auto wrow = wc.row(c);
        for (std::size_t q = 0; q < x.size(); ++q) {
          grow[q] += dz[c] * x[q];
          dx[q] += wrow[q] * dz[c];
        }
      }
      for (std::size_t o = 0; o <= 2 * config_.context_window; ++o) {
        const auto p = static_cast<std::ptrdiff_t>(t + o) -
                       static_cast<std::ptrdiff_t>(config_.context_window);
        if (p < 0 || p >= n_signed) continue;
        auto erow = g_emb.row(tape.ids[static_cast<std::size_t>(p)]);
        for (std::size_t q = 0; q < de_dim; ++q) erow[q] += dx[o * de_dim + q];
      }
    }
  }

  // Width block of the first layer, its bias, and the width embeddings.
  const std::size_t dw_dim = config_.width_dim;
  for (std::size_t w = 0; w < widths.rows(); ++w) {
    auto dwp = d_width_proj.row(w);
    auto f = widths.row(w);
    auto gf = g_width.row(w);
    for (std::size_t r = 0; r < hidden_dim; ++r) {
      if (dwp[r] == 0.0) continue;
      g_b1(0, r) += dwp[r];
      auto grow = g_w1.row(r);
      auto wrow = w1.row(r);
      for (std::size_t c = 0; c < dw_dim; ++c) {
        grow[2 * dh + c] += dwp[r] * f[c];
        gf[c] += wrow[2 * dh + c] * dwp[r];
      }
    }
  }
  tapes_.clear();
}

}  // namespace dsner
