#include "dsner/kernels.hpp"

#include <omp.h>

#include <cmath>

#include "dsner/errors.hpp"

namespace dsner::kernels {

void set_threads(int threads) { omp_set_num_threads(threads < 1 ? 1 : threads); }
int max_threads() { return omp_get_max_threads(); }

namespace {

void check_inputs(const Matrix& negatives, const Matrix& positives) {
  if (positives.rows() == 0) throw Error("phi: no positive spans");
  if (negatives.rows() > 0 && negatives.cols() != positives.cols())
    throw Error("phi: representation width mismatch");
}

double checked_norm(std::span<const double> v) {
  const double n = norm(v);
  if (!(n > 0.0)) throw Error("phi: zero-norm representation");
  return n;
}

}  // namespace

namespace serial {

std::vector<double> phi(const Matrix& negatives, const Matrix& positives) {
  check_inputs(negatives, positives);
  std::vector<double> out(negatives.rows());
  for (std::size_t a = 0; a < negatives.rows(); ++a) {
    auto neg = negatives.row(a);
    const double nn = checked_norm(neg);
    double sum = 0.0;
    for (std::size_t b = 0; b < positives.rows(); ++b) {
      auto pos = positives.row(b);
      sum += dot(neg, pos) / (nn * checked_norm(pos));
    }
    out[a] = sum / static_cast<double>(positives.rows());
  }
  return out;
}

std::vector<std::vector<ScoredSpan>> score_spans(
    const std::vector<std::vector<std::size_t>>& token_ids, const std::vector<SentenceSpans>& spans,
    const ParameterStore& params, const EncoderConfig& config) {
  std::vector<std::vector<ScoredSpan>> out(token_ids.size());
  for (std::size_t k = 0; k < token_ids.size(); ++k) {
    SentenceScorer scorer(token_ids[k], params, config);
    for (const auto& s : spans[k]) out[k].push_back({s, scorer.probabilities(s)});
  }
  return out;
}

}  // namespace serial

namespace omp {

// Phi(x, P) = x/|x| . (1/M) sum_p p/|p|: normalize and average the
// positives once, then one dot product per negative.
std::vector<double> phi(const Matrix& negatives, const Matrix& positives) {
  check_inputs(negatives, positives);
  const std::size_t width = positives.cols();
  std::vector<double> centroid(width, 0.0);
  for (std::size_t b = 0; b < positives.rows(); ++b) {
    auto pos = positives.row(b);
    const double pn = checked_norm(pos);
    for (std::size_t c = 0; c < width; ++c) centroid[c] += pos[c] / pn;
  }
  for (auto& v : centroid) v /= static_cast<double>(positives.rows());

  const auto n = static_cast<std::ptrdiff_t>(negatives.rows());
  std::vector<double> out(negatives.rows());
  bool zero_norm = false;
#pragma omp parallel for schedule(static) reduction(|| : zero_norm)
  for (std::ptrdiff_t a = 0; a < n; ++a) {
    auto neg = negatives.row(static_cast<std::size_t>(a));
    const double nn = norm(neg);
    if (!(nn > 0.0)) {
      zero_norm = true;
      continue;
    }
    out[static_cast<std::size_t>(a)] = dot(neg, centroid) / nn;
  }
  if (zero_norm) throw Error("phi: zero-norm representation");
  return out;
}

std::vector<std::vector<ScoredSpan>> score_spans(
    const std::vector<std::vector<std::size_t>>& token_ids, const std::vector<SentenceSpans>& spans,
    const ParameterStore& params, const EncoderConfig& config) {
  std::vector<std::vector<ScoredSpan>> out(token_ids.size());
  const auto n = static_cast<std::ptrdiff_t>(token_ids.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    SentenceScorer scorer(token_ids[idx], params, config);
    auto& dst = out[idx];
    dst.reserve(spans[idx].size());
    for (const auto& s : spans[idx]) dst.push_back({s, scorer.probabilities(s)});
  }
  return out;
}

}  // namespace omp

Matrix span_representations(const std::vector<std::vector<std::size_t>>& token_ids,
                            const std::vector<SentenceSpans>& spans,
                            const ParameterStore& params, const EncoderConfig& config) {
  std::vector<std::size_t> offsets(token_ids.size() + 1, 0);
  for (std::size_t k = 0; k < token_ids.size(); ++k) offsets[k + 1] = offsets[k] + spans[k].size();
  Matrix out(offsets.back(), config.span_dim());
  const auto n = static_cast<std::ptrdiff_t>(token_ids.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    if (spans[idx].empty()) continue;
    Matrix h = encode(token_ids[idx], params, config);
    for (std::size_t s = 0; s < spans[idx].size(); ++s) {
      const auto rep = span_rep(h, spans[idx][s].start, spans[idx][s].end, params, config);
      std::copy(rep.values.begin(), rep.values.end(), out.row(offsets[idx] + s).begin());
    }
  }
  return out;
}

}  // namespace dsner::kernels
