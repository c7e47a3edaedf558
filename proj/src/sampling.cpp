#include "dsner/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dsner/errors.hpp"
#include "dsner/kernels.hpp"
#include "dsner/rng.hpp"

namespace dsner {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::All: return "all";
    case Strategy::Uniform: return "uniform";
    case Strategy::Weighted: return "weighted";
    case Strategy::TopNeg: return "topneg";
    case Strategy::BottomNeg: return "bottomneg";
  }
  return "all";
}

std::string valid_strategies() { return "{all,uniform,weighted,topneg,bottomneg}"; }

Strategy strategy_from_string(std::string_view name) {
  for (auto s : {Strategy::All, Strategy::Uniform, Strategy::Weighted, Strategy::TopNeg,
                 Strategy::BottomNeg})
    if (to_string(s) == name) return s;
  throw InputError("unknown strategy '" + std::string(name) + "', expected one of " +
                   valid_strategies());
}

void SamplingConfig::validate() const {
  if (strategy != Strategy::All && !(rate > 0.0 && rate <= 1.0))
    throw InputError("sampling rate must lie in (0, 1]");
}

std::size_t selection_size(std::size_t n, double rate) {
  if (n == 0 || rate <= 0.0) return 0;
  const double product = static_cast<double>(n) * rate;
  const double nearest = std::round(product);
  const double k = std::abs(product - nearest) < 1e-9 ? nearest : std::ceil(product);
  return std::min(n, static_cast<std::size_t>(k));
}

std::optional<double> similarity_phi(std::span<const double> negative, const Matrix& positives) {
  if (positives.rows() == 0) return std::nullopt;
  Matrix single(0, 0);
  single.append_row(negative);
  return kernels::serial::phi(single, positives).front();
}

SelectionResult select_all(std::size_t n) {
  SelectionResult r;
  r.strategy = Strategy::All;
  r.selected.resize(n);
  std::iota(r.selected.begin(), r.selected.end(), std::size_t{0});
  return r;
}

std::vector<std::size_t> rank_by_score(std::span<const NegativeKey> keys,
                                       std::span<const double> scores, bool descending) {
  if (keys.size() != scores.size()) throw Error("rank_by_score: size mismatch");
  std::vector<std::size_t> order(keys.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return descending ? scores[a] > scores[b] : scores[a] < scores[b];
    return keys[a] < keys[b];
  });
  return order;
}

namespace {

std::vector<std::size_t> draw_uniform(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng.below(n - i)]);
  pool.resize(k);
  return pool;
}

SelectionResult rank_select(std::span<const NegativeKey> keys, const Matrix& negatives,
                            const Matrix& positives, double rate, bool descending,
                            Strategy strategy, std::uint64_t seed, std::uint64_t batch_index) {
  if (keys.size() != negatives.rows()) throw Error("selection: key/representation mismatch");
  SelectionResult r;
  r.strategy = strategy;
  const std::size_t k = selection_size(keys.size(), rate);
  if (positives.rows() == 0) {
    Rng rng(derive_seed(seed, batch_index));
    r.selected = draw_uniform(keys.size(), k, rng);
    r.zero_positive_fallback = true;
    return r;
  }
  r.scores = kernels::omp::phi(negatives, positives);
  auto order = rank_by_score(keys, r.scores, descending);
  order.resize(k);
  r.selected = std::move(order);
  return r;
}

}  // namespace

SelectionResult select_top_neg(std::span<const NegativeKey> keys, const Matrix& negatives,
                               const Matrix& positives, const SamplingConfig& config,
                               std::uint64_t batch_index) {
  config.validate();
  return rank_select(keys, negatives, positives, config.rate, true, Strategy::TopNeg, config.seed,
                     batch_index);
}

SelectionResult select_bottom(std::span<const NegativeKey> keys, const Matrix& negatives,
                              const Matrix& positives, double fraction, std::uint64_t seed,
                              std::uint64_t batch_index) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw InputError("bottom fraction must lie in (0, 1]");
  return rank_select(keys, negatives, positives, fraction, false, Strategy::BottomNeg, seed,
                     batch_index);
}

SelectionResult select_uniform(std::size_t n, const SamplingConfig& config,
                               std::uint64_t batch_index) {
  config.validate();
  SelectionResult r;
  r.strategy = Strategy::Uniform;
  Rng rng(derive_seed(config.seed, batch_index));
  r.selected = draw_uniform(n, selection_size(n, config.rate), rng);
  return r;
}

SelectionResult select_weighted(std::span<const double> outside_probs,
                                const SamplingConfig& config, std::uint64_t batch_index) {
  config.validate();
  const std::size_t n = outside_probs.size();
  for (double w : outside_probs)
    if (!(w >= 0.0 && w <= 1.0)) throw InputError("sampling weight outside [0, 1]");

  SelectionResult r;
  r.strategy = Strategy::Weighted;
  r.scores.assign(outside_probs.begin(), outside_probs.end());
  const std::size_t k = selection_size(n, config.rate);
  Rng rng(derive_seed(config.seed, batch_index));

  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  std::vector<double> weights = r.scores;
  double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (n > 0 && total <= 0.0) r.zero_weight_fallback = true;

  while (r.selected.size() < k) {
    std::size_t pick;
    if (total <= 0.0) {
      // Only zero weights left: the rest is drawn uniformly.
      pick = rng.below(pool.size());
    } else {
      const double u = rng.uniform() * total;
      double acc = 0.0;
      pick = pool.size() - 1;
      for (std::size_t p = 0; p < pool.size(); ++p) {
        acc += weights[p];
        if (u < acc) {
          pick = p;
          break;
        }
      }
      // Rounding can leave u >= acc at the end; take the last positive weight.
      while (weights[pick] <= 0.0 && pick > 0) --pick;
    }
    r.selected.push_back(pool[pick]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    weights.erase(weights.begin() + static_cast<std::ptrdiff_t>(pick));
    total = std::accumulate(weights.begin(), weights.end(), 0.0);
  }
  return r;
}

}  // namespace dsner
