#pragma once

#include <cstddef>
#include <cstdint>

#include "dsner/corpus.hpp"

namespace dsner {

// Template-generated newswire-like sentences with PER, LOC and ORG
// mentions drawn from fixed pools of surface forms. No form is a
// sub-sequence of another and name tokens never occur in context words,
// so a dictionary built from a subset of gold forms is unambiguous.
struct SyntheticConfig {
  std::size_t train_sentences = 200;
  std::size_t dev_sentences = 50;
  std::size_t test_sentences = 0;
  std::size_t forms_per_type = 30;
  // Probability that an entity slot holds an unannotated common noun
  // phrase instead of a name.
  double filler_rate = 0.5;
  std::uint64_t seed = 2023;
};

struct SyntheticData {
  Corpus train;
  Corpus dev;
  Corpus test;
};

SyntheticData make_synthetic(const SyntheticConfig& config);

}  // namespace dsner
