#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "dsner/tensor.hpp"

namespace dsner {

enum class OptimizerKind { Sgd, Momentum, Adam };

std::string_view to_string(OptimizerKind k);
OptimizerKind optimizer_from_string(std::string_view name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

// Applies one update from the store's gradient buffers.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config) : config_(config) {}

  void step(ParameterStore& params);
  std::size_t steps() const { return steps_; }

 private:
  OptimizerConfig config_;
  std::size_t steps_ = 0;
  std::vector<std::vector<double>> first_;
  std::vector<std::vector<double>> second_;
};

}  // namespace dsner
