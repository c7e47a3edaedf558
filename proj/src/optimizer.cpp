#include "dsner/optimizer.hpp"

#include <cmath>

#include "dsner/errors.hpp"

namespace dsner {

std::string_view to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::Sgd: return "sgd";
    case OptimizerKind::Momentum: return "momentum";
    case OptimizerKind::Adam: return "adam";
  }
  return "adam";
}

OptimizerKind optimizer_from_string(std::string_view name) {
  for (auto k : {OptimizerKind::Sgd, OptimizerKind::Momentum, OptimizerKind::Adam})
    if (to_string(k) == name) return k;
  throw InputError("unknown optimizer '" + std::string(name) + "', expected {sgd,momentum,adam}");
}

void OptimizerConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw InputError("learning rate must be finite and non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw InputError("adam decay constants must lie in [0, 1)");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InputError("momentum must lie in [0, 1)");
}

void Optimizer::step(ParameterStore& params) {
  auto& list = params.params();
  if (first_.empty()) {
    first_.resize(list.size());
    second_.resize(list.size());
    for (std::size_t p = 0; p < list.size(); ++p) {
      if (config_.kind != OptimizerKind::Sgd) first_[p].assign(list[p].value.size(), 0.0);
      if (config_.kind == OptimizerKind::Adam) second_[p].assign(list[p].value.size(), 0.0);
    }
  }
  ++steps_;
  const double lr = config_.learning_rate;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));

  for (std::size_t p = 0; p < list.size(); ++p) {
    auto& value = list[p].value.data();
    const auto& grad = list[p].grad.data();
    switch (config_.kind) {
      case OptimizerKind::Sgd:
        for (std::size_t i = 0; i < value.size(); ++i) value[i] -= lr * grad[i];
        break;
      case OptimizerKind::Momentum: {
        auto& v = first_[p];
        for (std::size_t i = 0; i < value.size(); ++i) {
          v[i] = config_.momentum * v[i] + grad[i];
          value[i] -= lr * v[i];
        }
        break;
      }
      case OptimizerKind::Adam: {
        auto& m = first_[p];
        auto& s = second_[p];
        for (std::size_t i = 0; i < value.size(); ++i) {
          m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * grad[i];
          s[i] = config_.beta2 * s[i] + (1.0 - config_.beta2) * grad[i] * grad[i];
          value[i] -= lr * (m[i] / bc1) / (std::sqrt(s[i] / bc2) + config_.epsilon);
        }
        break;
      }
    }
  }
}

}  // namespace dsner
