#include "dsner/tensor.hpp"

#include <cmath>
#include <cstring>

#include "dsner/errors.hpp"

namespace dsner {

void Matrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) cols_ = values.size();
  if (values.size() != cols_) throw Error("append_row: width mismatch");
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

Parameter& ParameterStore::add(std::string name, std::size_t rows, std::size_t cols) {
  if (contains(name)) throw Error("duplicate parameter '" + name + "'");
  params_.push_back({std::move(name), Matrix(rows, cols), Matrix(rows, cols)});
  return params_.back();
}

Parameter& ParameterStore::at(std::string_view name) {
  for (auto& p : params_)
    if (p.name == name) return p;
  throw Error("no parameter named '" + std::string(name) + "'");
}

const Parameter& ParameterStore::at(std::string_view name) const {
  for (const auto& p : params_)
    if (p.name == name) return p;
  throw Error("no parameter named '" + std::string(name) + "'");
}

bool ParameterStore::contains(std::string_view name) const {
  for (const auto& p : params_)
    if (p.name == name) return true;
  return false;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p.grad.fill(0.0);
}

std::size_t ParameterStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

bool ParameterStore::same_values(const ParameterStore& other) const {
  if (params_.size() != other.params_.size()) return false;
  for (std::size_t k = 0; k < params_.size(); ++k) {
    const auto& a = params_[k];
    const auto& b = other.params_[k];
    if (a.name != b.name || a.value.rows() != b.value.rows() || a.value.cols() != b.value.cols())
      return false;
    if (std::memcmp(a.value.data().data(), b.value.data().data(),
                    a.value.size() * sizeof(double)) != 0)
      return false;
  }
  return true;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace dsner
