#include "embrec/nd/tensor.hpp"

#include <algorithm>
#include <cmath>

#include "embrec/errors.hpp"

namespace embrec::nd {

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

namespace {
void check_shape(const Shape& shape) {
  if (shape.empty()) throw DimensionError("tensor shape must have at least one axis");
  for (std::size_t d : shape) {
    if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + to_string(shape));
  }
}
}  // namespace

Tensor::Tensor(Shape shape, float fill) : shape_(std::move(shape)) {
  check_shape(shape_);
  data_.assign(element_count(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<float> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  check_shape(shape_);
  if (element_count(shape_) != data_.size()) {
    throw DimensionError("shape " + to_string(shape_) + " does not match " +
                         std::to_string(data_.size()) + " values");
  }
}

float Tensor::item() const {
  if (data_.size() != 1) {
    throw DimensionError("item() on tensor of shape " + to_string(shape_));
  }
  return data_[0];
}

void Tensor::fill(float value) { std::fill(data_.begin(), data_.end(), value); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

}  // namespace embrec::nd
