#include "cemb/tensor.hpp"

#include <sstream>

namespace cemb {

std::string shape_to_string(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

namespace {

Eigen::Index checked_numel(const std::vector<int>& shape) {
  if (shape.empty()) throw ShapeError("Tensor: shape must have at least one extent");
  Eigen::Index n = 1;
  for (int e : shape) {
    if (e <= 0)
      throw ShapeError("Tensor: extents must be positive, got " + shape_to_string(shape));
    n *= e;
  }
  return n;
}

}  // namespace

Tensor::Tensor(std::vector<int> shape, double fill) : shape_(std::move(shape)) {
  data_ = Eigen::ArrayXd::Constant(checked_numel(shape_), fill);
}

Tensor::Tensor(std::vector<int> shape, std::vector<double> values) : shape_(std::move(shape)) {
  Eigen::Index n = checked_numel(shape_);
  if (n != static_cast<Eigen::Index>(values.size()))
    throw ShapeError("Tensor: " + shape_str() + " does not hold " +
                     std::to_string(values.size()) + " values");
  data_ = Eigen::Map<const Eigen::ArrayXd>(values.data(), n);
}

Tensor Tensor::scalar(double v) {
  Tensor t({1});
  t.data_[0] = v;
  return t;
}

int Tensor::extent(int axis) const {
  if (axis < 0 || axis >= rank())
    throw ShapeError("Tensor: axis " + std::to_string(axis) + " out of range for " + shape_str());
  return shape_[static_cast<size_t>(axis)];
}

int Tensor::cols() const {
  if (shape_.empty()) throw ShapeError("Tensor: cols() on empty tensor");
  return shape_.back();
}

double Tensor::item() const {
  if (numel() != 1)
    throw UsageError("Tensor: item() requires a single element, got " + shape_str());
  return data_[0];
}

double Tensor::at(int r, int c) const {
  if (rank() != 2) throw ShapeError("Tensor: at(r,c) requires rank 2, got " + shape_str());
  return data_[static_cast<Eigen::Index>(r) * shape_[1] + c];
}

double& Tensor::at(int r, int c) {
  if (rank() != 2) throw ShapeError("Tensor: at(r,c) requires rank 2, got " + shape_str());
  return data_[static_cast<Eigen::Index>(r) * shape_[1] + c];
}

Tensor::MatView Tensor::view(int r, int c) {
  if (static_cast<Eigen::Index>(r) * c != numel())
    throw ShapeError("Tensor: cannot view " + shape_str() + " as [" + std::to_string(r) + "x" +
                     std::to_string(c) + "]");
  return MatView(data_.data(), r, c);
}

Tensor::ConstMatView Tensor::view(int r, int c) const {
  if (static_cast<Eigen::Index>(r) * c != numel())
    throw ShapeError("Tensor: cannot view " + shape_str() + " as [" + std::to_string(r) + "x" +
                     std::to_string(c) + "]");
  return ConstMatView(data_.data(), r, c);
}

Tensor::MatView Tensor::mat() {
  if (rank() == 1) return view(1, extent(0));
  if (rank() == 2) return view(extent(0), extent(1));
  throw ShapeError("Tensor: mat() requires rank 1 or 2, got " + shape_str());
}

Tensor::ConstMatView Tensor::mat() const {
  if (rank() == 1) return view(1, extent(0));
  if (rank() == 2) return view(extent(0), extent(1));
  throw ShapeError("Tensor: mat() requires rank 1 or 2, got " + shape_str());
}

Tensor::VecView Tensor::vec() { return VecView(data_.data(), data_.size()); }

Tensor::ConstVecView Tensor::vec() const { return ConstVecView(data_.data(), data_.size()); }

}  // namespace cemb
