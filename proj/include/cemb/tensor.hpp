#pragma once

#include <Eigen/Core>

#include <string>
#include <vector>

#include "cemb/errors.hpp"

namespace cemb {

std::string shape_to_string(const std::vector<int>& shape);

// Dense row-major tensor of doubles. Rank 1 and 2 cover everything the
// encoder and the losses need; ops view the flat storage through Eigen maps.
// Scalars use shape {1}.
class Tensor {
 public:
  using MatView =
      Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using ConstMatView =
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using VecView = Eigen::Map<Eigen::VectorXd>;
  using ConstVecView = Eigen::Map<const Eigen::VectorXd>;

  Tensor() = default;
  explicit Tensor(std::vector<int> shape, double fill = 0.0);
  Tensor(std::vector<int> shape, std::vector<double> values);

  static Tensor scalar(double v);
  static Tensor zeros(std::vector<int> shape) { return Tensor(std::move(shape), 0.0); }
  static Tensor ones(std::vector<int> shape) { return Tensor(std::move(shape), 1.0); }

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  Eigen::Index numel() const { return data_.size(); }
  int extent(int axis) const;
  int rows() const { return extent(0); }
  // Last extent: column count of a matrix, length of a vector.
  int cols() const;
  bool empty() const { return data_.size() == 0; }

  double item() const;
  double operator()(Eigen::Index i) const { return data_[i]; }
  double& operator()(Eigen::Index i) { return data_[i]; }
  double at(int r, int c) const;
  double& at(int r, int c);

  Eigen::ArrayXd& flat() { return data_; }
  const Eigen::ArrayXd& flat() const { return data_; }

  // Views with explicit extents (numel must match), used for rank promotion.
  MatView view(int r, int c);
  ConstMatView view(int r, int c) const;
  // Rank-2 view; rank-1 tensors are viewed as a single row.
  MatView mat();
  ConstMatView mat() const;
  VecView vec();
  ConstVecView vec() const;

  bool requires_grad() const { return requires_grad_; }
  Tensor& set_requires_grad(bool b) {
    requires_grad_ = b;
    return *this;
  }

  bool all_finite() const { return data_.allFinite(); }
  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  std::string shape_str() const { return shape_to_string(shape_); }

 private:
  std::vector<int> shape_;
  Eigen::ArrayXd data_;
  bool requires_grad_ = false;
};

}  // namespace cemb
