#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace tmd {

/// Dense row-major array of doubles with rank 0, 1 or 2.
///
/// A Tensor is immutable once constructed: every operation produces a new
/// value. Construction rejects non-finite entries with NonFiniteResult and
/// a data length that disagrees with the shape with ShapeMismatch.
class Tensor {
 public:
  using Shape = std::vector<std::size_t>;

  Tensor() : Tensor(Shape{}, std::vector<double>{0.0}) {}
  Tensor(Shape shape, std::vector<double> data);

  static Tensor scalar(double v);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  static Tensor zeros(Shape shape);
  static Tensor filled(Shape shape, double v);
  static Tensor identity(std::size_t n);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t numel() const noexcept { return data_.size(); }
  bool is_scalar() const noexcept { return data_.size() == 1; }
  bool is_matrix() const noexcept { return shape_.size() == 2; }
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> data() const noexcept { return data_; }
  double operator[](std::size_t i) const { return data_[i]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }
  double item() const;

  /// Copies the storage out (the tensor itself stays immutable).
  std::vector<double> to_vector() const { return data_; }

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

std::string shape_string(const Tensor::Shape& shape);
std::size_t shape_numel(const Tensor::Shape& shape);

/// True when both tensors have identical shape and every value has the same
/// bit pattern.
bool bitwise_equal(const Tensor& a, const Tensor& b);

/// Largest absolute elementwise difference; ShapeMismatch if shapes differ.
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace tmd
