#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "vdr/error.hpp"

namespace vdr {

// Dense row-major array of doubles. Rank 1 (vectors) and rank 2 (matrices)
// cover everything the models need; a scalar is a length-1 vector.
class Tensor {
 public:
  Tensor() = default;

  static Tensor vector(std::size_t n) { return Tensor(n, 0, true); }
  static Tensor matrix(std::size_t rows, std::size_t cols) { return Tensor(rows, cols, false); }

  static Tensor from(std::vector<double> values) {
    Tensor t;
    t.rows_ = values.size();
    t.cols_ = 0;
    t.data_ = std::move(values);
    return t;
  }

  static Tensor scalar(double v) { return from({v}); }

  bool is_vector() const { return cols_ == 0; }
  bool is_matrix() const { return cols_ != 0; }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  std::span<double> span() { return {data_.data(), data_.size()}; }
  std::span<const double> span() const { return {data_.data(), data_.size()}; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  void fill(double v) {
    for (double& x : data_) x = v;
  }

  bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  bool operator==(const Tensor& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

 private:
  Tensor(std::size_t rows, std::size_t cols, bool is_vec)
      : rows_(rows), cols_(is_vec ? 0 : cols), data_(rows * (is_vec ? 1 : cols), 0.0) {}

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;  // 0 marks a vector
  std::vector<double> data_;
};

}  // namespace vdr
