#pragma once

// Dense row-major tensor of doubles. Rank 1 and 2 cover every model in this
// library; scalars are rank-1 tensors of size 1.

#include <cassert>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace seglid {

struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    data.assign(static_cast<size_t>(count(shape)), 0.0);
  }

  static long long count(const std::vector<int>& s) {
    long long n = 1;
    for (int d : s) {
      if (d < 1) throw std::invalid_argument("tensor dimensions must be >= 1");
      n *= d;
    }
    return n;
  }

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }

  static Tensor scalar(double v) {
    Tensor t({1});
    t.data[0] = v;
    return t;
  }

  static Tensor vec(std::vector<double> v) {
    Tensor t;
    t.shape = {static_cast<int>(v.size())};
    t.data = std::move(v);
    return t;
  }

  size_t size() const { return data.size(); }
  int rank() const { return static_cast<int>(shape.size()); }

  int rows() const { return shape.empty() ? 0 : shape[0]; }
  int cols() const { return rank() == 2 ? shape[1] : 1; }

  double& at(int i) { return data[static_cast<size_t>(i)]; }
  double at(int i) const { return data[static_cast<size_t>(i)]; }
  double& at(int r, int c) { return data[static_cast<size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols() + c]; }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }

  // Reshape in place, keeping the existing buffer capacity when possible.
  void reset(const std::vector<int>& s) {
    shape = s;
    data.assign(static_cast<size_t>(count(shape)), 0.0);
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape == b.shape && a.data == b.data;
  }
};

}  // namespace seglid
