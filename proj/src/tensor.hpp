#pragma once

#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace kin::nn {

// Dense n-dimensional array, row-major, with an optional gradient buffer of
// the same shape. This is the exchange type for the standalone layer ops;
// the training path works on flat parameter blocks for speed.
template <class T>
struct Tensor {
  std::vector<int> shape;
  std::vector<T> values;
  std::vector<T> grad;  // empty, or values.size() entries

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
    values.assign(numel(), T(0));
  }

  std::size_t numel() const {
    std::size_t count = 1;
    for (int d : shape) {
      if (d < 0) throw std::invalid_argument("tensor: negative dimension");
      count *= static_cast<std::size_t>(d);
    }
    return count;
  }

  void alloc_grad() { grad.assign(values.size(), T(0)); }

  bool consistent() const {
    return values.size() == numel() && (grad.empty() || grad.size() == values.size());
  }
};

using Tensorf = Tensor<float>;
using Tensord = Tensor<double>;

} // namespace kin::nn
