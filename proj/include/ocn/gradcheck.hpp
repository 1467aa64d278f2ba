#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "ocn/tensor.hpp"

namespace ocn {

// Compares analytic gradients with central finite differences for a
// scalar-valued function of the given leaf tensors. The function must rebuild
// its graph from the leaves' current values on every call. Returns
// max over coordinates of |analytic - numeric| / max(1, |analytic|).
inline double grad_check(const std::function<Tensor()>& f, std::vector<Tensor> leaves,
                         double epsilon = 1e-5) {
  Tensor loss = f();
  if (loss.rows() != 1 || loss.cols() != 1)
    throw std::invalid_argument("grad_check: function output must be scalar, got " +
                                loss.shape_str());
  for (auto& leaf : leaves) {
    if (!leaf.requires_grad())
      throw std::invalid_argument("grad_check: leaf does not require grad");
    leaf.zero_grad();
  }
  backward(loss);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(leaves.size());
  for (auto& leaf : leaves) analytic.push_back(leaf.grad());

  double worst = 0.0;
  for (std::size_t li = 0; li < leaves.size(); ++li) {
    Tensor& leaf = leaves[li];
    for (std::size_t i = 0; i < leaf.size(); ++i) {
      const double saved = leaf.values()[i];
      leaf.values()[i] = saved + epsilon;
      const double up = f().item();
      leaf.values()[i] = saved - epsilon;
      const double down = f().item();
      leaf.values()[i] = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double a = analytic[li][i];
      const double err = std::abs(a - numeric) / std::max(1.0, std::abs(a));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace ocn
