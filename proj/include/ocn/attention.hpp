#pragma once

#include <stdexcept>
#include <string>

#include "ocn/tensor.hpp"

namespace ocn {

// Tri-linear attention scores: S[i,j] = w1.u_i + w2.v_j + w3.(u_i o v_j),
// one scalar per (row of u, row of v) pair.
inline Tensor trilinear_attention(const Tensor& u, const Tensor& v, const Tensor& w1,
                                  const Tensor& w2, const Tensor& w3) {
  const int d = u.cols();
  if (v.cols() != d)
    throw std::invalid_argument("trilinear_attention: feature widths differ, " + u.shape_str() +
                                " vs " + v.shape_str());
  if (w1.rows() != d || w1.cols() != 1 || w2.rows() != d || w2.cols() != 1 || w3.rows() != 1 ||
      w3.cols() != d)
    throw std::invalid_argument("trilinear_attention: weights must be dx1, dx1, 1xd for d=" +
                                std::to_string(d) + ", got " + w1.shape_str() + ", " +
                                w2.shape_str() + ", " + w3.shape_str());
  const int x = u.rows(), y = v.rows();
  Tensor a = matmul(u, w1);                            // x x 1
  Tensor b = matmul(v, w2);                            // y x 1
  Tensor c = matmul(mul(u, w3), transpose(v));         // x x y
  return add(add(matmul(a, Tensor::full(1, y, 1.0)),
                 matmul(Tensor::full(x, 1, 1.0), transpose(b))),
             c);
}

}  // namespace ocn
