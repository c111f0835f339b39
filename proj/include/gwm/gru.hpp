// Gated recurrent unit cell shared by the host GNNs and the warp module.
#pragma once

#include "gwm/rng.hpp"
#include "gwm/tensor.hpp"

namespace gwm {

struct GruParams {
  Tensor wu, uu, bu;  // update gate:    u = sigmoid(x Wu + s Uu + bu)
  Tensor wr, ur, br;  // reset gate:     r = sigmoid(x Wr + s Ur + br)
  Tensor wc, uc, bc;  // candidate:      c = tanh(x Wc + (r*s) Uc + bc)
};

// state [..., Ds], input [..., Din] -> [..., Ds]
inline Tensor gru_cell(const Tensor& state, const Tensor& input, const GruParams& p) {
  if (state.rank() < 1 || input.rank() != state.rank())
    throw ShapeError("gru_cell: state " + detail::shape_str(state.shape()) + " vs input " +
                     detail::shape_str(input.shape()));
  auto u = sigmoid(add(add(matmul(input, p.wu), matmul(state, p.uu)), p.bu));
  auto r = sigmoid(add(add(matmul(input, p.wr), matmul(state, p.ur)), p.br));
  auto c = gwm::tanh(add(add(matmul(input, p.wc), matmul(mul(r, state), p.uc)), p.bc));
  return add(mul(one_minus(u), state), mul(u, c));
}

}  // namespace gwm
