#pragma once

#include "tapt/tensor.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace tapt {

/// Bias-corrected Adam moments. Moment buffers are created on the first step
/// and must keep matching their parameters afterwards.
template <typename Scalar>
struct AdamState {
  std::uint64_t step = 0;
  std::vector<Matrix<Scalar>> m;
  std::vector<Matrix<Scalar>> v;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One Adam update over `params` using their accumulated gradients.
/// Parameters without a gradient are treated as having a zero gradient.
template <typename Scalar>
void adam_step(std::span<Parameter<Scalar>* const> params, AdamState<Scalar>& state, double lr);

}  // namespace tapt
