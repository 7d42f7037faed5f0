#pragma once

#include "tapt/ops.hpp"
#include "tapt/random.hpp"
#include "tapt/tensor.hpp"

namespace tapt {

inline constexpr double kInitRange = 0.05;

template <typename Scalar>
Matrix<Scalar> uniform_matrix(Index rows, Index cols, Rng& rng, double range = kInitRange) {
  Matrix<Scalar> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(rng.uniform(-range, range));
  return m;
}

/// Affine map x W + b with W [in×out] and b [1×out].
template <typename Scalar>
struct Linear {
  Parameter<Scalar> weight;
  Parameter<Scalar> bias;

  static Linear init(Index in, Index out, Rng& rng) {
    return {Parameter<Scalar>(uniform_matrix<Scalar>(in, out, rng)),
            Parameter<Scalar>(Matrix<Scalar>::Zero(1, out))};
  }

  Index in_features() const { return weight.value.rows(); }
  Index out_features() const { return weight.value.cols(); }
};

/// Records `layer` on the tape; const layers take part without gradients.
template <typename Scalar, typename Layer>
Var<Scalar> apply(Tape<Scalar>& tape, Layer& layer, const Var<Scalar>& x) {
  return linear(x, tape.parameter(layer.weight), tape.parameter(layer.bias));
}

template <typename Scalar>
struct Norm {
  Parameter<Scalar> gain;
  Parameter<Scalar> bias;

  static Norm init(Index width) {
    return {Parameter<Scalar>(Matrix<Scalar>::Ones(1, width)), Parameter<Scalar>(Matrix<Scalar>::Zero(1, width))};
  }
};

template <typename Scalar, typename NormT>
Var<Scalar> apply_norm(Tape<Scalar>& tape, NormT& norm, const Var<Scalar>& x) {
  return layer_norm(x, tape.parameter(norm.gain), tape.parameter(norm.bias));
}

}  // namespace tapt
