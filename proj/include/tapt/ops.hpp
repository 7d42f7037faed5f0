#pragma once

#include "tapt/random.hpp"
#include "tapt/tensor.hpp"

#include <span>
#include <vector>

namespace tapt {

// Differentiable building blocks. Every function records its result on the
// tape of its first argument. Shape violations throw ShapeError naming both
// operand shapes.

template <typename Scalar>
Var<Scalar> matmul(const Var<Scalar>& a, const Var<Scalar>& b);

template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b);

/// a[m×n] + bias[1×n] broadcast over rows.
template <typename Scalar>
Var<Scalar> add_row(const Var<Scalar>& a, const Var<Scalar>& bias);

/// Elementwise product.
template <typename Scalar>
Var<Scalar> mul(const Var<Scalar>& a, const Var<Scalar>& b);

template <typename Scalar>
Var<Scalar> scale(const Var<Scalar>& a, Scalar s);

template <typename Scalar>
Var<Scalar> relu(const Var<Scalar>& a);

/// Tanh-approximated GELU.
template <typename Scalar>
Var<Scalar> gelu(const Var<Scalar>& a);

/// Sum of all elements, as a 1×1 tensor.
template <typename Scalar>
Var<Scalar> sum(const Var<Scalar>& a);

template <typename Scalar>
Var<Scalar> softmax_rows(const Var<Scalar>& a);

/// Per-row normalisation to zero mean and unit (population) variance, then
/// gain[1×n] * x + bias[1×n].
template <typename Scalar>
Var<Scalar> layer_norm(const Var<Scalar>& x, const Var<Scalar>& gain, const Var<Scalar>& bias,
                       Scalar eps = Scalar(1e-5));

/// Rows of `table` selected by `ids`. Throws std::out_of_range for ids past
/// the table.
template <typename Scalar>
Var<Scalar> embedding_lookup(const Var<Scalar>& table, std::span<const int> ids);

/// Same as embedding_lookup, for picking rows out of activations.
template <typename Scalar>
Var<Scalar> select_rows(const Var<Scalar>& a, std::span<const int> rows);

/// Stacks tensors vertically; all must share a column count.
template <typename Scalar>
Var<Scalar> concat_rows(std::span<const Var<Scalar>> parts);

/// Joins tensors horizontally; all must share a row count.
template <typename Scalar>
Var<Scalar> concat_cols(std::span<const Var<Scalar>> parts);

/// Inverted dropout. With training == false or p == 0 the input node is
/// returned unchanged. Throws std::invalid_argument unless 0 <= p < 1.
template <typename Scalar>
Var<Scalar> dropout(const Var<Scalar>& x, double p, bool training, Rng& rng);

/// Mean over rows of -log softmax(logits)[label], stabilised by max
/// subtraction. Labels must lie in [0, cols).
template <typename Scalar>
Var<Scalar> cross_entropy(const Var<Scalar>& logits, std::span<const int> labels);

/// Scaled dot-product self-attention over `heads` column blocks of q, k and v
/// (each [len×d]). Keys with key_mask[j] == false receive zero weight.
template <typename Scalar>
Var<Scalar> multi_head_attention(const Var<Scalar>& q, const Var<Scalar>& k,
                                 const Var<Scalar>& v, int heads,
                                 const std::vector<bool>& key_mask);

/// The attention probabilities used by multi_head_attention, one [len×len]
/// matrix per head. Masked columns are exactly zero.
template <typename Scalar>
std::vector<Matrix<Scalar>> attention_probabilities(const Matrix<Scalar>& q,
                                                    const Matrix<Scalar>& k, int heads,
                                                    const std::vector<bool>& key_mask);

/// Row-wise softmax of a plain matrix.
template <typename Scalar>
Matrix<Scalar> softmax(const Matrix<Scalar>& logits);

/// x W + b.
template <typename Scalar>
Var<Scalar> linear(const Var<Scalar>& x, const Var<Scalar>& weight, const Var<Scalar>& bias) {
  return add_row(matmul(x, weight), bias);
}

}  // namespace tapt
