#include "tapt/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>

namespace tapt {

std::string shape_string(Index rows, Index cols) {
  return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
}

namespace {

template <typename Scalar>
void require_same_tape(const Var<Scalar>& a, const Var<Scalar>& b, const char* op) {
  if (&a.tape() != &b.tape()) throw std::logic_error(std::string(op) + ": operands on different tapes");
}

[[noreturn]] void shape_mismatch(const char* op, Index ar, Index ac, Index br, Index bc) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_string(ar, ac) + " and " +
                   shape_string(br, bc));
}

}  // namespace

template <typename Scalar>
Var<Scalar> matmul(const Var<Scalar>& a, const Var<Scalar>& b) {
  require_same_tape(a, b, "matmul");
  if (a.cols() != b.rows()) shape_mismatch("matmul", a.rows(), a.cols(), b.rows(), b.cols());
  const std::size_t ia = a.id(), ib = b.id();
  Matrix<Scalar> out = a.value() * b.value();
  return a.tape().record(std::move(out), {ia, ib}, [ia, ib](Tape<Scalar>& t, std::size_t self) {
    const auto& g = t.grad(self);
    if (t.requires_grad(ia)) t.accumulate(ia, g * t.value(ib).transpose());
    if (t.requires_grad(ib)) t.accumulate(ib, t.value(ia).transpose() * g);
  });
}

template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b) {
  require_same_tape(a, b, "add");
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    shape_mismatch("add", a.rows(), a.cols(), b.rows(), b.cols());
  }
  const std::size_t ia = a.id(), ib = b.id();
  Matrix<Scalar> out = a.value() + b.value();
  return a.tape().record(std::move(out), {ia, ib}, [ia, ib](Tape<Scalar>& t, std::size_t self) {
    const Matrix<Scalar> g = t.grad(self);
    t.accumulate(ia, g);
    t.accumulate(ib, g);
  });
}

template <typename Scalar>
Var<Scalar> add_row(const Var<Scalar>& a, const Var<Scalar>& bias) {
  require_same_tape(a, bias, "add_row");
  if (bias.rows() != 1 || bias.cols() != a.cols()) {
    shape_mismatch("add_row", a.rows(), a.cols(), bias.rows(), bias.cols());
  }
  const std::size_t ia = a.id(), ib = bias.id();
  Matrix<Scalar> out = a.value().rowwise() + bias.value().row(0);
  return a.tape().record(std::move(out), {ia, ib}, [ia, ib](Tape<Scalar>& t, std::size_t self) {
    const Matrix<Scalar> g = t.grad(self);
    t.accumulate(ia, g);
    if (t.requires_grad(ib)) t.accumulate(ib, g.colwise().sum());
  });
}

template <typename Scalar>
Var<Scalar> mul(const Var<Scalar>& a, const Var<Scalar>& b) {
  require_same_tape(a, b, "mul");
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    shape_mismatch("mul", a.rows(), a.cols(), b.rows(), b.cols());
  }
  const std::size_t ia = a.id(), ib = b.id();
  Matrix<Scalar> out = a.value().cwiseProduct(b.value());
  return a.tape().record(std::move(out), {ia, ib}, [ia, ib](Tape<Scalar>& t, std::size_t self) {
    const auto& g = t.grad(self);
    if (t.requires_grad(ia)) t.accumulate(ia, g.cwiseProduct(t.value(ib)));
    if (t.requires_grad(ib)) t.accumulate(ib, g.cwiseProduct(t.value(ia)));
  });
}

template <typename Scalar>
Var<Scalar> scale(const Var<Scalar>& a, Scalar s) {
  const std::size_t ia = a.id();
  Matrix<Scalar> out = a.value() * s;
  return a.tape().record(std::move(out), {ia}, [ia, s](Tape<Scalar>& t, std::size_t self) {
    t.accumulate(ia, t.grad(self) * s);
  });
}

template <typename Scalar>
Var<Scalar> relu(const Var<Scalar>& a) {
  const std::size_t ia = a.id();
  Matrix<Scalar> out = a.value().cwiseMax(Scalar(0));
  return a.tape().record(std::move(out), {ia}, [ia](Tape<Scalar>& t, std::size_t self) {
    const auto& x = t.value(ia);
    t.accumulate(ia, (x.array() > Scalar(0)).select(t.grad(self), Scalar(0)));
  });
}

template <typename Scalar>
Var<Scalar> gelu(const Var<Scalar>& a) {
  const std::size_t ia = a.id();
  const Scalar c = Scalar(0.7978845608028654);  // sqrt(2 / pi)
  const Scalar k = Scalar(0.044715);
  Matrix<Scalar> out = a.value().unaryExpr([c, k](Scalar x) {
    return Scalar(0.5) * x * (Scalar(1) + std::tanh(c * (x + k * x * x * x)));
  });
  return a.tape().record(std::move(out), {ia}, [ia, c, k](Tape<Scalar>& t, std::size_t self) {
    Matrix<Scalar> d = t.value(ia).unaryExpr([c, k](Scalar x) {
      const Scalar th = std::tanh(c * (x + k * x * x * x));
      return Scalar(0.5) * (Scalar(1) + th) +
             Scalar(0.5) * x * (Scalar(1) - th * th) * c * (Scalar(1) + Scalar(3) * k * x * x);
    });
    t.accumulate(ia, t.grad(self).cwiseProduct(d));
  });
}

template <typename Scalar>
Var<Scalar> sum(const Var<Scalar>& a) {
  const std::size_t ia = a.id();
  const Index r = a.rows(), c = a.cols();
  Matrix<Scalar> out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape().record(std::move(out), {ia}, [ia, r, c](Tape<Scalar>& t, std::size_t self) {
    t.accumulate(ia, Matrix<Scalar>::Constant(r, c, t.grad(self)(0, 0)));
  });
}

template <typename Scalar>
Matrix<Scalar> softmax(const Matrix<Scalar>& logits) {
  Matrix<Scalar> out(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    const Scalar m = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - m).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

template <typename Scalar>
Var<Scalar> softmax_rows(const Var<Scalar>& a) {
  const std::size_t ia = a.id();
  auto probs = std::make_shared<Matrix<Scalar>>(softmax(a.value()));
  Matrix<Scalar> out = *probs;
  return a.tape().record(std::move(out), {ia}, [ia, probs](Tape<Scalar>& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& p = *probs;
    Matrix<Scalar> dot = (g.cwiseProduct(p)).rowwise().sum();
    Matrix<Scalar> dx = p.cwiseProduct(g - dot.replicate(1, g.cols()));
    t.accumulate(ia, dx);
  });
}

template <typename Scalar>
Var<Scalar> layer_norm(const Var<Scalar>& x, const Var<Scalar>& gain, const Var<Scalar>& bias,
                       Scalar eps) {
  require_same_tape(x, gain, "layer_norm");
  require_same_tape(x, bias, "layer_norm");
  const Index n = x.cols();
  if (gain.rows() != 1 || gain.cols() != n) shape_mismatch("layer_norm", x.rows(), n, gain.rows(), gain.cols());
  if (bias.rows() != 1 || bias.cols() != n) shape_mismatch("layer_norm", x.rows(), n, bias.rows(), bias.cols());

  const auto& xv = x.value();
  auto normed = std::make_shared<Matrix<Scalar>>(xv.rows(), n);
  auto inv_std = std::make_shared<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(xv.rows());
  for (Index i = 0; i < xv.rows(); ++i) {
    const Scalar mean = xv.row(i).mean();
    const Scalar var = (xv.row(i).array() - mean).square().mean();
    const Scalar s = Scalar(1) / std::sqrt(var + eps);
    (*inv_std)(i) = s;
    normed->row(i) = (xv.row(i).array() - mean) * s;
  }
  Matrix<Scalar> out =
      (normed->array().rowwise() * gain.value().row(0).array()).rowwise() + bias.value().row(0).array();

  const std::size_t ix = x.id(), ig = gain.id(), ib = bias.id();
  return x.tape().record(std::move(out), {ix, ig, ib},
                         [ix, ig, ib, normed, inv_std](Tape<Scalar>& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& xhat = *normed;
    if (t.requires_grad(ig)) t.accumulate(ig, g.cwiseProduct(xhat).colwise().sum());
    if (t.requires_grad(ib)) t.accumulate(ib, g.colwise().sum());
    if (!t.requires_grad(ix)) return;
    Matrix<Scalar> dxhat = g.array().rowwise() * t.value(ig).row(0).array();
    Matrix<Scalar> dx(dxhat.rows(), dxhat.cols());
    for (Index i = 0; i < dxhat.rows(); ++i) {
      const Scalar mean_d = dxhat.row(i).mean();
      const Scalar mean_dx = dxhat.row(i).cwiseProduct(xhat.row(i)).mean();
      dx.row(i) = (*inv_std)(i) * (dxhat.row(i).array() - mean_d - xhat.row(i).array() * mean_dx);
    }
    t.accumulate(ix, dx);
  });
}

template <typename Scalar>
Var<Scalar> select_rows(const Var<Scalar>& a, std::span<const int> rows) {
  const auto& av = a.value();
  Matrix<Scalar> out(static_cast<Index>(rows.size()), av.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= av.rows()) {
      throw std::out_of_range("row index " + std::to_string(rows[i]) + " outside tensor of shape " +
                              shape_of(av));
    }
    out.row(static_cast<Index>(i)) = av.row(rows[i]);
  }
  const std::size_t ia = a.id();
  const Index r = av.rows(), c = av.cols();
  std::vector<int> idx(rows.begin(), rows.end());
  return a.tape().record(std::move(out), {ia}, [ia, r, c, idx = std::move(idx)](Tape<Scalar>& t, std::size_t self) {
    const auto& g = t.grad(self);
    Matrix<Scalar> dx = Matrix<Scalar>::Zero(r, c);
    for (std::size_t i = 0; i < idx.size(); ++i) dx.row(idx[i]) += g.row(static_cast<Index>(i));
    t.accumulate(ia, dx);
  });
}

template <typename Scalar>
Var<Scalar> embedding_lookup(const Var<Scalar>& table, std::span<const int> ids) {
  for (int id : ids) {
    if (id < 0 || id >= table.rows()) {
      throw std::out_of_range("token id " + std::to_string(id) + " outside vocabulary of size " +
                              std::to_string(table.rows()));
    }
  }
  return select_rows(table, ids);
}

template <typename Scalar>
Var<Scalar> concat_rows(std::span<const Var<Scalar>> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  const Index cols = parts[0].cols();
  Index rows = 0;
  for (const auto& p : parts) {
    require_same_tape(parts[0], p, "concat_rows");
    if (p.cols() != cols) shape_mismatch("concat_rows", parts[0].rows(), cols, p.rows(), p.cols());
    rows += p.rows();
  }
  Matrix<Scalar> out(rows, cols);
  std::vector<std::size_t> ids;
  std::vector<Index> offsets;
  Index at = 0;
  for (const auto& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    ids.push_back(p.id());
    offsets.push_back(at);
    at += p.rows();
  }
  return parts[0].tape().record(std::move(out), ids, [ids, offsets](Tape<Scalar>& t, std::size_t self) {
    const auto& g = t.grad(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      const Index rows_k = t.value(ids[k]).rows();
      t.accumulate(ids[k], g.middleRows(offsets[k], rows_k));
    }
  });
}

template <typename Scalar>
Var<Scalar> concat_cols(std::span<const Var<Scalar>> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const Index rows = parts[0].rows();
  Index cols = 0;
  for (const auto& p : parts) {
    require_same_tape(parts[0], p, "concat_cols");
    if (p.rows() != rows) shape_mismatch("concat_cols", rows, parts[0].cols(), p.rows(), p.cols());
    cols += p.cols();
  }
  Matrix<Scalar> out(rows, cols);
  std::vector<std::size_t> ids;
  std::vector<Index> offsets;
  Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    ids.push_back(p.id());
    offsets.push_back(at);
    at += p.cols();
  }
  return parts[0].tape().record(std::move(out), ids, [ids, offsets](Tape<Scalar>& t, std::size_t self) {
    const auto& g = t.grad(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      const Index cols_k = t.value(ids[k]).cols();
      t.accumulate(ids[k], g.middleCols(offsets[k], cols_k));
    }
  });
}

template <typename Scalar>
Var<Scalar> dropout(const Var<Scalar>& x, double p, bool training, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("dropout probability must lie in [0, 1)");
  if (!training || p == 0.0) return x;
  const auto& xv = x.value();
  const Scalar keep_scale = Scalar(1.0 / (1.0 - p));
  auto mask = std::make_shared<Matrix<Scalar>>(xv.rows(), xv.cols());
  for (Index i = 0; i < xv.rows(); ++i) {
    for (Index j = 0; j < xv.cols(); ++j) {
      (*mask)(i, j) = rng.uniform() < p ? Scalar(0) : keep_scale;
    }
  }
  Matrix<Scalar> out = xv.cwiseProduct(*mask);
  const std::size_t ix = x.id();
  return x.tape().record(std::move(out), {ix}, [ix, mask](Tape<Scalar>& t, std::size_t self) {
    t.accumulate(ix, t.grad(self).cwiseProduct(*mask));
  });
}

template <typename Scalar>
Var<Scalar> cross_entropy(const Var<Scalar>& logits, std::span<const int> labels) {
  const auto& lv = logits.value();
  if (static_cast<Index>(labels.size()) != lv.rows()) {
    throw ShapeError("cross_entropy: " + std::to_string(labels.size()) + " labels for logits of shape " +
                     shape_of(lv));
  }
  if (lv.rows() == 0) throw ShapeError("cross_entropy: empty batch");
  for (int y : labels) {
    if (y < 0 || y >= lv.cols()) {
      throw std::invalid_argument("cross_entropy: label " + std::to_string(y) + " outside [0, " +
                                  std::to_string(lv.cols()) + ")");
    }
  }
  auto probs = std::make_shared<Matrix<Scalar>>(softmax(lv));
  Scalar total = 0;
  for (Index i = 0; i < lv.rows(); ++i) {
    const Scalar m = lv.row(i).maxCoeff();
    const Scalar lse = m + std::log((lv.row(i).array() - m).exp().sum());
    total += lse - lv(i, labels[static_cast<std::size_t>(i)]);
  }
  const Index b = lv.rows();
  Matrix<Scalar> out(1, 1);
  out(0, 0) = total / Scalar(b);
  const std::size_t il = logits.id();
  std::vector<int> ys(labels.begin(), labels.end());
  return logits.tape().record(std::move(out), {il}, [il, probs, ys = std::move(ys), b](Tape<Scalar>& t, std::size_t self) {
    Matrix<Scalar> d = *probs;
    for (Index i = 0; i < b; ++i) d(i, ys[static_cast<std::size_t>(i)]) -= Scalar(1);
    t.accumulate(il, d * (t.grad(self)(0, 0) / Scalar(b)));
  });
}

template <typename Scalar>
std::vector<Matrix<Scalar>> attention_probabilities(const Matrix<Scalar>& q, const Matrix<Scalar>& k,
                                                    int heads, const std::vector<bool>& key_mask) {
  const Index len = q.rows();
  const Index dh = q.cols() / heads;
  const Scalar inv_sqrt = Scalar(1) / std::sqrt(Scalar(dh));
  if (std::find(key_mask.begin(), key_mask.end(), true) == key_mask.end()) {
    throw std::invalid_argument("attention: every key is masked");
  }
  std::vector<Matrix<Scalar>> out;
  out.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    Matrix<Scalar> s = q.middleCols(h * dh, dh) * k.middleCols(h * dh, dh).transpose() * inv_sqrt;
    for (Index j = 0; j < len; ++j) {
      if (!key_mask[static_cast<std::size_t>(j)]) s.col(j).setConstant(-std::numeric_limits<Scalar>::infinity());
    }
    Matrix<Scalar> p(len, len);
    for (Index i = 0; i < len; ++i) {
      const Scalar m = s.row(i).maxCoeff();
      p.row(i) = (s.row(i).array() - m).exp();
      for (Index j = 0; j < len; ++j) {
        if (!key_mask[static_cast<std::size_t>(j)]) p(i, j) = Scalar(0);
      }
      p.row(i) /= p.row(i).sum();
    }
    out.push_back(std::move(p));
  }
  return out;
}

template <typename Scalar>
Var<Scalar> multi_head_attention(const Var<Scalar>& q, const Var<Scalar>& k, const Var<Scalar>& v,
                                 int heads, const std::vector<bool>& key_mask) {
  require_same_tape(q, k, "multi_head_attention");
  require_same_tape(q, v, "multi_head_attention");
  const Index len = q.rows(), d = q.cols();
  if (k.rows() != len || k.cols() != d) shape_mismatch("multi_head_attention", len, d, k.rows(), k.cols());
  if (v.rows() != len || v.cols() != d) shape_mismatch("multi_head_attention", len, d, v.rows(), v.cols());
  if (heads <= 0 || d % heads != 0) {
    throw ShapeError("multi_head_attention: width " + std::to_string(d) + " not divisible into " +
                     std::to_string(heads) + " heads");
  }
  if (static_cast<Index>(key_mask.size()) != len) {
    throw ShapeError("multi_head_attention: key mask length " + std::to_string(key_mask.size()) +
                     " for sequence of " + std::to_string(len));
  }
  auto probs = std::make_shared<std::vector<Matrix<Scalar>>>(
      attention_probabilities(q.value(), k.value(), heads, key_mask));
  const Index dh = d / heads;
  Matrix<Scalar> out(len, d);
  for (int h = 0; h < heads; ++h) out.middleCols(h * dh, dh) = (*probs)[h] * v.value().middleCols(h * dh, dh);

  const std::size_t iq = q.id(), ik = k.id(), iv = v.id();
  return q.tape().record(std::move(out), {iq, ik, iv},
                         [iq, ik, iv, probs, heads, dh](Tape<Scalar>& t, std::size_t self) {
    const auto& g = t.grad(self);
    const auto& qv = t.value(iq);
    const auto& kv = t.value(ik);
    const auto& vv = t.value(iv);
    const Scalar inv_sqrt = Scalar(1) / std::sqrt(Scalar(dh));
    Matrix<Scalar> dq = Matrix<Scalar>::Zero(qv.rows(), qv.cols());
    Matrix<Scalar> dk = Matrix<Scalar>::Zero(kv.rows(), kv.cols());
    Matrix<Scalar> dv = Matrix<Scalar>::Zero(vv.rows(), vv.cols());
    for (int h = 0; h < heads; ++h) {
      const auto& p = (*probs)[static_cast<std::size_t>(h)];
      const auto go = g.middleCols(h * dh, dh);
      dv.middleCols(h * dh, dh) = p.transpose() * go;
      Matrix<Scalar> dp = go * vv.middleCols(h * dh, dh).transpose();
      Matrix<Scalar> rowdot = dp.cwiseProduct(p).rowwise().sum();
      Matrix<Scalar> ds = p.cwiseProduct(dp - rowdot.replicate(1, dp.cols())) * inv_sqrt;
      dq.middleCols(h * dh, dh) = ds * kv.middleCols(h * dh, dh);
      dk.middleCols(h * dh, dh) = ds.transpose() * qv.middleCols(h * dh, dh);
    }
    t.accumulate(iq, dq);
    t.accumulate(ik, dk);
    t.accumulate(iv, dv);
  });
}

#define TAPT_INSTANTIATE_OPS(S)                                                                   \
  template Var<S> matmul(const Var<S>&, const Var<S>&);                                          \
  template Var<S> add(const Var<S>&, const Var<S>&);                                             \
  template Var<S> add_row(const Var<S>&, const Var<S>&);                                         \
  template Var<S> mul(const Var<S>&, const Var<S>&);                                             \
  template Var<S> scale(const Var<S>&, S);                                                       \
  template Var<S> relu(const Var<S>&);                                                           \
  template Var<S> gelu(const Var<S>&);                                                           \
  template Var<S> sum(const Var<S>&);                                                            \
  template Var<S> softmax_rows(const Var<S>&);                                                   \
  template Var<S> layer_norm(const Var<S>&, const Var<S>&, const Var<S>&, S);                    \
  template Var<S> embedding_lookup(const Var<S>&, std::span<const int>);                         \
  template Var<S> select_rows(const Var<S>&, std::span<const int>);                              \
  template Var<S> concat_rows(std::span<const Var<S>>);                                          \
  template Var<S> concat_cols(std::span<const Var<S>>);                                          \
  template Var<S> dropout(const Var<S>&, double, bool, Rng&);                                    \
  template Var<S> cross_entropy(const Var<S>&, std::span<const int>);                            \
  template Var<S> multi_head_attention(const Var<S>&, const Var<S>&, const Var<S>&, int,         \
                                       const std::vector<bool>&);                                \
  template std::vector<Matrix<S>> attention_probabilities(const Matrix<S>&, const Matrix<S>&,    \
                                                          int, const std::vector<bool>&);        \
  template Matrix<S> softmax(const Matrix<S>&);

TAPT_INSTANTIATE_OPS(float)
TAPT_INSTANTIATE_OPS(double)

}  // namespace tapt
