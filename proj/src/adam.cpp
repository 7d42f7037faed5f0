#include "tapt/adam.hpp"

#include <cmath>
#include <string>

namespace tapt {

template <typename Scalar>
void adam_step(std::span<Parameter<Scalar>* const> params, AdamState<Scalar>& state, double lr) {
  if (state.m.empty()) {
    for (const auto* p : params) {
      state.m.push_back(Matrix<Scalar>::Zero(p->value.rows(), p->value.cols()));
      state.v.push_back(Matrix<Scalar>::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (state.m.size() != params.size()) {
    throw ShapeError("adam_step: state tracks " + std::to_string(state.m.size()) + " tensors, got " +
                     std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& value = params[i]->value;
    if (state.m[i].rows() != value.rows() || state.m[i].cols() != value.cols()) {
      throw ShapeError("adam_step: moment shape " + shape_of(state.m[i]) + " vs parameter " + shape_of(value));
    }
    if (params[i]->has_grad() &&
        (params[i]->grad.rows() != value.rows() || params[i]->grad.cols() != value.cols())) {
      throw ShapeError("adam_step: gradient shape " + shape_of(params[i]->grad) + " vs parameter " +
                       shape_of(value));
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  const Scalar b1 = Scalar(state.beta1), b2 = Scalar(state.beta2);

  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter<Scalar>& p = *params[i];
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (p.has_grad()) {
      m = b1 * m + (Scalar(1) - b1) * p.grad;
      v = b2 * v + (Scalar(1) - b2) * p.grad.cwiseAbs2();
    } else {
      m *= b1;
      v *= b2;
    }
    const Scalar step_size = Scalar(lr / correction1);
    const Scalar inv_c2 = Scalar(1.0 / correction2);
    p.value.array() -= step_size * m.array() / ((v.array() * inv_c2).sqrt() + Scalar(state.eps));
  }
}

template void adam_step(std::span<Parameter<float>* const>, AdamState<float>&, double);
template void adam_step(std::span<Parameter<double>* const>, AdamState<double>&, double);

}  // namespace tapt
