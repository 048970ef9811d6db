#pragma once

#include "mmgan/errors.hpp"
#include "mmgan/types.hpp"

#include <cmath>
#include <cstdint>

namespace mmgan {

template <typename Scalar>
struct AdamState {
  VectorX<Scalar> first_moment;
  VectorX<Scalar> second_moment;
  std::int64_t step_count = 0;
  Scalar lr = Scalar(2e-4);
  Scalar beta1 = Scalar(0.5);
  Scalar beta2 = Scalar(0.99);
  Scalar eps = Scalar(1e-8);

  static AdamState zeros(Eigen::Index size, Scalar lr, Scalar beta1 = Scalar(0.5),
                         Scalar beta2 = Scalar(0.99), Scalar eps = Scalar(1e-8)) {
    AdamState s;
    s.first_moment = VectorX<Scalar>::Zero(size);
    s.second_moment = VectorX<Scalar>::Zero(size);
    s.lr = lr;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.eps = eps;
    return s;
  }
};

/// One bias-corrected Adam update of `params` in place.
template <typename Scalar>
void adam_step(Eigen::Ref<VectorX<Scalar>> params, const Eigen::Ref<const VectorX<Scalar>>& grads,
               AdamState<Scalar>& state) {
  if (grads.size() != params.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size())
    throw InvalidArgument("adam_step: parameter, gradient and moment sizes differ");
  if (state.step_count < 0) throw InvalidArgument("adam_step: negative step count");
  ++state.step_count;
  state.first_moment = state.beta1 * state.first_moment + (Scalar(1) - state.beta1) * grads;
  state.second_moment =
      state.beta2 * state.second_moment + (Scalar(1) - state.beta2) * grads.cwiseAbs2();
  const auto t = static_cast<Scalar>(state.step_count);
  const Scalar c1 = Scalar(1) - std::pow(state.beta1, t);
  const Scalar c2 = Scalar(1) - std::pow(state.beta2, t);
  params.array() -= state.lr * (state.first_moment.array() / c1) /
                    ((state.second_moment.array() / c2).sqrt() + state.eps);
}

}  // namespace mmgan
