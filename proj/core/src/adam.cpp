#include "vecsynth/adam.hpp"

#include <cmath>

#include "vecsynth/error.hpp"

namespace vecsynth {

namespace {

template <class Lr>
void step_impl(std::span<double> params, std::span<const double> grads, AdamState& s, Lr lr) {
  if (params.size() != grads.size()) throw DomainError("adam_step: parameter and gradient sizes differ");
  if (s.m.empty() && s.v.empty() && s.step == 0) {
    s.m.assign(params.size(), 0.0);
    s.v.assign(params.size(), 0.0);
  }
  if (s.m.size() != params.size() || s.v.size() != params.size()) throw DomainError("adam_step: state does not match the parameters");
  ++s.step;
  const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * g;
    s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * g * g;
    const double mh = s.m[i] / c1, vh = s.v[i] / c2;
    params[i] -= lr(i) * mh / (std::sqrt(vh) + s.eps);
  }
}

}  // namespace

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr) {
  step_impl(params, grads, state, [lr](std::size_t) { return lr; });
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, std::span<const double> lr) {
  if (lr.size() != params.size()) throw DomainError("adam_step: one learning rate per parameter required");
  step_impl(params, grads, state, [lr](std::size_t i) { return lr[i]; });
}

}  // namespace vecsynth
