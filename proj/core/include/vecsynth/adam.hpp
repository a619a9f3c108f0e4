#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace vecsynth {

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update in place. The moment buffers are sized
/// on the first call; later calls with a different size raise DomainError.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr);
/// Same with a learning rate per coordinate.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, std::span<const double> lr);

}  // namespace vecsynth
