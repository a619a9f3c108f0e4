#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vecsynth/encoder.hpp"
#include "vecsynth/scene.hpp"

namespace vecsynth {

enum class MlpHead : std::uint32_t { linear = 0, sigmoid = 1 };

/// ReLU layers of `layer_widths` followed by an affine head of
/// `output_dim` (identity or sigmoid). An empty width list leaves only
/// the head.
struct MlpSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> layer_widths;
  std::size_t output_dim = 0;
  MlpHead head = MlpHead::linear;

  /// Eleven layers: 5 x 512, 2 x 256, 3 x 128, 64.
  static std::vector<std::size_t> default_widths();
  /// Sizes of every layer boundary: input, hidden..., output.
  std::vector<std::size_t> dims() const;
  /// DomainError on a zero dimension.
  void validate() const;

  friend bool operator==(const MlpSpec&, const MlpSpec&) = default;
};

/// All weights in one flat buffer: per layer the row-major (out x in)
/// weight matrix, then the bias.
struct MlpParams {
  std::vector<std::size_t> dims;
  std::vector<double> values;

  std::size_t layers() const { return dims.size() - 1; }
  std::size_t offset(std::size_t layer) const;
  const double* weight(std::size_t layer) const { return values.data() + offset(layer); }
  const double* bias(std::size_t layer) const { return weight(layer) + dims[layer + 1] * dims[layer]; }
};

/// Seeded uniform +-1/sqrt(fan_in) for weights and biases.
MlpParams init_mlp(const MlpSpec& spec, std::uint64_t seed);
MlpParams zero_mlp(const MlpSpec& spec);

/// Output of every layer after its activation; the last entry is the
/// network output.
std::vector<Embedding> mlp_activations(const MlpSpec& spec, const MlpParams& params, const Embedding& input);
Embedding mlp_forward(const MlpSpec& spec, const MlpParams& params, const Embedding& input);

struct MlpGradients {
  std::vector<double> params;  // layout of MlpParams::values
  Embedding input;
};
/// Exact gradients of <upstream, mlp_forward(input)>.
MlpGradients mlp_backward(const MlpSpec& spec, const MlpParams& params, const Embedding& input, const Embedding& upstream);

/// Checkpoint: u32 dimension count, u32 dims, u32 head, then float32
/// weights, all little-endian.
void save_mlp(const std::string& path, const MlpSpec& spec, const MlpParams& params);
std::pair<MlpSpec, MlpParams> load_mlp(const std::string& path);

struct TrainResult {
  MlpParams params;
  Embedding output;
  std::vector<double> loss;  // before every step, then after the last
  std::uint64_t steps = 0;
};

/// Adam on ||s1 - MLP_s(s1)||_1 starting from init_mlp(spec, seed). `spec`
/// must map s1 onto itself with a linear head.
TrainResult foreground_abstract(const Embedding& s1, const MlpSpec& spec, int iters = 500, double lr = 1e-5,
                                std::uint64_t seed = 0);

/// Sigmoid outputs of MLP_d. DomainError unless the head is sigmoid.
std::vector<double> background_probs(const Embedding& s2, const MlpSpec& spec, const MlpParams& params);

/// Adam on the mean cross-entropy between background_probs(s2) and labels.
TrainResult train_background(const Embedding& s2, const MlpSpec& spec, const std::vector<int>& labels, int iters = 100,
                             double lr = 1e-5, std::uint64_t seed = 0);

/// Number of probability slots for eta strokes: ceil(eta / 8).
std::size_t background_slots(std::size_t eta);

struct LayerSampling {
  std::size_t layer;  // 1-based hidden layer
  double rate;        // leading fraction of its activations kept
};
/// {0.3, 0.4, 0.6, 0.7} at layers {2, 7, 8, 11}.
std::vector<LayerSampling> default_layer_sampling();

/// Concatenation of the first ceil(rate * width) activations of each
/// sampled layer. DomainError if a layer does not exist.
Embedding sample_combined_features(const std::vector<Embedding>& activations, const std::vector<LayerSampling>& sampling);

/// Background stroke background_indices[i] gets width w * probs[i]; it is
/// hidden (opacity 0) when probs[i] < hide_below. Probabilities must lie
/// in (0, 1]; indices must be distinct and in range.
Canvas apply_simplification(const Canvas& canvas, const std::vector<double>& probs,
                            const std::vector<std::size_t>& background_indices, double hide_below = 0.05);

}  // namespace vecsynth
