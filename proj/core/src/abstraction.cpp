#include "vecsynth/abstraction.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <set>
#include <stdexcept>

#include "vecsynth/adam.hpp"
#include "vecsynth/error.hpp"
#include "vecsynth/losses.hpp"

namespace vecsynth {

std::vector<std::size_t> MlpSpec::default_widths() { return {512, 512, 512, 512, 512, 256, 256, 128, 128, 128, 64}; }

std::vector<std::size_t> MlpSpec::dims() const {
  std::vector<std::size_t> d{input_dim};
  d.insert(d.end(), layer_widths.begin(), layer_widths.end());
  d.push_back(output_dim);
  return d;
}

void MlpSpec::validate() const {
  for (std::size_t d : dims()) {
    if (d == 0) throw DomainError("MlpSpec: every dimension must be positive");
  }
}

std::size_t MlpParams::offset(std::size_t layer) const {
  std::size_t off = 0;
  for (std::size_t l = 0; l < layer; ++l) off += dims[l + 1] * (dims[l] + 1);
  return off;
}

namespace {

std::size_t param_count(const std::vector<std::size_t>& dims) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) n += dims[l + 1] * (dims[l] + 1);
  return n;
}

void check_params(const MlpSpec& spec, const MlpParams& params) {
  if (params.dims != spec.dims() || params.values.size() != param_count(params.dims)) {
    throw DomainError("mlp: parameters do not match the spec");
  }
}

// Clamped so outputs stay strictly inside (0, 1) in double precision.
double sigmoid(double z) {
  z = std::clamp(z, -30.0, 30.0);
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace

MlpParams zero_mlp(const MlpSpec& spec) {
  spec.validate();
  MlpParams p{spec.dims(), {}};
  p.values.assign(param_count(p.dims), 0.0);
  return p;
}

MlpParams init_mlp(const MlpSpec& spec, std::uint64_t seed) {
  MlpParams p = zero_mlp(spec);
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < p.layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(p.dims[l]));
    std::uniform_real_distribution<double> u(-bound, bound);
    const std::size_t begin = p.offset(l), end = p.offset(l + 1);
    for (std::size_t i = begin; i < end; ++i) p.values[i] = u(rng);
  }
  return p;
}

std::vector<Embedding> mlp_activations(const MlpSpec& spec, const MlpParams& params, const Embedding& input) {
  check_params(spec, params);
  if (input.size() != spec.input_dim) throw DomainError("mlp_forward: input dimension does not match the spec");
  std::vector<Embedding> acts;
  const Embedding* x = &input;
  for (std::size_t l = 0; l < params.layers(); ++l) {
    const std::size_t in = params.dims[l], out = params.dims[l + 1];
    const double* w = params.weight(l);
    const double* b = params.bias(l);
    Embedding y(out);
    for (std::size_t r = 0; r < out; ++r) {
      double s = b[r];
      const double* row = w + r * in;
      for (std::size_t c = 0; c < in; ++c) s += row[c] * (*x)[c];
      if (l + 1 < params.layers()) {
        y[r] = std::max(s, 0.0);
      } else {
        y[r] = spec.head == MlpHead::sigmoid ? sigmoid(s) : s;
      }
    }
    acts.push_back(std::move(y));
    x = &acts.back();
  }
  return acts;
}

Embedding mlp_forward(const MlpSpec& spec, const MlpParams& params, const Embedding& input) {
  return std::move(mlp_activations(spec, params, input).back());
}

MlpGradients mlp_backward(const MlpSpec& spec, const MlpParams& params, const Embedding& input, const Embedding& upstream) {
  const auto acts = mlp_activations(spec, params, input);
  if (upstream.size() != spec.output_dim) throw DomainError("mlp_backward: upstream dimension does not match the spec");
  MlpGradients g{std::vector<double>(params.values.size(), 0.0), {}};
  // delta = d(loss)/d(pre-activation) of the current layer.
  Embedding delta = upstream;
  const std::size_t last = params.layers() - 1;
  if (spec.head == MlpHead::sigmoid) {
    for (std::size_t r = 0; r < delta.size(); ++r) delta[r] *= acts[last][r] * (1.0 - acts[last][r]);
  }
  for (std::size_t l = params.layers(); l-- > 0;) {
    const std::size_t in = params.dims[l], out = params.dims[l + 1];
    const Embedding& x = l == 0 ? input : acts[l - 1];
    const double* w = params.weight(l);
    double* gw = g.params.data() + params.offset(l);
    double* gb = gw + out * in;
    Embedding dx(in, 0.0);
    for (std::size_t r = 0; r < out; ++r) {
      const double d = delta[r];
      if (d == 0.0) continue;
      gb[r] += d;
      double* grow = gw + r * in;
      const double* row = w + r * in;
      for (std::size_t c = 0; c < in; ++c) {
        grow[c] += d * x[c];
        dx[c] += d * row[c];
      }
    }
    if (l > 0) {
      for (std::size_t c = 0; c < in; ++c) {
        if (!(acts[l - 1][c] > 0.0)) dx[c] = 0.0;
      }
    }
    delta = std::move(dx);
  }
  g.input = std::move(delta);
  return g;
}

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff), static_cast<char>((v >> 16) & 0xff),
                     static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw ParseError("truncated checkpoint " + path);
  return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 | static_cast<std::uint32_t>(b[2]) << 16 |
         static_cast<std::uint32_t>(b[3]) << 24;
}

}  // namespace

void save_mlp(const std::string& path, const MlpSpec& spec, const MlpParams& params) {
  check_params(spec, params);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  put_u32(out, static_cast<std::uint32_t>(params.dims.size()));
  for (std::size_t d : params.dims) put_u32(out, static_cast<std::uint32_t>(d));
  put_u32(out, static_cast<std::uint32_t>(spec.head));
  for (double v : params.values) {
    const auto f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof bits);
    put_u32(out, bits);
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

std::pair<MlpSpec, MlpParams> load_mlp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  const std::uint32_t n = get_u32(in, path);
  if (n < 2 || n > 1024) throw ParseError("checkpoint " + path + " has an implausible layer count", 0);
  std::vector<std::size_t> dims;
  for (std::uint32_t i = 0; i < n; ++i) dims.push_back(get_u32(in, path));
  const std::uint32_t head = get_u32(in, path);
  if (head > 1) throw ParseError("checkpoint " + path + " has an unknown head kind");
  MlpSpec spec{dims.front(), std::vector<std::size_t>(dims.begin() + 1, dims.end() - 1), dims.back(), static_cast<MlpHead>(head)};
  spec.validate();
  MlpParams p = zero_mlp(spec);
  for (auto& v : p.values) {
    const std::uint32_t bits = get_u32(in, path);
    float f;
    std::memcpy(&f, &bits, sizeof f);
    v = f;
  }
  return {spec, p};
}

TrainResult foreground_abstract(const Embedding& s1, const MlpSpec& spec, int iters, double lr, std::uint64_t seed) {
  if (iters < 1) throw DomainError("foreground_abstract: iters must be at least 1");
  if (spec.input_dim != s1.size() || spec.output_dim != s1.size() || spec.head != MlpHead::linear) {
    throw DomainError("foreground_abstract: spec must map the embedding onto itself with a linear head");
  }
  TrainResult res{init_mlp(spec, seed), {}, {}, 0};
  AdamState state;
  for (int it = 0; it < iters; ++it) {
    const Embedding out = mlp_forward(spec, res.params, s1);
    res.loss.push_back(l1_embed(s1, out));
    const auto g = mlp_backward(spec, res.params, s1, l1_embed_grad(s1, out));
    adam_step(res.params.values, g.params, state, lr);
  }
  res.output = mlp_forward(spec, res.params, s1);
  res.loss.push_back(l1_embed(s1, res.output));
  res.steps = state.step;
  return res;
}

std::vector<double> background_probs(const Embedding& s2, const MlpSpec& spec, const MlpParams& params) {
  if (spec.head != MlpHead::sigmoid) throw DomainError("background_probs: the head must be sigmoid");
  return mlp_forward(spec, params, s2);
}

TrainResult train_background(const Embedding& s2, const MlpSpec& spec, const std::vector<int>& labels, int iters, double lr,
                             std::uint64_t seed) {
  if (iters < 1) throw DomainError("train_background: iters must be at least 1");
  if (spec.head != MlpHead::sigmoid) throw DomainError("train_background: the head must be sigmoid");
  if (labels.size() != spec.output_dim) throw DomainError("train_background: one label per probability slot required");
  TrainResult res{init_mlp(spec, seed), {}, {}, 0};
  AdamState state;
  for (int it = 0; it < iters; ++it) {
    const auto p = background_probs(s2, spec, res.params);
    res.loss.push_back(ce_loss(p, labels));
    const auto g = mlp_backward(spec, res.params, s2, ce_loss_grad(p, labels));
    adam_step(res.params.values, g.params, state, lr);
  }
  res.output = background_probs(s2, spec, res.params);
  res.loss.push_back(ce_loss(res.output, labels));
  res.steps = state.step;
  return res;
}

std::size_t background_slots(std::size_t eta) { return (eta + 7) / 8; }

std::vector<LayerSampling> default_layer_sampling() { return {{2, 0.3}, {7, 0.4}, {8, 0.6}, {11, 0.7}}; }

Embedding sample_combined_features(const std::vector<Embedding>& activations, const std::vector<LayerSampling>& sampling) {
  Embedding out;
  for (const auto& s : sampling) {
    // The last activation is the head, not a hidden layer.
    if (s.layer < 1 || s.layer + 1 > activations.size()) {
      throw DomainError("sample_combined_features: no hidden layer " + std::to_string(s.layer));
    }
    if (!(s.rate > 0.0 && s.rate <= 1.0)) throw DomainError("sample_combined_features: rate must lie in (0, 1]");
    const Embedding& a = activations[s.layer - 1];
    const auto keep = static_cast<std::size_t>(std::ceil(s.rate * static_cast<double>(a.size())));
    out.insert(out.end(), a.begin(), a.begin() + static_cast<std::ptrdiff_t>(std::min(keep, a.size())));
  }
  return out;
}

Canvas apply_simplification(const Canvas& canvas, const std::vector<double>& probs,
                            const std::vector<std::size_t>& background_indices, double hide_below) {
  if (probs.size() != background_indices.size()) throw DomainError("apply_simplification: one probability per background stroke");
  Canvas out = canvas;
  std::set<std::size_t> seen;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const std::size_t k = background_indices[i];
    if (k >= out.strokes.size()) throw DomainError("apply_simplification: stroke index out of range");
    if (!seen.insert(k).second) throw DomainError("apply_simplification: duplicate stroke index");
    const double d = probs[i];
    if (!(d > 0.0 && d <= 1.0)) throw DomainError("apply_simplification: probabilities must lie in (0, 1]");
    out.strokes[k].width *= d;
    if (d < hide_below) out.strokes[k].opacity = 0.0;
  }
  return out;
}

}  // namespace vecsynth
