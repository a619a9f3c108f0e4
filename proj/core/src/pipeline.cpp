#include "vecsynth/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>

#include <json.hpp>

#include "vecsynth/abstraction.hpp"
#include "vecsynth/error.hpp"
#include "vecsynth/init.hpp"
#include "vecsynth/optimize.hpp"

namespace vecsynth {

std::string_view to_string(Style style) {
  switch (style) {
    case Style::sketch: return "sketch";
    case Style::clipart: return "clipart";
    case Style::abstract: return "abstract";
    case Style::primitive: return "primitive";
  }
  return "clipart";
}

Style style_from_string(std::string_view name) {
  for (Style s : {Style::sketch, Style::clipart, Style::abstract, Style::primitive}) {
    if (to_string(s) == name) return s;
  }
  throw DomainError("unknown style '" + std::string(name) + "'");
}

void PipelineConfig::validate() const {
  if (width <= 0 || height <= 0) throw DomainError("canvas size must be positive");
  if (!(stroke_width > 0.0)) throw DomainError("stroke width must be positive");
  if (iters < 0 || mlp_fg_iters < 1 || mlp_bg_iters < 1) throw DomainError("iteration counts must be positive");
  for (double lr : {lr_points, lr_width, lr_color, lr_opacity, mlp_lr, mlp_bg_lr}) {
    if (!(lr > 0.0)) throw DomainError("learning rates must be positive");
  }
  if (!(softness > 0.0)) throw DomainError("softness must be positive");
  if (!(box_scale > 0.0)) throw DomainError("box scale must be positive");
  if (!(gamma_alpha > 1.0)) throw DomainError("gamma alpha must exceed 1");
  if (style == Style::primitive && primitive == ShapeKind::bezier) throw DomainError("primitive style needs a primitive shape");
}

std::size_t visible_stroke_count(const Canvas& canvas) {
  return static_cast<std::size_t>(std::count_if(canvas.strokes.begin(), canvas.strokes.end(),
                                                [](const Stroke& s) { return s.opacity > 0.0 && s.color.a > 0.0; }));
}

std::string metrics_to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["delta_rec"] = r.delta_rec;
  j["loss"] = r.loss;
  j["psnr_initial"] = r.psnr_initial;
  j["psnr_final"] = r.psnr_final;
  j["strokes"] = r.strokes;
  j["visible_strokes"] = r.visible_strokes;
  j["seconds"] = r.seconds;
  j["style"] = r.style;
  j["composition_energy"] = r.composition_energy ? nlohmann::ordered_json(*r.composition_energy) : nullptr;
  j["align"] = r.align ? nlohmann::ordered_json(*r.align) : nullptr;
  j["combined_features"] = r.combined_features;
  return j.dump(2) + "\n";
}

namespace {

Mask union_mask(const GroundedLayout& layout, int w, int h) {
  Mask m{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0)};
  for (const auto& o : layout.objects) {
    const Mask b = mask_from_box(o.box, w, h);
    for (std::size_t p = 0; p < m.values.size(); ++p) m.values[p] |= b.values[p];
  }
  return m;
}

std::optional<double> energy_metric(const AttentionMap& fused, const std::vector<AttentionMap>& maps,
                                    const GroundedLayout& boxes, const PipelineConfig& cfg) {
  // One latent per box shared by its foreground and background branches.
  std::vector<Mask> masks;
  std::vector<LatentTensor> latents;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    masks.push_back(mask_from_box(boxes.objects[i].box, cfg.width, cfg.height));
    latents.push_back(sample_gamma_latent(cfg.width, cfg.height, 4, cfg.gamma_alpha, cfg.seed + i));
  }
  try {
    return composition_energy(fused, maps, masks, latents, latents);
  } catch (const DegenerateError&) {
    return std::nullopt;
  }
}

double median_luminance_outside(const RasterImage& img, const Mask& mask) {
  std::vector<double> v;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (!mask.at(x, y)) v.push_back(luminance(img, x, y));
    }
  }
  if (v.empty()) return 1.0;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
  return v[v.size() / 2];
}

struct AbstractionOutcome {
  Canvas canvas;
  double align = 0.0;
  std::size_t combined = 0;
};

AbstractionOutcome abstract_stage(const Canvas& canvas, const std::vector<std::size_t>& background, const RasterImage& target,
                                  const AttentionMap& fused, const Mask& fg_mask, const PerceptualEncoder& enc,
                                  const PipelineConfig& cfg) {
  const Embedding s1 = enc.encode(fused);
  const Embedding s2 = enc.encode(target);
  const std::size_t d = enc.dimension();
  const MlpSpec spec_s{d, MlpSpec::default_widths(), d, MlpHead::linear};

  // A background stroke should stay when it sits on target content.
  const double bg_lum = median_luminance_outside(target, fg_mask);
  std::vector<int> labels;
  for (std::size_t k : background) {
    const Point a = stroke_anchor(canvas.strokes[k]);
    const int x = std::clamp(static_cast<int>(a.x), 0, target.width - 1);
    const int y = std::clamp(static_cast<int>(a.y), 0, target.height - 1);
    labels.push_back(std::abs(luminance(target, x, y) - bg_lum) > 0.1 ? 1 : 0);
  }

  // MLP_s and MLP_d share nothing mutable and train side by side.
  auto fg = std::async(std::launch::async, [&] { return foreground_abstract(s1, spec_s, cfg.mlp_fg_iters, cfg.mlp_lr, cfg.seed); });
  std::optional<MlpSpec> spec_d;
  std::optional<TrainResult> bg;
  if (!background.empty()) {
    spec_d = MlpSpec{d, MlpSpec::default_widths(), background.size(), MlpHead::sigmoid};
    bg = train_background(s2, *spec_d, labels, cfg.mlp_bg_iters, cfg.mlp_bg_lr, cfg.seed + 1);
  }
  const TrainResult fg_res = fg.get();

  AbstractionOutcome out;
  out.canvas = bg ? apply_simplification(canvas, bg->output, background) : canvas;

  Embedding combined = sample_combined_features(mlp_activations(spec_s, fg_res.params, s1), default_layer_sampling());
  if (bg) {
    const Embedding more = sample_combined_features(mlp_activations(*spec_d, bg->params, s2), default_layer_sampling());
    combined.insert(combined.end(), more.begin(), more.end());
  }
  out.combined = combined.size();

  Canvas bg_only = out.canvas;
  bg_only.strokes.clear();
  for (std::size_t k : background) bg_only.strokes.push_back(out.canvas.strokes[k]);
  const Embedding s_bg = enc.encode(render(bg_only, cfg.softness));
  out.align = align_loss(s2, fg_res.output, s_bg, cfg.weights.epsilon_align);
  return out;
}

}  // namespace

PipelineResult run_pipeline(const std::string& prompt, LayoutGenerator& gen, GuidanceSource& guide, const PipelineConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  PipelineResult res;

  const CorrectionResult corr = correct_layout(gen, prompt, cfg.correction);
  res.layout = corr.layout;
  res.metrics.delta_rec = corr.trace;
  res.canvas_layout = resize_layout(corr.layout, cfg.correction.canvas_w, cfg.correction.canvas_h, cfg.width, cfg.height);
  const GroundedLayout scaled = scale_boxes(res.canvas_layout, cfg.box_scale, cfg.width, cfg.height);

  Guidance g;
  try {
    g = guide.guide(res.canvas_layout, cfg.width, cfg.height);
  } catch (const std::exception& e) {
    throw BackendError("guidance", e.what());
  }
  if (g.maps.size() != res.canvas_layout.objects.size()) throw BackendError("guidance", "expected one attention map per object");
  for (const auto& m : g.maps) {
    if (m.width != cfg.width || m.height != cfg.height) throw BackendError("guidance", "attention map size differs from the canvas");
  }
  if (g.target.width != cfg.width || g.target.height != cfg.height) throw BackendError("guidance", "target size differs from the canvas");
  res.target = g.target;

  const AttentionMap fused = fuse_attention(g.maps);
  const Mask fg_mask = union_mask(scaled, cfg.width, cfg.height);
  res.metrics.composition_energy = energy_metric(fused, g.maps, scaled, cfg);

  // The abstract style reserves ceil(eta / 8) strokes for the background.
  std::size_t n_bg = cfg.style == Style::abstract ? background_slots(cfg.strokes) : 0;
  Mask bg_mask = fg_mask;
  for (auto& v : bg_mask.values) v = !v;
  if (bg_mask.count() == 0) n_bg = 0;
  const std::vector<Point> fg_keys = select_keypoints(fused, fg_mask, cfg.strokes - n_bg, cfg.seed);

  InitConfig init;
  init.initial_width = cfg.stroke_width;
  init.initial_opacity = cfg.initial_opacity;
  init.jitter_radius = cfg.jitter_radius;
  init.seed = cfg.seed;
  const bool colored = cfg.style == Style::clipart || cfg.style == Style::primitive;
  const RasterImage* colors = colored ? &g.target : nullptr;
  Canvas canvas;
  if (cfg.style == Style::primitive) {
    init.primitive_kind = cfg.primitive;
    canvas = init_primitives(fg_keys, init, cfg.width, cfg.height, colors);
  } else {
    canvas = init_strokes(fg_keys, init, cfg.width, cfg.height, colors);
  }
  if (n_bg > 0) {
    AttentionMap away(cfg.width, cfg.height);
    for (std::size_t p = 0; p < away.size(); ++p) away.values[p] = std::max(1.0 - fused.values[p], 1e-6);
    init.seed = cfg.seed + 1;
    const Canvas extra = init_strokes(select_keypoints(away, bg_mask, n_bg, cfg.seed + 1), init, cfg.width, cfg.height);
    for (const auto& s : extra.strokes) {
      res.background_indices.push_back(canvas.strokes.size());
      canvas.strokes.push_back(s);
    }
  }

  const PyramidEncoder enc;
  OptimizeConfig oc;
  oc.iters = cfg.iters;
  oc.lr_points = cfg.lr_points;
  oc.lr_width = cfg.lr_width;
  oc.lr_color = cfg.lr_color;
  oc.lr_opacity = cfg.lr_opacity;
  oc.softness = cfg.softness;
  oc.optimize_color = colored;
  oc.workers = cfg.workers;
  for (const auto& o : scaled.objects) oc.anchor_region.push_back(o.box);
  oc.unconfined = res.background_indices;
  const OptimizeResult opt = optimize_canvas(canvas, g.target, fused, enc, cfg.weights, oc);
  res.canvas = opt.canvas;
  res.metrics.loss = opt.loss;
  res.metrics.psnr_initial = opt.psnr_initial;

  if (cfg.style == Style::abstract) {
    const AbstractionOutcome a = abstract_stage(res.canvas, res.background_indices, g.target, fused, fg_mask, enc, cfg);
    res.canvas = a.canvas;
    res.metrics.align = a.align;
    res.metrics.combined_features = a.combined;
  }

  res.image = render(res.canvas, cfg.softness);
  res.svg = to_svg(res.canvas);
  res.metrics.psnr_final = psnr(res.image, g.target);
  res.metrics.strokes = res.canvas.strokes.size();
  res.metrics.visible_strokes = visible_stroke_count(res.canvas);
  res.metrics.style = std::string(to_string(cfg.style));
  res.metrics.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

}  // namespace vecsynth
