#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vecsynth {

/// Axis-aligned box in canvas pixels, (x, y) is the top-left corner.
struct BBox {
  double x = 0.0, y = 0.0, w = 0.0, h = 0.0;

  double cx() const { return x + 0.5 * w; }
  double cy() const { return y + 0.5 * h; }
  double area() const { return w * h; }

  friend bool operator==(const BBox&, const BBox&) = default;
};

struct LayoutObject {
  std::string label;
  BBox box;

  friend bool operator==(const LayoutObject&, const LayoutObject&) = default;
};

/// Caption, one labeled box per object instance, and the background and
/// negative prompts. Boxes are in pixels of the canvas the layout was
/// generated for (512x512 unless stated otherwise).
struct GroundedLayout {
  std::string caption;
  std::vector<LayoutObject> objects;
  std::string background_prompt;
  std::string negative_prompt;

  friend bool operator==(const GroundedLayout&, const GroundedLayout&) = default;
};

struct SimilarityWeights {
  double cosine = 1.0;
  double jaccard = 1.0;
  double edit = 0.01;
};

/// Lowercase alphanumeric runs.
std::vector<std::string> tokenize(std::string_view text);

/// Cosine of term-frequency vectors; 1 if both texts are empty, 0 if one is.
double cosine_sim(std::string_view a, std::string_view b);
/// |A n B| / |A u B| over token sets; 1 if both are empty.
double jaccard_sim(std::string_view a, std::string_view b);
/// Character Levenshtein distance over max(len a, len b); 0 for equal strings.
double edit_sim(std::string_view a, std::string_view b);
std::size_t levenshtein(std::string_view a, std::string_view b);

/// 1 - [w.cosine * cos + w.jaccard * jac - w.edit * edit].
double reconstruction_error(std::string_view prompt, std::string_view reconstructed, const SimilarityWeights& w = {});

/// Template caption: identical labels are counted ("two giraffes"), label
/// groups are ordered by mean box-center x, consecutive groups are joined
/// by a spatial relation from their centers, and " with <background>"
/// closes the sentence when a background prompt is present.
std::string caption_from_layout(const GroundedLayout& layout);

/// Empty iff the layout has objects, every label is non-empty, and every
/// box is finite, has positive area and overlaps the canvas.
std::vector<std::string> validate_layout(const GroundedLayout& layout, double canvas_w, double canvas_h);

/// Every box scaled about its center, then clamped to the canvas.
/// DomainError unless factor > 0.
GroundedLayout scale_boxes(const GroundedLayout& layout, double factor, double canvas_w, double canvas_h);

/// Boxes mapped from a (from_w x from_h) canvas onto a (to_w x to_h) one.
GroundedLayout resize_layout(const GroundedLayout& layout, double from_w, double from_h, double to_w, double to_h);

struct LayoutFeedback {
  GroundedLayout previous;
  double delta_rec = 0.0;
};

/// Source of grounded layouts. generate() is called once per correction
/// iteration; from the second call on it receives the previous layout and
/// its reconstruction error.
class LayoutGenerator {
 public:
  virtual ~LayoutGenerator() = default;
  virtual GroundedLayout generate(const std::string& prompt, const std::optional<LayoutFeedback>& feedback) = 0;
};

struct CorrectionOptions {
  double epsilon = 1e-4;
  int max_iters = 10;
  SimilarityWeights weights;
  double canvas_w = 512.0;
  double canvas_h = 512.0;
};

struct CorrectionResult {
  GroundedLayout layout;       // minimum-error layout
  std::vector<double> trace;   // error of every iteration, in order
  std::size_t best_index = 0;  // position of `layout` in the trace
  bool converged = false;      // stopped on |delta change| < epsilon
};

using LayoutScorer = std::function<double(const GroundedLayout&)>;

/// Iterative layout correction. Each iteration generates a layout, scores
/// it, and stops once two consecutive scores differ by less than epsilon
/// or max_iters is reached. Generator failures and invalid layouts surface
/// as BackendError with stage "layout" and the 1-based iteration.
CorrectionResult correct_layout(LayoutGenerator& gen, const std::string& prompt, const CorrectionOptions& opt = {});
/// Same loop with an explicit scorer instead of caption reconstruction.
CorrectionResult correct_layout(LayoutGenerator& gen, const std::string& prompt, const CorrectionOptions& opt,
                                const LayoutScorer& score);

/// JSON form {caption, objects:[{label, box:[x,y,w,h]}], background_prompt,
/// negative_prompt}. Parsing raises ParseError.
std::string layout_to_json(const GroundedLayout& layout);
GroundedLayout layout_from_json(std::string_view text);

}  // namespace vecsynth
