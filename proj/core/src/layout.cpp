#include "vecsynth/layout.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include <json.hpp>

#include "text_util.hpp"
#include "vecsynth/error.hpp"

namespace vecsynth {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

double cosine_sim(std::string_view a, std::string_view b) {
  std::map<std::string, double> ta, tb;
  for (auto& t : tokenize(a)) ta[t] += 1.0;
  for (auto& t : tokenize(b)) tb[t] += 1.0;
  if (ta.empty() && tb.empty()) return 1.0;
  if (ta.empty() || tb.empty()) return 0.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [t, v] : ta) {
    na += v * v;
    if (auto it = tb.find(t); it != tb.end()) dot += v * it->second;
  }
  for (const auto& [t, v] : tb) nb += v * v;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
}

double jaccard_sim(std::string_view a, std::string_view b) {
  const auto va = tokenize(a), vb = tokenize(b);
  const std::set<std::string> sa(va.begin(), va.end()), sb(vb.begin(), vb.end());
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& t : sa) inter += sb.count(t);
  return static_cast<double>(inter) / static_cast<double>(sa.size() + sb.size() - inter);
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

double edit_sim(std::string_view a, std::string_view b) {
  const std::size_t n = std::max(a.size(), b.size());
  if (n == 0) return 0.0;
  return static_cast<double>(levenshtein(a, b)) / static_cast<double>(n);
}

double reconstruction_error(std::string_view prompt, std::string_view reconstructed, const SimilarityWeights& w) {
  return 1.0 - (w.cosine * cosine_sim(prompt, reconstructed) + w.jaccard * jaccard_sim(prompt, reconstructed) -
                w.edit * edit_sim(prompt, reconstructed));
}

namespace {

std::string count_phrase(const std::string& label, std::size_t n) {
  if (n == 1) return std::string(detail::indefinite_article(label)) + " " + label;
  const auto cut = label.find_last_of(' ');
  const std::string head = cut == std::string::npos ? std::string() : label.substr(0, cut + 1);
  const std::string noun = cut == std::string::npos ? label : label.substr(cut + 1);
  return detail::number_word(n) + " " + head + detail::pluralize(noun);
}

struct Group {
  std::string label;
  std::size_t count = 0;
  double sx = 0.0, sy = 0.0;
  double cx() const { return sx / static_cast<double>(count); }
  double cy() const { return sy / static_cast<double>(count); }
};

}  // namespace

std::string caption_from_layout(const GroundedLayout& layout) {
  std::vector<Group> groups;
  for (const auto& o : layout.objects) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) { return g.label == o.label; });
    if (it == groups.end()) {
      groups.push_back({o.label});
      it = groups.end() - 1;
    }
    ++it->count;
    it->sx += o.box.cx();
    it->sy += o.box.cy();
  }
  std::stable_sort(groups.begin(), groups.end(), [](const Group& a, const Group& b) { return a.cx() < b.cx(); });

  std::string out;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    if (i > 0) {
      const double dx = groups[i - 1].cx() - groups[i].cx();
      const double dy = groups[i - 1].cy() - groups[i].cy();
      const char* rel = std::abs(dx) >= std::abs(dy) ? (dx <= 0 ? "to the left of" : "to the right of")
                                                     : (dy < 0 ? "above" : "below");
      out += " ";
      out += rel;
      out += " ";
    }
    out += count_phrase(groups[i].label, groups[i].count);
  }
  if (!layout.background_prompt.empty()) out += " with " + layout.background_prompt;
  return out;
}

std::vector<std::string> validate_layout(const GroundedLayout& layout, double canvas_w, double canvas_h) {
  std::vector<std::string> v;
  if (layout.objects.empty()) v.push_back("layout has no objects");
  for (std::size_t i = 0; i < layout.objects.size(); ++i) {
    const auto& o = layout.objects[i];
    const auto& b = o.box;
    const std::string tag = "object " + std::to_string(i);
    if (o.label.empty()) v.push_back(tag + ": empty label");
    if (!std::isfinite(b.x) || !std::isfinite(b.y) || !std::isfinite(b.w) || !std::isfinite(b.h)) {
      v.push_back(tag + ": non-finite box");
      continue;
    }
    if (!(b.w > 0.0 && b.h > 0.0)) {
      v.push_back(tag + ": box has no area");
      continue;
    }
    if (b.x >= canvas_w || b.y >= canvas_h || b.x + b.w <= 0.0 || b.y + b.h <= 0.0) {
      v.push_back(tag + ": box lies outside the canvas");
    }
  }
  return v;
}

GroundedLayout scale_boxes(const GroundedLayout& layout, double factor, double canvas_w, double canvas_h) {
  if (!(factor > 0.0)) throw DomainError("scale_boxes: factor must be positive");
  GroundedLayout out = layout;
  if (factor == 1.0) return out;
  for (auto& o : out.objects) {
    const double cx = o.box.cx(), cy = o.box.cy();
    const double hw = 0.5 * o.box.w * factor, hh = 0.5 * o.box.h * factor;
    const double x0 = std::max(0.0, cx - hw), y0 = std::max(0.0, cy - hh);
    const double x1 = std::min(canvas_w, cx + hw), y1 = std::min(canvas_h, cy + hh);
    o.box = {x0, y0, x1 - x0, y1 - y0};
  }
  return out;
}

GroundedLayout resize_layout(const GroundedLayout& layout, double from_w, double from_h, double to_w, double to_h) {
  if (!(from_w > 0 && from_h > 0 && to_w > 0 && to_h > 0)) throw DomainError("resize_layout: sizes must be positive");
  GroundedLayout out = layout;
  const double sx = to_w / from_w, sy = to_h / from_h;
  for (auto& o : out.objects) o.box = {o.box.x * sx, o.box.y * sy, o.box.w * sx, o.box.h * sy};
  return out;
}

CorrectionResult correct_layout(LayoutGenerator& gen, const std::string& prompt, const CorrectionOptions& opt) {
  return correct_layout(gen, prompt, opt, [&](const GroundedLayout& l) {
    return reconstruction_error(prompt, caption_from_layout(l), opt.weights);
  });
}

CorrectionResult correct_layout(LayoutGenerator& gen, const std::string& prompt, const CorrectionOptions& opt,
                                const LayoutScorer& score) {
  if (opt.max_iters < 1) throw DomainError("correct_layout: max_iters must be at least 1");
  CorrectionResult res;
  std::optional<LayoutFeedback> feedback;
  for (int iter = 1; iter <= opt.max_iters; ++iter) {
    GroundedLayout layout;
    try {
      layout = gen.generate(prompt, feedback);
    } catch (const std::exception& e) {
      throw BackendError("layout", e.what(), iter);
    }
    if (const auto v = validate_layout(layout, opt.canvas_w, opt.canvas_h); !v.empty()) {
      throw BackendError("layout", "generator returned an invalid layout: " + v.front(), iter);
    }
    const double delta = score(layout);
    res.trace.push_back(delta);
    if (iter == 1 || delta < res.trace[res.best_index]) {
      res.best_index = res.trace.size() - 1;
      res.layout = layout;
    }
    if (iter > 1 && std::abs(res.trace[res.trace.size() - 2] - delta) < opt.epsilon) {
      res.converged = true;
      break;
    }
    feedback = LayoutFeedback{std::move(layout), delta};
  }
  return res;
}

std::string layout_to_json(const GroundedLayout& layout) {
  nlohmann::ordered_json j;
  j["caption"] = layout.caption;
  j["objects"] = nlohmann::ordered_json::array();
  for (const auto& o : layout.objects) {
    j["objects"].push_back({{"label", o.label}, {"box", {o.box.x, o.box.y, o.box.w, o.box.h}}});
  }
  j["background_prompt"] = layout.background_prompt;
  j["negative_prompt"] = layout.negative_prompt;
  return j.dump(2) + "\n";
}

GroundedLayout layout_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("layout JSON: ") + e.what(), e.byte > 0 ? e.byte - 1 : 0);
  }
  try {
    if (!j.is_object()) throw ParseError("layout JSON must be an object");
    GroundedLayout l;
    l.caption = j.value("caption", std::string());
    l.background_prompt = j.value("background_prompt", std::string());
    l.negative_prompt = j.value("negative_prompt", std::string());
    if (!j.contains("objects") || !j["objects"].is_array()) throw ParseError("layout JSON needs an objects array");
    for (const auto& o : j["objects"]) {
      const auto& box = o.at("box");
      if (!box.is_array() || box.size() != 4) throw ParseError("layout JSON: box must be [x, y, w, h]");
      l.objects.push_back({o.at("label").get<std::string>(),
                           {box[0].get<double>(), box[1].get<double>(), box[2].get<double>(), box[3].get<double>()}});
    }
    return l;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("layout JSON: ") + e.what());
  }
}

}  // namespace vecsynth
