#include "vecsynth/layout_generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "text_util.hpp"
#include "vecsynth/error.hpp"

namespace vecsynth {

namespace {

const std::set<std::string> kBackgroundPrepositions{"on", "in", "at", "under", "inside", "near", "over", "beside"};
const std::set<std::string> kFillerWords{"the", "and", "with", "of"};

struct ObjectGroup {
  std::string label;
  std::size_t count = 1;
};

struct ParsedPrompt {
  std::vector<ObjectGroup> groups;
  std::string background;
};

ParsedPrompt parse_prompt(const std::string& prompt) {
  const auto tokens = tokenize(prompt);
  ParsedPrompt out;
  std::size_t end = tokens.size();
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (kBackgroundPrepositions.count(tokens[i])) {
      end = i;
      break;
    }
  }
  for (std::size_t i = end + 1; i < tokens.size(); ++i) {
    out.background += (out.background.empty() ? "" : " ") + tokens[i];
  }

  std::vector<std::string> words;
  std::size_t count = 1;
  auto flush = [&] {
    if (words.empty()) return;
    if (count > 1) words.back() = detail::singularize(words.back());
    std::string label;
    for (const auto& w : words) label += (label.empty() ? "" : " ") + w;
    out.groups.push_back({label, count});
    words.clear();
    count = 1;
  };
  for (std::size_t i = 0; i < end; ++i) {
    const std::string& t = tokens[i];
    if (t == "and" || t == "with") {
      flush();
    } else if (const auto n = detail::parse_count_word(t)) {
      flush();
      count = *n;
    } else if (!kFillerWords.count(t)) {
      words.push_back(t);
    }
  }
  flush();
  return out;
}

// Instances on a near-square grid; each box is a square of 0.6 of the
// smaller cell side, centered in its cell.
std::vector<BBox> grid_boxes(std::size_t n, double size) {
  std::vector<BBox> out;
  if (n == 0) return out;
  const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  const std::size_t rows = (n + cols - 1) / cols;
  const double cw = size / static_cast<double>(cols), ch = size / static_cast<double>(rows);
  const double side = 0.6 * std::min(cw, ch);
  for (std::size_t i = 0; i < n; ++i) {
    const double cx = (static_cast<double>(i % cols) + 0.5) * cw;
    const double cy = (static_cast<double>(i / cols) + 0.5) * ch;
    out.push_back({cx - 0.5 * side, cy - 0.5 * side, side, side});
  }
  return out;
}

}  // namespace

MockLayoutGenerator::MockLayoutGenerator(std::map<std::string, std::vector<GroundedLayout>> table, double canvas_size)
    : table_(std::move(table)), canvas_size_(canvas_size) {
  if (!(canvas_size_ > 0.0)) throw DomainError("MockLayoutGenerator: canvas size must be positive");
}

GroundedLayout MockLayoutGenerator::parse(const std::string& prompt) const {
  const ParsedPrompt parsed = parse_prompt(prompt);
  std::size_t total = 0;
  for (const auto& g : parsed.groups) total += g.count;
  const auto boxes = grid_boxes(total, canvas_size_);
  GroundedLayout l;
  l.caption = prompt;
  l.background_prompt = parsed.background;
  l.negative_prompt = "blurry, low quality";
  std::size_t k = 0;
  for (const auto& g : parsed.groups) {
    for (std::size_t i = 0; i < g.count; ++i) l.objects.push_back({g.label, boxes[k++]});
  }
  return l;
}

GroundedLayout MockLayoutGenerator::generate(const std::string& prompt, const std::optional<LayoutFeedback>& feedback) {
  calls_ = feedback ? calls_ + 1 : 0;
  if (auto it = table_.find(prompt); it != table_.end()) {
    if (it->second.empty()) throw BackendError("mock", "empty layout table entry");
    return it->second[std::min(calls_, it->second.size() - 1)];
  }
  const GroundedLayout full = parse(prompt);
  if (full.objects.empty()) throw BackendError("mock", "no objects found in prompt '" + prompt + "'");

  // Progressive refinement: group g appears from call g on, the background
  // one call after the last group.
  std::vector<std::string> order;
  for (const auto& o : full.objects) {
    if (std::find(order.begin(), order.end(), o.label) == order.end()) order.push_back(o.label);
  }
  const std::size_t shown = std::min(calls_ + 1, order.size());
  GroundedLayout l = full;
  l.objects.clear();
  for (const auto& o : full.objects) {
    const auto pos = static_cast<std::size_t>(std::find(order.begin(), order.end(), o.label) - order.begin());
    if (pos < shown) l.objects.push_back(o);
  }
  if (calls_ < order.size()) l.background_prompt.clear();
  return l;
}

LayoutPrompt build_layout_prompt(const std::string& prompt, const std::optional<LayoutFeedback>& feedback) {
  LayoutPrompt p;
  p.system =
      "Task specification\n"
      "You plan the composition of an image on a 512 x 512 pixel canvas. From a text description you return a "
      "grounded layout: one labeled bounding box per object instance, a short background description, and a "
      "negative prompt listing things to avoid. Boxes use pixel coordinates [x, y, w, h] where (x, y) is the "
      "top-left corner.\n";

  std::ostringstream u;
  u << "Instruction details\n"
       "- Reply with a single JSON object and nothing else.\n"
       "- Fields: caption (the description), objects (list of {label, box}), background_prompt, negative_prompt.\n"
       "- Use one box for every instance. Three apples means three boxes labeled \"apple\".\n"
       "- Keep every box inside the canvas with positive width and height.\n"
       "- Labels are short nouns, optionally with one adjective.\n\n";
  u << "In-context examples\n"
       "Description: two cats sitting on a sofa\n"
       "{\"caption\": \"two cats sitting on a sofa\", \"objects\": [{\"label\": \"cat\", \"box\": [60, 200, 170, 190]}, "
       "{\"label\": \"cat\", \"box\": [280, 210, 170, 180]}], \"background_prompt\": \"a sofa in a living room\", "
       "\"negative_prompt\": \"blurry, distorted\"}\n"
       "Description: a red balloon above a house\n"
       "{\"caption\": \"a red balloon above a house\", \"objects\": [{\"label\": \"red balloon\", \"box\": [206, 40, 100, "
       "130]}, {\"label\": \"house\", \"box\": [130, 250, 250, 220]}], \"background_prompt\": \"a clear sky\", "
       "\"negative_prompt\": \"low quality\"}\n\n";
  u << "Layout request\n"
       "Description: "
    << prompt << "\n";
  if (feedback) {
    u << "\nCorrection feedback\n"
         "Your previous layout was:\n"
      << layout_to_json(feedback->previous)
      << "A caption rebuilt from that layout scored a reconstruction error of " << feedback->delta_rec
      << " against the description (lower is better, -1 is a perfect match). Add missing objects, remove extra "
         "ones, fix the counts and positions, and return the corrected layout.\n";
  }
  p.user = u.str();
  return p;
}

std::optional<std::string> extract_json_object(const std::string& text) {
  const auto start = text.find('{');
  if (start == std::string::npos) return std::nullopt;
  int depth = 0;
  bool in_string = false, escaped = false;
  for (std::size_t i = start; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) escaped = false;
      else if (c == '\\') escaped = true;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return text.substr(start, i - start + 1);
  }
  return std::nullopt;
}

HttpLayoutOptions HttpLayoutOptions::from_env() {
  HttpLayoutOptions o;
  if (const char* e = std::getenv("CRAFT_LLM_ENDPOINT")) o.endpoint = e;
  if (const char* k = std::getenv("CRAFT_LLM_KEY")) o.api_key = k;
  return o;
}

HttpLayoutGenerator::HttpLayoutGenerator(HttpLayoutOptions options) : options_(std::move(options)) {
  if (options_.endpoint.empty()) throw BackendError("llm", "no endpoint configured (set CRAFT_LLM_ENDPOINT)");
}

GroundedLayout HttpLayoutGenerator::generate(const std::string& prompt, const std::optional<LayoutFeedback>& feedback) {
  // Split "scheme://host[:port]" from the request path.
  const auto scheme_end = options_.endpoint.find("://");
  const auto path_start = options_.endpoint.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  const std::string base = options_.endpoint.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/v1/chat/completions" : options_.endpoint.substr(path_start);

  const LayoutPrompt p = build_layout_prompt(prompt, feedback);
  nlohmann::json body{{"model", options_.model},
                      {"temperature", 0},
                      {"messages", {{{"role", "system"}, {"content", p.system}}, {{"role", "user"}, {"content", p.user}}}}};

  httplib::Client client(base);
  if (!client.is_valid()) throw BackendError("llm", "unsupported endpoint '" + options_.endpoint + "'");
  client.set_connection_timeout(options_.timeout_seconds, 0);
  client.set_read_timeout(options_.timeout_seconds, 0);
  client.set_write_timeout(options_.timeout_seconds, 0);
  httplib::Headers headers;
  if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);

  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) throw BackendError("llm", "request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) throw BackendError("llm", "HTTP status " + std::to_string(res->status));

  std::string content;
  try {
    const auto reply = nlohmann::json::parse(res->body);
    content = reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw BackendError("llm", std::string("malformed completion response: ") + e.what());
  }
  const auto obj = extract_json_object(content);
  if (!obj) throw BackendError("llm", "completion holds no JSON object");
  try {
    GroundedLayout l = layout_from_json(*obj);
    if (l.caption.empty()) l.caption = prompt;
    return l;
  } catch (const ParseError& e) {
    throw BackendError("llm", e.what());
  }
}

GroundedLayout FileLayoutGenerator::generate(const std::string& prompt, const std::optional<LayoutFeedback>&) {
  std::ifstream in(path_, std::ios::binary);
  if (!in) throw BackendError("layout-file", "cannot open " + path_);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    GroundedLayout l = layout_from_json(ss.str());
    if (l.caption.empty()) l.caption = prompt;
    return l;
  } catch (const ParseError& e) {
    throw BackendError("layout-file", e.what());
  }
}

}  // namespace vecsynth
