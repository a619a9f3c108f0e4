#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vecsynth/layout.hpp"

namespace vecsynth {

/// Deterministic generator for tests and offline runs.
///
/// Prompts found in the table replay their layout sequence, one entry per
/// call (the last entry repeats). Other prompts go through a small parser:
/// "<count> <noun> and <count> <noun> on <background>". The first call
/// places only the first object group and omits the background; every
/// call with feedback adds one more group, then the background, so the
/// correction loop has something to correct.
class MockLayoutGenerator : public LayoutGenerator {
 public:
  explicit MockLayoutGenerator(std::map<std::string, std::vector<GroundedLayout>> table = {}, double canvas_size = 512.0);

  GroundedLayout generate(const std::string& prompt, const std::optional<LayoutFeedback>& feedback) override;

  /// Layout the parser produces once fully refined.
  GroundedLayout parse(const std::string& prompt) const;

 private:
  std::map<std::string, std::vector<GroundedLayout>> table_;
  double canvas_size_;
  std::size_t calls_ = 0;
};

/// Text sent to the chat-completion service: a system message holding the
/// task specification and a user message holding instructions, examples,
/// the request, and (when present) correction feedback with the numeric
/// reconstruction error.
struct LayoutPrompt {
  std::string system;
  std::string user;
};
LayoutPrompt build_layout_prompt(const std::string& prompt, const std::optional<LayoutFeedback>& feedback);

/// First balanced {...} block of `text`, or nullopt.
std::optional<std::string> extract_json_object(const std::string& text);

struct HttpLayoutOptions {
  std::string endpoint;  // e.g. http://localhost:8080/v1/chat/completions
  std::string api_key;
  std::string model = "gpt-4";
  int timeout_seconds = 60;

  /// endpoint and key from CRAFT_LLM_ENDPOINT / CRAFT_LLM_KEY.
  static HttpLayoutOptions from_env();
};

/// Chat-completion client. Network, HTTP status, and response format
/// failures raise BackendError with stage "llm".
class HttpLayoutGenerator : public LayoutGenerator {
 public:
  explicit HttpLayoutGenerator(HttpLayoutOptions options);
  GroundedLayout generate(const std::string& prompt, const std::optional<LayoutFeedback>& feedback) override;

 private:
  HttpLayoutOptions options_;
};

/// Reads a fixed layout JSON file on every call.
class FileLayoutGenerator : public LayoutGenerator {
 public:
  explicit FileLayoutGenerator(std::string path) : path_(std::move(path)) {}
  GroundedLayout generate(const std::string& prompt, const std::optional<LayoutFeedback>& feedback) override;

 private:
  std::string path_;
};

}  // namespace vecsynth
