#include <cmath>
#include <random>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "doctest.h"
#include "vecsynth/error.hpp"
#include "vecsynth/layout.hpp"
#include "vecsynth/layout_generator.hpp"

using namespace vecsynth;

namespace {

// Full-matrix Levenshtein, independent of the rolling-row version.
std::size_t levenshtein_oracle(const std::string& a, const std::string& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] != b[j - 1])});
  return d[a.size()][b.size()];
}

GroundedLayout one_object(const std::string& label, BBox box, const std::string& bg = "") {
  GroundedLayout l;
  l.objects.push_back({label, box});
  l.background_prompt = bg;
  return l;
}

// Replays a fixed layout sequence and records the feedback it received.
struct ScriptedGenerator : LayoutGenerator {
  std::vector<GroundedLayout> layouts;
  std::vector<std::optional<LayoutFeedback>> seen;
  GroundedLayout generate(const std::string&, const std::optional<LayoutFeedback>& fb) override {
    seen.push_back(fb);
    return layouts.at(std::min(seen.size() - 1, layouts.size() - 1));
  }
};

struct FailingGenerator : LayoutGenerator {
  int calls = 0;
  GroundedLayout generate(const std::string&, const std::optional<LayoutFeedback>&) override {
    if (++calls == 2) throw std::runtime_error("service unavailable");
    return one_object("cat", {10, 10, 50, 50});
  }
};

}  // namespace

TEST_SUITE("layout") {
  TEST_CASE("tokenize") {
    const auto t = tokenize("A Cat, and-a DOG!! 42x");
    CHECK(t == std::vector<std::string>{"a", "cat", "and", "a", "dog", "42x"});
  }

  TEST_CASE("cosine similarity") {
    CHECK(cosine_sim("the cat sat", "the cat sat") == doctest::Approx(1.0));
    CHECK(cosine_sim("cat", "dog") == 0.0);
    CHECK(cosine_sim("", "") == 1.0);
    CHECK(cosine_sim("", "dog") == 0.0);
    // TF: {a:2, cat:1, and:1, dog:1} . {a:1, cat:1} = 3; norms sqrt(7), sqrt(2).
    CHECK(cosine_sim("a cat and a dog", "a cat") == doctest::Approx(3.0 / std::sqrt(14.0)).epsilon(1e-14));
    CHECK(cosine_sim("a b c", "c d") == doctest::Approx(cosine_sim("c d", "a b c")));
  }

  TEST_CASE("jaccard similarity") {
    CHECK(jaccard_sim("a cat", "a cat") == 1.0);
    CHECK(jaccard_sim("cat", "dog") == 0.0);
    CHECK(jaccard_sim("a cat", "a dog") == doctest::Approx(1.0 / 3.0));
    CHECK(jaccard_sim("", "") == 1.0);
  }

  TEST_CASE("edit similarity") {
    CHECK(edit_sim("same", "same") == 0.0);
    CHECK(edit_sim("kitten", "sitting") == doctest::Approx(3.0 / 7.0));
    CHECK(edit_sim("", "abc") == 1.0);
    CHECK(edit_sim("", "") == 0.0);
    std::mt19937_64 rng(8);
    for (int i = 0; i < 200; ++i) {
      std::string a, b;
      for (int k = 0, n = static_cast<int>(rng() % 9); k < n; ++k) a += static_cast<char>('a' + rng() % 3);
      for (int k = 0, n = static_cast<int>(rng() % 9); k < n; ++k) b += static_cast<char>('a' + rng() % 3);
      CHECK(levenshtein(a, b) == levenshtein_oracle(a, b));
      CHECK(edit_sim(a, b) == edit_sim(b, a));
    }
  }

  TEST_CASE("reconstruction error") {
    CHECK(reconstruction_error("two cats", "two cats") == doctest::Approx(-1.0));
    CHECK(reconstruction_error("cat", "dog") == doctest::Approx(1.01));
    CHECK(reconstruction_error("abc", "xyz q", SimilarityWeights{0, 0, 0}) == 1.0);
    // Equal texts attain the minimum over a corpus.
    const std::vector<std::string> corpus{"a cat", "a cat and a dog", "dogs", "", "cat a"};
    for (const auto& a : corpus)
      for (const auto& b : corpus) CHECK(reconstruction_error(a, a) <= reconstruction_error(a, b) + 1e-15);
  }

  TEST_CASE("caption template") {
    CHECK(caption_from_layout(one_object("cat", {206, 206, 100, 100}, "a room")) == "a cat with a room");
    CHECK(caption_from_layout(one_object("apple", {0, 0, 10, 10})) == "an apple");

    GroundedLayout herd;
    for (int i = 0; i < 2; ++i) herd.objects.push_back({"giraffe", {10.0 + 30 * i, 100, 20, 20}});
    for (int i = 0; i < 3; ++i) herd.objects.push_back({"elephant", {300.0 + 40 * i, 100, 20, 20}});
    const std::string c = caption_from_layout(herd);
    CHECK(c.find("two giraffes") != std::string::npos);
    CHECK(c.find("three elephants") != std::string::npos);

    GroundedLayout pair;
    pair.objects = {{"dog", {350, 200, 100, 100}}, {"cat", {50, 200, 100, 100}}};
    CHECK(caption_from_layout(pair).find("a cat to the left of a dog") != std::string::npos);

    GroundedLayout stack;
    stack.objects = {{"bird", {200, 20, 50, 50}}, {"tree", {205, 300, 50, 150}}};
    CHECK(caption_from_layout(stack) == "a bird above a tree");
  }

  TEST_CASE("validate_layout") {
    CHECK(validate_layout(one_object("cat", {10, 10, 100, 100}), 512, 512).empty());
    CHECK(validate_layout(one_object("cat", {10, 10, 0, 100}), 512, 512).size() == 1);
    CHECK(validate_layout(one_object("cat", {600, 10, 50, 50}), 512, 512).size() == 1);
    CHECK(validate_layout(one_object("cat", {-60, -60, 50, 50}), 512, 512).size() == 1);
    CHECK(validate_layout(one_object("", {10, 10, 50, 50}), 512, 512).size() == 1);
    CHECK(validate_layout(GroundedLayout{}, 512, 512).size() == 1);
    // Partly outside still intersects the canvas.
    CHECK(validate_layout(one_object("cat", {480, 480, 100, 100}), 512, 512).empty());
  }

  TEST_CASE("scale_boxes") {
    const auto base = one_object("cat", {206, 206, 100, 100});
    CHECK(scale_boxes(base, 1.0, 512, 512) == base);
    const auto big = scale_boxes(base, 2.0, 512, 512);
    CHECK(big.objects[0].box == BBox{156, 156, 200, 200});
    const auto edge = scale_boxes(one_object("cat", {450, 0, 60, 60}), 2.0, 512, 512);
    const BBox& b = edge.objects[0].box;
    CHECK(b.x >= 0);
    CHECK(b.y == 0);
    CHECK(b.x + b.w <= 512);
    CHECK(b.w == doctest::Approx(512 - 420));
    CHECK(b.h == doctest::Approx(90));
    CHECK(validate_layout(edge, 512, 512).empty());
    CHECK_THROWS_AS(scale_boxes(base, 0.0, 512, 512), DomainError);

    std::mt19937_64 rng(12);
    for (int i = 0; i < 100; ++i) {
      std::uniform_real_distribution<double> u(-50, 500), s(1, 200), f(0.1, 4);
      const auto l = scale_boxes(one_object("x", {u(rng), u(rng), s(rng), s(rng)}), f(rng), 512, 512);
      if (validate_layout(one_object("x", l.objects[0].box), 512, 512).empty()) CHECK(l.objects[0].box.area() <= 512.0 * 512.0);
    }
  }

  TEST_CASE("correct_layout stops on a stationary sequence") {
    ScriptedGenerator gen;
    GroundedLayout perfect = one_object("cat", {10, 10, 50, 50});
    gen.layouts = {perfect};
    const auto res = correct_layout(gen, caption_from_layout(perfect));
    CHECK(res.trace.size() == 2);
    CHECK(res.converged);
    CHECK(res.trace[0] == doctest::Approx(-1.0));
    CHECK(std::abs(res.trace[1] - res.trace[0]) < 1e-4);
  }

  TEST_CASE("correct_layout follows the stopping rule and keeps the minimum") {
    ScriptedGenerator gen;
    for (int i = 0; i < 5; ++i) gen.layouts.push_back(one_object("obj" + std::to_string(i), {10, 10, 50, 50}));
    const std::vector<double> script{0.8, 0.3, 0.3000005, 0.1, 0.0};
    int calls = 0;
    const auto res = correct_layout(gen, "p", CorrectionOptions{}, [&](const GroundedLayout&) { return script[calls++]; });
    CHECK(res.trace.size() == 3);
    CHECK(res.converged);
    CHECK(res.best_index == 1);
    CHECK(res.layout.objects[0].label == "obj1");
    REQUIRE(gen.seen.size() == 3);
    CHECK_FALSE(gen.seen[0].has_value());
    CHECK(gen.seen[1]->delta_rec == 0.8);
    CHECK(gen.seen[2]->previous.objects[0].label == "obj1");
  }

  TEST_CASE("correct_layout with one iteration returns the first layout") {
    ScriptedGenerator gen;
    gen.layouts = {one_object("a", {1, 1, 5, 5}), one_object("b", {1, 1, 5, 5})};
    CorrectionOptions opt;
    opt.max_iters = 1;
    const auto res = correct_layout(gen, "b", opt);
    CHECK(res.trace.size() == 1);
    CHECK(res.layout.objects[0].label == "a");
    CHECK_FALSE(res.converged);
  }

  TEST_CASE("correct_layout propagates failures with the iteration") {
    FailingGenerator gen;
    try {
      correct_layout(gen, "a cat");
      FAIL("expected BackendError");
    } catch (const BackendError& e) {
      CHECK(e.iteration() == 2);
      CHECK(e.stage() == "layout");
    }
    ScriptedGenerator bad;
    bad.layouts = {one_object("cat", {10, 10, -5, 5})};
    CHECK_THROWS_AS(correct_layout(bad, "a cat"), BackendError);
  }

  TEST_CASE("mock generator parses counts and background") {
    MockLayoutGenerator gen;
    const auto l = gen.parse("Two giraffes and three elephants on a savanna");
    REQUIRE(l.objects.size() == 5);
    CHECK(l.objects[0].label == "giraffe");
    CHECK(l.objects[4].label == "elephant");
    CHECK(l.background_prompt == "a savanna");
    CHECK(validate_layout(l, 512, 512).empty());
    CHECK(gen.parse("a red apple").objects[0].label == "red apple");
  }

  TEST_CASE("mock generator converges under correction") {
    MockLayoutGenerator gen;
    const std::string prompt = "two giraffes and three elephants on a savanna";
    const auto res = correct_layout(gen, prompt);
    CHECK(res.converged);
    CHECK(res.trace.size() <= 10);
    CHECK(res.trace[res.best_index] == *std::min_element(res.trace.begin(), res.trace.end()));
    CHECK(res.layout.objects.size() == 5);
    CHECK(res.layout.background_prompt == "a savanna");
    // Deterministic across fresh runs.
    MockLayoutGenerator again;
    CHECK(correct_layout(again, prompt).trace == res.trace);
  }

  TEST_CASE("mock table replays layouts") {
    std::map<std::string, std::vector<GroundedLayout>> table;
    table["p"] = {one_object("a", {1, 1, 5, 5}), one_object("b", {1, 1, 5, 5})};
    MockLayoutGenerator gen(table);
    CHECK(gen.generate("p", std::nullopt).objects[0].label == "a");
    CHECK(gen.generate("p", LayoutFeedback{}).objects[0].label == "b");
    CHECK(gen.generate("p", LayoutFeedback{}).objects[0].label == "b");
    CHECK(gen.generate("p", std::nullopt).objects[0].label == "a");
    CHECK_THROWS_AS(gen.generate("", std::nullopt), BackendError);
  }

  TEST_CASE("layout JSON round trip") {
    GroundedLayout l = one_object("cat", {1.5, 2, 30, 40}, "grass");
    l.caption = "a cat on grass";
    l.negative_prompt = "blur";
    CHECK(layout_from_json(layout_to_json(l)) == l);
    CHECK_THROWS_AS(layout_from_json("{\"objects\": [{\"label\": \"x\", \"box\": [1, 2]}]}"), ParseError);
    CHECK_THROWS_AS(layout_from_json("{not json"), ParseError);
  }

  TEST_CASE("prompt has the five sections and the feedback score") {
    const auto p0 = build_layout_prompt("a cat", std::nullopt);
    CHECK(p0.system.find("Task specification") != std::string::npos);
    CHECK(p0.user.find("Instruction details") != std::string::npos);
    CHECK(p0.user.find("In-context examples") != std::string::npos);
    CHECK(p0.user.find("Layout request") != std::string::npos);
    CHECK(p0.user.find("Correction feedback") == std::string::npos);
    const auto p1 = build_layout_prompt("a cat", LayoutFeedback{one_object("cat", {1, 1, 9, 9}), 0.125});
    CHECK(p1.user.find("Correction feedback") != std::string::npos);
    CHECK(p1.user.find("0.125") != std::string::npos);
  }

  TEST_CASE("extract_json_object") {
    CHECK(extract_json_object("Sure! {\"a\": \"}\", \"b\": {\"c\": 1}} trailing") == "{\"a\": \"}\", \"b\": {\"c\": 1}}");
    CHECK_FALSE(extract_json_object("no json here").has_value());
    CHECK_FALSE(extract_json_object("{ unbalanced").has_value());
  }

  TEST_CASE("http generator against a local chat-completion server") {
    httplib::Server server;
    std::string seen_auth, seen_body;
    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
      seen_auth = req.get_header_value("Authorization");
      seen_body = req.body;
      const std::string layout =
          "{\"caption\": \"a cat\", \"objects\": [{\"label\": \"cat\", \"box\": [100, 100, 200, 200]}], "
          "\"background_prompt\": \"a room\", \"negative_prompt\": \"\"}";
      nlohmann::json reply{{"choices", {{{"message", {{"role", "assistant"}, {"content", "Here it is:\n" + layout}}}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    server.Post("/broken", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread worker([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpLayoutOptions opt;
    opt.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
    opt.api_key = "secret";
    opt.timeout_seconds = 5;
    HttpLayoutGenerator gen(opt);
    const auto l = gen.generate("a cat in a room", LayoutFeedback{one_object("dog", {1, 1, 9, 9}), 0.5});
    CHECK(l.objects.size() == 1);
    CHECK(l.objects[0].box == BBox{100, 100, 200, 200});
    CHECK(seen_auth == "Bearer secret");
    const auto body = nlohmann::json::parse(seen_body);
    CHECK(body["messages"].size() == 2);
    CHECK(body["messages"][1]["content"].get<std::string>().find("Correction feedback") != std::string::npos);

    opt.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/broken";
    HttpLayoutGenerator broken(opt);
    CHECK_THROWS_AS(broken.generate("a cat", std::nullopt), BackendError);

    server.stop();
    worker.join();
    CHECK_THROWS_AS(HttpLayoutGenerator(HttpLayoutOptions{}), BackendError);
  }
}
