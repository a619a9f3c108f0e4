#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "vecsynth/error.hpp"
#include "vecsynth/guidance.hpp"
#include "vecsynth/image_io.hpp"
#include "vecsynth/layout.hpp"
#include "vecsynth/layout_generator.hpp"
#include "vecsynth/pipeline.hpp"

namespace vecsynth::cli {

namespace fs = std::filesystem;

namespace {

// A bad flag value, missing file or malformed config; exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw UsageError("cannot create output directory '" + dir.string() + "'");
}

struct Settings {
  PipelineConfig pipeline;
  std::string out_dir = ".";
  std::string backend = "mock";
  std::string guidance_dir;
};

// Keys mirror PipelineConfig; unknown keys are an error so typos surface.
void apply_config_file(const std::string& path, Settings& s) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config '" + path + "': " + e.what());
  }
  if (!j.is_object()) throw UsageError("config '" + path + "' must hold a JSON object");
  PipelineConfig& c = s.pipeline;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "style") c.style = style_from_string(v.get<std::string>());
      else if (key == "primitive") c.primitive = shape_from_string(v.get<std::string>());
      else if (key == "strokes") c.strokes = v.get<std::size_t>();
      else if (key == "stroke_width") c.stroke_width = v.get<double>();
      else if (key == "initial_opacity") c.initial_opacity = v.get<double>();
      else if (key == "jitter_radius") c.jitter_radius = v.get<double>();
      else if (key == "iters") c.iters = v.get<int>();
      else if (key == "lr_points") c.lr_points = v.get<double>();
      else if (key == "lr_width") c.lr_width = v.get<double>();
      else if (key == "lr_color") c.lr_color = v.get<double>();
      else if (key == "lr_opacity") c.lr_opacity = v.get<double>();
      else if (key == "mlp_lr") c.mlp_lr = v.get<double>();
      else if (key == "mlp_bg_lr") c.mlp_bg_lr = v.get<double>();
      else if (key == "mlp_fg_iters") c.mlp_fg_iters = v.get<int>();
      else if (key == "mlp_bg_iters") c.mlp_bg_iters = v.get<int>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "softness") c.softness = v.get<double>();
      else if (key == "width") c.width = v.get<int>();
      else if (key == "height") c.height = v.get<int>();
      else if (key == "box_scale") c.box_scale = v.get<double>();
      else if (key == "max_iters") c.correction.max_iters = v.get<int>();
      else if (key == "out") s.out_dir = v.get<std::string>();
      else if (key == "backend") s.backend = v.get<std::string>();
      else if (key == "guidance") s.guidance_dir = v.get<std::string>();
      else throw UsageError("config '" + path + "': unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("config '" + path + "': " + e.what());
  }
}

void check_backend(const std::string& name) {
  if (name != "mock" && name != "http" && name != "files") throw UsageError("unknown backend '" + name + "' (mock|http|files)");
}

std::unique_ptr<LayoutGenerator> make_generator(const std::string& backend, const std::string& guidance_dir) {
  check_backend(backend);
  if (backend == "http") return std::make_unique<HttpLayoutGenerator>(HttpLayoutOptions::from_env());
  if (backend == "files") {
    if (guidance_dir.empty()) throw UsageError("--backend files needs --guidance DIR");
    const fs::path layout = fs::path(guidance_dir) / "layout.json";
    if (!fs::exists(layout)) throw UsageError("missing '" + layout.string() + "'");
    return std::make_unique<FileLayoutGenerator>(layout.string());
  }
  return std::make_unique<MockLayoutGenerator>();
}

std::unique_ptr<GuidanceSource> make_guidance(const std::string& guidance_dir) {
  if (guidance_dir.empty()) return std::make_unique<SyntheticGuidance>();
  if (!fs::is_directory(guidance_dir)) throw UsageError("guidance directory '" + guidance_dir + "' does not exist");
  return std::make_unique<FileGuidance>(guidance_dir);
}

int cmd_generate(const std::string& prompt, const Settings& s) {
  s.pipeline.validate();
  auto gen = make_generator(s.backend, s.guidance_dir);
  auto guide = make_guidance(s.guidance_dir);
  const fs::path dir(s.out_dir);
  ensure_dir(dir);
  const PipelineResult r = run_pipeline(prompt, *gen, *guide, s.pipeline);
  write_file(dir / "out.svg", r.svg);
  write_png((dir / "out.png").string(), r.image);
  write_file(dir / "metrics.json", metrics_to_json(r.metrics));
  write_file(dir / "layout.json", layout_to_json(r.layout));
  return exit_ok;
}

int cmd_correct_layout(const std::string& prompt, const std::string& backend, const std::string& guidance_dir,
                       const std::string& out_dir, int max_iters) {
  if (max_iters < 1) throw UsageError("--max-iters must be at least 1");
  auto gen = make_generator(backend, guidance_dir);
  const fs::path dir(out_dir);
  ensure_dir(dir);
  CorrectionOptions opt;
  opt.max_iters = max_iters;
  const CorrectionResult r = correct_layout(*gen, prompt, opt);
  std::string csv = "iteration,delta_rec\n";
  for (std::size_t i = 0; i < r.trace.size(); ++i) csv += std::to_string(i + 1) + "," + format_number(r.trace[i], 12) + "\n";
  write_file(dir / "layout.json", layout_to_json(r.layout));
  write_file(dir / "delta_trace.csv", csv);
  return exit_ok;
}

int cmd_render(const std::string& svg_path, const std::string& png_path, int size) {
  if (!fs::is_regular_file(svg_path)) throw UsageError("missing SVG file '" + svg_path + "'");
  write_png(png_path, render_svg(read_file(svg_path), size));
  return exit_ok;
}

}  // namespace

RasterImage render_svg(std::string_view svg, int size) {
  Canvas c = from_svg(svg);
  if (size <= 0) throw DomainError("render size must be positive");
  if (size != c.width || size != c.height) {
    const double sx = static_cast<double>(size) / c.width, sy = static_cast<double>(size) / c.height;
    for (Stroke& s : c.strokes) {
      for (std::size_t k = 0; k < s.path.size(); ++k) s.path.set(k, {s.path[k].x * sx, s.path[k].y * sy});
      s.width *= std::sqrt(sx * sy);
    }
    c.width = c.height = size;
  }
  return render(c);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Layout-guided text-to-SVG synthesis", "vecsynth"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  std::string prompt, config_path, style, primitive, out_dir, backend, guidance_dir;
  std::size_t strokes = 0;
  int width = 0, height = 0, iters = 0, max_iters = 10;
  std::uint64_t seed = 0;

  auto* gen = app.add_subcommand("generate", "Synthesize an SVG from a prompt");
  gen->add_option("--prompt", prompt, "Text prompt")->required();
  auto* o_style = gen->add_option("--style", style, "sketch|clipart|abstract|primitive");
  auto* o_prim = gen->add_option("--primitive", primitive, "Shape for the primitive style");
  auto* o_strokes = gen->add_option("--strokes", strokes, "Number of strokes");
  auto* o_width = gen->add_option("--width", width, "Canvas width (and height unless --height)");
  auto* o_height = gen->add_option("--height", height, "Canvas height");
  auto* o_iters = gen->add_option("--iters", iters, "Canvas optimization steps");
  auto* o_seed = gen->add_option("--seed", seed, "Random seed");
  auto* o_out = gen->add_option("--out", out_dir, "Output directory");
  auto* o_backend = gen->add_option("--backend", backend, "Layout backend: mock|http|files");
  auto* o_guide = gen->add_option("--guidance", guidance_dir, "Directory with target.png and attn_<i>.pgm");
  auto* o_maxit = gen->add_option("--max-iters", max_iters, "Layout correction iterations");
  gen->add_option("--config", config_path, "JSON config; flags override it");

  std::string cl_prompt, cl_backend = "mock", cl_guidance, cl_out = ".";
  int cl_max_iters = 10;
  auto* cl = app.add_subcommand("correct-layout", "Run layout correction only");
  cl->add_option("--prompt", cl_prompt, "Text prompt")->required();
  cl->add_option("--max-iters", cl_max_iters, "Iteration cap");
  cl->add_option("--backend", cl_backend, "Layout backend: mock|http|files");
  cl->add_option("--guidance", cl_guidance, "Directory holding layout.json for the files backend");
  cl->add_option("--out", cl_out, "Output directory");

  std::string svg_path, png_path;
  int size = 512;
  auto* rd = app.add_subcommand("render", "Rasterize an SVG produced by vecsynth");
  rd->add_option("--svg", svg_path, "Input SVG")->required();
  rd->add_option("--out", png_path, "Output PNG")->required();
  rd->add_option("--size", size, "Output side length in pixels");

  // CLI11's vector overload consumes arguments from the back.
  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "vecsynth: " << e.what() << "\n";
    return exit_usage;
  }

  try {
    if (*gen) {
      Settings s;
      if (!config_path.empty()) apply_config_file(config_path, s);
      PipelineConfig& c = s.pipeline;
      if (*o_style) c.style = style_from_string(style);
      if (*o_prim) c.primitive = shape_from_string(primitive);
      if (*o_strokes) c.strokes = strokes;
      if (*o_width) c.width = c.height = width;
      if (*o_height) c.height = height;
      if (*o_iters) c.iters = iters;
      if (*o_seed) c.seed = seed;
      if (*o_maxit) c.correction.max_iters = max_iters;
      if (*o_out) s.out_dir = out_dir;
      if (*o_backend) s.backend = backend;
      if (*o_guide) s.guidance_dir = guidance_dir;
      check_backend(s.backend);
      return cmd_generate(prompt, s);
    }
    if (*cl) {
      check_backend(cl_backend);
      return cmd_correct_layout(cl_prompt, cl_backend, cl_guidance, cl_out, cl_max_iters);
    }
    return cmd_render(svg_path, png_path, size);
  } catch (const UsageError& e) {
    err << "vecsynth: " << e.what() << "\n";
    return exit_usage;
  } catch (const DomainError& e) {
    err << "vecsynth: " << e.what() << "\n";
    return exit_usage;
  } catch (const ParseError& e) {
    err << "vecsynth: " << e.what() << "\n";
    return exit_usage;
  } catch (const BackendError& e) {
    err << "vecsynth: backend failure in " << e.what() << "\n";
    return exit_backend;
  } catch (const std::exception& e) {
    err << "vecsynth: " << e.what() << "\n";
    return exit_failure;
  }
}

}  // namespace vecsynth::cli
