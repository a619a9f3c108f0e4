#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "vecsynth/error.hpp"
#include "vecsynth/scene.hpp"

namespace vecsynth {

namespace {

std::string fmt_point(Point p) { return format_number(p.x) + " " + format_number(p.y); }

std::string fmt_percent(double v) { return format_number(v * 100.0, 4) + "%"; }

std::string fmt_color(const Color& c) {
  return "rgb(" + fmt_percent(c.r) + "," + fmt_percent(c.g) + "," + fmt_percent(c.b) + ")";
}

// Cubic spans of one piece. Degrees 1-3 convert exactly; higher degrees
// are approximated by Hermite-matched cubics over equal parameter spans.
void append_piece_cubics(const std::vector<Point>& piece, std::vector<std::array<Point, 3>>& out) {
  switch (piece.size()) {
    case 2:
      out.push_back({(1.0 / 3.0) * (2.0 * piece[0] + piece[1]), (1.0 / 3.0) * (piece[0] + 2.0 * piece[1]), piece[1]});
      return;
    case 3:
      out.push_back({piece[0] + (2.0 / 3.0) * (piece[1] - piece[0]), piece[2] + (2.0 / 3.0) * (piece[1] - piece[2]),
                     piece[2]});
      return;
    case 4:
      out.push_back({piece[1], piece[2], piece[3]});
      return;
    default: break;
  }
  const std::size_t n = piece.size() - 1;
  std::vector<Point> hodograph(n);
  for (std::size_t i = 0; i < n; ++i) hodograph[i] = static_cast<double>(n) * (piece[i + 1] - piece[i]);
  constexpr int spans = 4;
  for (int s = 0; s < spans; ++s) {
    const double t0 = static_cast<double>(s) / spans, t1 = static_cast<double>(s + 1) / spans;
    const Point p0 = eval_bezier(piece, t0), p3 = eval_bezier(piece, t1);
    const Point d0 = eval_bezier(hodograph, t0), d1 = eval_bezier(hodograph, t1);
    const double h = (t1 - t0) / 3.0;
    out.push_back({p0 + h * d0, p3 - h * d1, p3});
  }
}

// The value a reader recovers from format_number(v).
double as_written(double v) {
  const std::string text = format_number(v);
  double out = v;
  std::from_chars(text.data(), text.data() + text.size(), out);
  return out;
}

std::string path_data(const Stroke& stroke) {
  const auto pieces = expand_pieces(stroke);
  std::vector<std::array<Point, 3>> cubics;
  for (const auto& piece : pieces) append_piece_cubics(piece, cubics);
  std::string d = "M " + fmt_point(pieces.front().front());
  for (const auto& c : cubics) d += " C " + fmt_point(c[0]) + " " + fmt_point(c[1]) + " " + fmt_point(c[2]);
  return d;
}

}  // namespace

std::string to_svg(const Canvas& canvas) {
  const std::string w = std::to_string(canvas.width), h = std::to_string(canvas.height);
  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + w + "\" height=\"" + h +
         "\" viewBox=\"0 0 " + w + " " + h + "\" style=\"background-color:" + fmt_color(canvas.background) + "\">\n";
  for (const auto& s : canvas.strokes) {
    // Derive d from the points as they will read back, so serializing a
    // parsed document reproduces it byte for byte.
    Stroke rounded = s;
    for (std::size_t k = 0; k < rounded.path.size(); ++k) {
      const Point p = rounded.path[k];
      rounded.path.set(k, {as_written(p.x), as_written(p.y)});
    }
    out += "  <path d=\"" + path_data(rounded) + "\" fill=\"none\" stroke=\"" + fmt_color(s.color) + "\" stroke-width=\"" +
           format_number(s.width) + "\" stroke-opacity=\"" + format_number(s.opacity) +
           "\" stroke-linecap=\"round\" stroke-linejoin=\"round\"";
    if (s.color.a != 1.0) out += " opacity=\"" + format_number(s.color.a) + "\"";
    if (s.shape != ShapeKind::bezier) out += " data-shape=\"" + std::string(to_string(s.shape)) + "\"";
    if (s.transform_class == TransformClass::affine_only) out += " data-transform=\"affine\"";
    if (s.shape == ShapeKind::bezier && s.path.size() != 4) {
      std::string pts;
      for (const auto& p : s.path.control_points()) pts += (pts.empty() ? "" : " ") + fmt_point(p);
      out += " data-control-points=\"" + pts + "\"";
    }
    out += "/>\n";
  }
  out += "</svg>\n";
  return out;
}

namespace {

struct Attribute {
  std::string name;
  std::string_view value;
  std::size_t offset = 0;  // byte offset of the value in the document
};

struct SubPath {
  Point start;
  std::vector<std::array<Point, 3>> cubics;
};

class Reader {
 public:
  explicit Reader(std::string_view doc) : doc_(doc) {}

  Canvas parse() {
    skip_prolog();
    const std::size_t at = pos_;
    if (!consume("<svg")) throw ParseError("expected <svg> root element", at);
    Canvas canvas;
    canvas.strokes.clear();
    bool self_closed = false;
    const auto attrs = read_attributes(self_closed);
    read_root(attrs, canvas);
    if (self_closed) return finish(canvas);

    for (;;) {
      skip_space_and_comments();
      if (pos_ >= doc_.size()) throw ParseError("unterminated <svg> element", pos_);
      if (doc_[pos_] != '<') throw ParseError("unexpected text content", pos_);
      if (consume("</svg")) {
        skip_space();
        if (!consume(">")) throw ParseError("malformed </svg>", pos_);
        return finish(canvas);
      }
      const std::size_t tag_at = pos_;
      ++pos_;
      const std::string name = read_name();
      if (name != "path") throw ParseError("unsupported SVG element <" + name + ">", tag_at);
      bool closed = false;
      const auto path_attrs = read_attributes(closed);
      if (!closed) {
        skip_space();
        if (!consume("</path")) throw ParseError("<path> must not have content", pos_);
        skip_space();
        if (!consume(">")) throw ParseError("malformed </path>", pos_);
      }
      read_path(path_attrs, canvas);
    }
  }

 private:
  Canvas finish(Canvas& canvas) {
    skip_space_and_comments();
    if (pos_ != doc_.size()) throw ParseError("trailing content after </svg>", pos_);
    return std::move(canvas);
  }

  bool consume(std::string_view s) {
    if (doc_.substr(pos_, s.size()) == s) {
      pos_ += s.size();
      return true;
    }
    return false;
  }

  void skip_space() {
    while (pos_ < doc_.size() && (doc_[pos_] == ' ' || doc_[pos_] == '\n' || doc_[pos_] == '\r' || doc_[pos_] == '\t'))
      ++pos_;
  }

  void skip_until(std::string_view terminator) {
    const std::size_t at = pos_;
    const std::size_t end = doc_.find(terminator, pos_);
    if (end == std::string_view::npos) throw ParseError("unterminated markup", at);
    pos_ = end + terminator.size();
  }

  void skip_space_and_comments() {
    for (;;) {
      skip_space();
      if (consume("<!--")) skip_until("-->");
      else return;
    }
  }

  void skip_prolog() {
    if (consume("\xEF\xBB\xBF")) {
    }
    for (;;) {
      skip_space_and_comments();
      if (consume("<?")) skip_until("?>");
      else if (consume("<!DOCTYPE")) skip_until(">");
      else return;
    }
  }

  std::string read_name() {
    const std::size_t start = pos_;
    while (pos_ < doc_.size()) {
      const char c = doc_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == ':' || c == '-' || c == '.') ++pos_;
      else break;
    }
    if (pos_ == start) throw ParseError("expected a name", start);
    return std::string(doc_.substr(start, pos_ - start));
  }

  std::vector<Attribute> read_attributes(bool& self_closed) {
    std::vector<Attribute> attrs;
    for (;;) {
      skip_space();
      if (consume("/>")) {
        self_closed = true;
        return attrs;
      }
      if (consume(">")) {
        self_closed = false;
        return attrs;
      }
      if (pos_ >= doc_.size()) throw ParseError("unterminated start tag", pos_);
      Attribute a;
      a.name = read_name();
      skip_space();
      if (!consume("=")) throw ParseError("expected '=' after attribute " + a.name, pos_);
      skip_space();
      if (pos_ >= doc_.size() || (doc_[pos_] != '"' && doc_[pos_] != '\'')) {
        throw ParseError("expected quoted value for attribute " + a.name, pos_);
      }
      const char quote = doc_[pos_++];
      const std::size_t end = doc_.find(quote, pos_);
      if (end == std::string_view::npos) throw ParseError("unterminated attribute value", pos_);
      a.value = doc_.substr(pos_, end - pos_);
      a.offset = pos_;
      pos_ = end + 1;
      attrs.push_back(std::move(a));
    }
  }

  static const Attribute* find(const std::vector<Attribute>& attrs, std::string_view name) {
    for (const auto& a : attrs) {
      if (a.name == name) return &a;
    }
    return nullptr;
  }

  // Parses a whitespace/comma separated number list.
  static std::vector<double> numbers(const Attribute& a) {
    std::vector<double> out;
    std::size_t i = 0;
    const auto v = a.value;
    while (i < v.size()) {
      if (v[i] == ' ' || v[i] == ',' || v[i] == '\t' || v[i] == '\n' || v[i] == '\r') {
        ++i;
        continue;
      }
      double x = 0.0;
      const std::size_t start = i;
      i = parse_number(a, i, x);
      if (i == start) throw ParseError("invalid number in attribute " + a.name, a.offset + start);
      out.push_back(x);
    }
    return out;
  }

  static std::size_t parse_number(const Attribute& a, std::size_t i, double& out) {
    const auto v = a.value;
    const char* first = v.data() + i;
    const char* last = v.data() + v.size();
    if (first < last && *first == '+') ++first;
    const auto res = std::from_chars(first, last, out);
    if (res.ec != std::errc() || !std::isfinite(out)) return i;
    return static_cast<std::size_t>(res.ptr - v.data());
  }

  static double number(const Attribute& a) {
    std::string_view v = a.value;
    if (v.ends_with("px")) v.remove_suffix(2);
    Attribute trimmed = a;
    trimmed.value = v;
    const auto nums = numbers(trimmed);
    if (nums.size() != 1) throw ParseError("attribute " + a.name + " must hold one number", a.offset);
    return nums.front();
  }

  static int dimension(double v, const Attribute& a) {
    const double r = std::round(v);
    if (!(r >= 1.0) || std::abs(v - r) > 1e-9 || r > 1e6) {
      throw ParseError("canvas dimensions must be positive integers", a.offset);
    }
    return static_cast<int>(r);
  }

  static double unit_channel(std::string_view s, const Attribute& a, std::size_t at) {
    bool percent = false;
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    if (s.ends_with("%")) {
      percent = true;
      s.remove_suffix(1);
    }
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw ParseError("invalid color channel in attribute " + a.name, a.offset + at);
    }
    return std::clamp(percent ? v / 100.0 : v / 255.0, 0.0, 1.0);
  }

  static Color color(const Attribute& a, std::string_view v, std::size_t base) {
    if (v == "black") return Color::black();
    if (v == "white") return Color::white();
    if (v.starts_with("#")) {
      auto hex = [&](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw ParseError("invalid hex color in attribute " + a.name, a.offset + base);
      };
      if (v.size() == 7) {
        return {(hex(v[1]) * 16 + hex(v[2])) / 255.0, (hex(v[3]) * 16 + hex(v[4])) / 255.0,
                (hex(v[5]) * 16 + hex(v[6])) / 255.0, 1.0};
      }
      if (v.size() == 4) return {hex(v[1]) * 17 / 255.0, hex(v[2]) * 17 / 255.0, hex(v[3]) * 17 / 255.0, 1.0};
      throw ParseError("invalid hex color in attribute " + a.name, a.offset + base);
    }
    if (v.starts_with("rgb(") && v.ends_with(")")) {
      std::string_view inner = v.substr(4, v.size() - 5);
      std::array<double, 3> ch{};
      std::size_t at = base + 4;
      for (int k = 0; k < 3; ++k) {
        const std::size_t comma = inner.find(',');
        if ((k < 2) != (comma != std::string_view::npos)) {
          throw ParseError("rgb() needs three channels in attribute " + a.name, a.offset + at);
        }
        const std::string_view part = inner.substr(0, comma);
        ch[static_cast<std::size_t>(k)] = unit_channel(part, a, at);
        if (k < 2) {
          inner.remove_prefix(comma + 1);
          at += comma + 1;
        }
      }
      return {ch[0], ch[1], ch[2], 1.0};
    }
    throw ParseError("unsupported color '" + std::string(v) + "' in attribute " + a.name, a.offset + base);
  }

  void read_root(const std::vector<Attribute>& attrs, Canvas& canvas) {
    if (const auto* vb = find(attrs, "viewBox")) {
      const auto nums = numbers(*vb);
      if (nums.size() != 4) throw ParseError("viewBox needs four numbers", vb->offset);
      if (nums[0] != 0.0 || nums[1] != 0.0) throw ParseError("unsupported SVG feature: viewBox origin must be 0 0", vb->offset);
      canvas.width = dimension(nums[2], *vb);
      canvas.height = dimension(nums[3], *vb);
    } else {
      const auto* w = find(attrs, "width");
      const auto* h = find(attrs, "height");
      if (!w || !h) throw ParseError("<svg> needs a viewBox or width/height");
      canvas.width = dimension(number(*w), *w);
      canvas.height = dimension(number(*h), *h);
    }
    if (const auto* st = find(attrs, "style")) {
      constexpr std::string_view key = "background-color:";
      const auto k = st->value.find(key);
      if (k != std::string_view::npos) {
        auto rest = st->value.substr(k + key.size());
        const auto semi = rest.find(';');
        rest = rest.substr(0, semi);
        while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
        while (!rest.empty() && rest.back() == ' ') rest.remove_suffix(1);
        canvas.background = color(*st, rest, k + key.size());
      }
    }
  }

  static std::vector<SubPath> path_commands(const Attribute& d) {
    std::vector<SubPath> out;
    const auto v = d.value;
    std::size_t i = 0;
    char command = 0;
    auto skip_sep = [&] {
      while (i < v.size() && (v[i] == ' ' || v[i] == ',' || v[i] == '\t' || v[i] == '\n' || v[i] == '\r')) ++i;
    };
    auto read_point = [&]() -> Point {
      Point p;
      for (double* c : {&p.x, &p.y}) {
        skip_sep();
        const std::size_t start = i;
        i = parse_number(d, i, *c);
        if (i == start) throw ParseError("malformed path data: expected a coordinate", d.offset + start);
      }
      return p;
    };
    for (;;) {
      skip_sep();
      if (i >= v.size()) break;
      const char c = v[i];
      if (std::isalpha(static_cast<unsigned char>(c))) {
        if (c != 'M' && c != 'C') {
          throw ParseError(std::string("malformed path data: unsupported command '") + c + "'", d.offset + i);
        }
        command = c;
        ++i;
        if (command == 'M') {
          out.push_back({read_point(), {}});
          // Extra coordinate pairs after M are implicit line-tos, outside the subset.
          command = 'm';
        }
        continue;
      }
      if (command == 'C') {
        if (out.empty()) throw ParseError("malformed path data: C before M", d.offset + i);
        std::array<Point, 3> seg{read_point(), read_point(), read_point()};
        out.back().cubics.push_back(seg);
      } else {
        throw ParseError("malformed path data: unexpected coordinates", d.offset + i);
      }
    }
    if (out.empty()) throw ParseError("malformed path data: empty", d.offset);
    for (const auto& sp : out) {
      if (sp.cubics.empty()) throw ParseError("malformed path data: subpath without C segments", d.offset);
    }
    return out;
  }

  void read_path(const std::vector<Attribute>& attrs, Canvas& canvas) {
    for (const auto& a : attrs) {
      if (a.name == "transform" || a.name == "style" || a.name == "class" || a.name == "filter" ||
          a.name == "clip-path" || a.name == "mask" || a.name == "marker-start" || a.name == "marker-end") {
        throw ParseError("unsupported SVG feature: attribute " + a.name + " on <path>", a.offset);
      }
    }
    const auto* d = find(attrs, "d");
    if (!d) throw ParseError("<path> without d attribute");
    if (const auto* fill = find(attrs, "fill"); fill && fill->value != "none") {
      throw ParseError("unsupported SVG feature: filled <path>", fill->offset);
    }

    Stroke proto{BezierPath({Point{}, Point{}})};
    if (const auto* s = find(attrs, "stroke")) proto.color = color(*s, s->value, 0);
    if (const auto* w = find(attrs, "stroke-width")) proto.width = number(*w);
    if (const auto* o = find(attrs, "stroke-opacity")) proto.opacity = std::clamp(number(*o), 0.0, 1.0);
    if (const auto* o = find(attrs, "opacity")) proto.color.a = std::clamp(number(*o), 0.0, 1.0);
    if (const auto* t = find(attrs, "data-transform")) {
      if (t->value == "affine") proto.transform_class = TransformClass::affine_only;
      else if (t->value == "projective") proto.transform_class = TransformClass::projective;
      else throw ParseError("invalid data-transform value", t->offset);
    }
    if (const auto* sh = find(attrs, "data-shape")) {
      try {
        proto.shape = shape_from_string(sh->value);
      } catch (const DomainError&) {
        throw ParseError("unknown data-shape '" + std::string(sh->value) + "'", sh->offset);
      }
    }
    if (!(proto.width > 0.0)) throw ParseError("stroke-width must be positive", find(attrs, "stroke-width")->offset);

    const auto subpaths = path_commands(*d);

    auto push = [&](std::vector<Point> pts) {
      Stroke s = proto;
      s.path = BezierPath(std::move(pts));
      canvas.strokes.push_back(std::move(s));
    };

    if (proto.shape == ShapeKind::bezier) {
      if (const auto* cp = find(attrs, "data-control-points")) {
        const auto nums = numbers(*cp);
        if (nums.size() < 4 || nums.size() % 2 != 0) throw ParseError("data-control-points needs coordinate pairs", cp->offset);
        std::vector<Point> pts;
        for (std::size_t i = 0; i < nums.size(); i += 2) pts.push_back({nums[i], nums[i + 1]});
        push(std::move(pts));
        return;
      }
      // Each cubic span of foreign multi-segment paths becomes its own stroke.
      for (const auto& sp : subpaths) {
        Point start = sp.start;
        for (const auto& c : sp.cubics) {
          push({start, c[0], c[1], c[2]});
          start = c[2];
        }
      }
      return;
    }

    if (subpaths.size() != 1) throw ParseError("primitive <path> must hold one subpath", d->offset);
    const auto& sp = subpaths.front();
    std::size_t expected = 0;
    switch (proto.shape) {
      case ShapeKind::line: expected = 1; break;
      case ShapeKind::circle: expected = 4; break;
      case ShapeKind::semicircle: expected = 2; break;
      case ShapeKind::triangle: expected = 3; break;
      case ShapeKind::square: expected = 4; break;
      case ShapeKind::l_shape: expected = 2; break;
      case ShapeKind::u_shape: expected = 3; break;
      case ShapeKind::bezier: break;
    }
    if (sp.cubics.size() != expected) {
      throw ParseError("primitive " + std::string(to_string(proto.shape)) + " expects " + std::to_string(expected) +
                           " C segments",
                       d->offset);
    }
    std::vector<Point> pts{sp.start};
    switch (proto.shape) {
      case ShapeKind::circle:
      case ShapeKind::semicircle: pts.push_back(sp.cubics[1][2]); break;
      default: {
        const std::size_t n = required_points(proto.shape);
        for (std::size_t k = 0; pts.size() < n; ++k) pts.push_back(sp.cubics[k][2]);
      }
    }
    push(std::move(pts));
  }

  std::string_view doc_;
  std::size_t pos_ = 0;
};

}  // namespace

Canvas from_svg(std::string_view document) { return Reader(document).parse(); }

}  // namespace vecsynth
