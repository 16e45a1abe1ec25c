#pragma once

// Parametric CAD script language.
//
//   program    := statement*
//   statement  := workplane | rect | circle | polygon | polyline | extrude
//               | hole | chamfer | cut
//   workplane  := "workplane" PLANE vec3 ";"          PLANE := "XY" | "YZ" | "XZ"
//   rect       := "rect" num num ";"
//   circle     := "circle" num ";"
//   polygon    := "polygon" int num ";"                side count, circumradius
//   polyline   := "polyline" vec2 vec2 vec2 {vec2} ";" closed implicitly
//   extrude    := "extrude" num ";"
//   hole       := "hole" vec2 num ["through"] ";"
//   chamfer    := "chamfer" num ";"
//   cut        := "cut" num ";"
//   vec2       := "(" num "," num ")"
//   vec3       := "(" num "," num "," num ")"
//
// Whitespace is insignificant. "#" starts a comment running to end of line.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cadforge/geometry.hpp"

namespace cadforge {

enum class Plane { XY, YZ, XZ };

inline const char* plane_name(Plane p) {
  switch (p) {
    case Plane::XY: return "XY";
    case Plane::YZ: return "YZ";
    case Plane::XZ: return "XZ";
  }
  return "XY";
}

/// Canonical in-plane axes for each plane id; the sketch normal is x_axis × y_axis.
inline Frame plane_frame(Plane p, Vec3 origin) {
  switch (p) {
    case Plane::XY: return {origin, {1, 0, 0}, {0, 1, 0}};
    case Plane::YZ: return {origin, {0, 1, 0}, {0, 0, 1}};
    case Plane::XZ: return {origin, {1, 0, 0}, {0, 0, 1}};
  }
  return {origin, {1, 0, 0}, {0, 1, 0}};
}

namespace stmt {

struct Workplane {
  Plane plane = Plane::XY;
  Vec3 origin;
  friend bool operator==(const Workplane&, const Workplane&) = default;
};
struct Rect {
  double width = 0;
  double height = 0;
  friend bool operator==(const Rect&, const Rect&) = default;
};
struct Circle {
  double radius = 0;
  friend bool operator==(const Circle&, const Circle&) = default;
};
struct Polygon {
  int sides = 0;
  double circumradius = 0;
  friend bool operator==(const Polygon&, const Polygon&) = default;
};
struct Polyline {
  std::vector<Vec2> points;
  friend bool operator==(const Polyline&, const Polyline&) = default;
};
struct Extrude {
  double depth = 0;
  friend bool operator==(const Extrude&, const Extrude&) = default;
};
struct Hole {
  Vec2 center;
  double radius = 0;
  bool through = true;
  friend bool operator==(const Hole&, const Hole&) = default;
};
struct Chamfer {
  double leg = 0;
  friend bool operator==(const Chamfer&, const Chamfer&) = default;
};
struct CutExtrude {
  double depth = 0;
  friend bool operator==(const CutExtrude&, const CutExtrude&) = default;
};

}  // namespace stmt

using Statement = std::variant<stmt::Workplane, stmt::Rect, stmt::Circle, stmt::Polygon,
                               stmt::Polyline, stmt::Extrude, stmt::Hole, stmt::Chamfer,
                               stmt::CutExtrude>;

inline bool is_sketch(const Statement& s) {
  return std::holds_alternative<stmt::Rect>(s) || std::holds_alternative<stmt::Circle>(s) ||
         std::holds_alternative<stmt::Polygon>(s) || std::holds_alternative<stmt::Polyline>(s);
}

inline bool is_modifier(const Statement& s) {
  return std::holds_alternative<stmt::Hole>(s) || std::holds_alternative<stmt::Chamfer>(s) ||
         std::holds_alternative<stmt::CutExtrude>(s);
}

struct CadProgram {
  std::vector<Statement> statements;
  friend bool operator==(const CadProgram&, const CadProgram&) = default;
};

enum class ParseErrorKind { Syntax, Semantic };

enum class ParseReason {
  UnexpectedCharacter,
  UnexpectedToken,
  UnexpectedEnd,
  BadNumber,
  UnknownKeyword,
  UnknownPlane,
  NonPositiveDimension,
  MissingWorkplane,
  SketchWithoutExtrude,
  ExtrudeWithoutSketch,
  NoSolidForModifier,
  DuplicateChamfer,
  TooFewSides,
  TooFewPoints,
  DegeneratePolyline,
  SelfIntersectingPolyline,
  NonFiniteValue,
};

inline const char* reason_name(ParseReason r) {
  switch (r) {
    case ParseReason::UnexpectedCharacter: return "unexpected_character";
    case ParseReason::UnexpectedToken: return "unexpected_token";
    case ParseReason::UnexpectedEnd: return "unexpected_end";
    case ParseReason::BadNumber: return "bad_number";
    case ParseReason::UnknownKeyword: return "unknown_keyword";
    case ParseReason::UnknownPlane: return "unknown_plane";
    case ParseReason::NonPositiveDimension: return "non_positive_dimension";
    case ParseReason::MissingWorkplane: return "missing_workplane";
    case ParseReason::SketchWithoutExtrude: return "sketch_without_extrude";
    case ParseReason::ExtrudeWithoutSketch: return "extrude_without_sketch";
    case ParseReason::NoSolidForModifier: return "no_solid_for_modifier";
    case ParseReason::DuplicateChamfer: return "duplicate_chamfer";
    case ParseReason::TooFewSides: return "too_few_sides";
    case ParseReason::TooFewPoints: return "too_few_points";
    case ParseReason::DegeneratePolyline: return "degenerate_polyline";
    case ParseReason::SelfIntersectingPolyline: return "self_intersecting_polyline";
    case ParseReason::NonFiniteValue: return "non_finite_value";
  }
  return "unknown";
}

class ParseError : public std::runtime_error {
 public:
  ParseError(ParseErrorKind kind, ParseReason reason, int line, int column, const std::string& what)
      : std::runtime_error(format(kind, reason, line, column, what)),
        kind_(kind),
        reason_(reason),
        line_(line),
        column_(column) {}

  ParseErrorKind kind() const { return kind_; }
  ParseReason reason() const { return reason_; }
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  static std::string format(ParseErrorKind kind, ParseReason reason, int line, int column,
                            const std::string& what) {
    return std::string(kind == ParseErrorKind::Syntax ? "syntax error" : "semantic error") + " (" +
           reason_name(reason) + ") at " + std::to_string(line) + ":" + std::to_string(column) +
           ": " + what;
  }

  ParseErrorKind kind_;
  ParseReason reason_;
  int line_;
  int column_;
};

namespace detail {

enum class LexKind { Word, Number, LParen, RParen, Comma, Semi, End };

struct Lexeme {
  LexKind kind = LexKind::End;
  std::string_view text;
  double value = 0.0;
  int line = 1;
  int column = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Lexeme next() {
    skip_space();
    Lexeme lx;
    lx.line = line_;
    lx.column = col_;
    if (pos_ >= src_.size()) return lx;
    const char c = src_[pos_];
    const auto single = [&](LexKind k) {
      lx.kind = k;
      lx.text = src_.substr(pos_, 1);
      advance(1);
      return lx;
    };
    switch (c) {
      case '(': return single(LexKind::LParen);
      case ')': return single(LexKind::RParen);
      case ',': return single(LexKind::Comma);
      case ';': return single(LexKind::Semi);
      default: break;
    }
    if (is_alpha(c)) {
      std::size_t end = pos_;
      while (end < src_.size() && (is_alpha(src_[end]) || is_digit(src_[end]) || src_[end] == '_'))
        ++end;
      lx.kind = LexKind::Word;
      lx.text = src_.substr(pos_, end - pos_);
      advance(end - pos_);
      return lx;
    }
    if (is_digit(c) || c == '-' || c == '+' || c == '.') {
      std::size_t end = pos_;
      if (src_[end] == '-' || src_[end] == '+') ++end;
      while (end < src_.size() && (is_digit(src_[end]) || src_[end] == '.')) ++end;
      if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
        std::size_t exp = end + 1;
        if (exp < src_.size() && (src_[exp] == '-' || src_[exp] == '+')) ++exp;
        if (exp < src_.size() && is_digit(src_[exp])) {
          end = exp;
          while (end < src_.size() && is_digit(src_[end])) ++end;
        }
      }
      lx.text = src_.substr(pos_, end - pos_);
      std::string_view digits = lx.text;
      if (!digits.empty() && digits.front() == '+') digits.remove_prefix(1);
      double v = 0.0;
      const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), v);
      if (res.ec != std::errc() || res.ptr != digits.data() + digits.size()) {
        throw ParseError(ParseErrorKind::Syntax, ParseReason::BadNumber, lx.line, lx.column,
                         "malformed number '" + std::string(lx.text) + "'");
      }
      if (!std::isfinite(v)) {
        throw ParseError(ParseErrorKind::Syntax, ParseReason::NonFiniteValue, lx.line, lx.column,
                         "number out of range '" + std::string(lx.text) + "'");
      }
      lx.kind = LexKind::Number;
      lx.value = v;
      advance(end - pos_);
      return lx;
    }
    throw ParseError(ParseErrorKind::Syntax, ParseReason::UnexpectedCharacter, line_, col_,
                     std::string("unexpected character '") + c + "'");
  }

 private:
  static bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
  static bool is_digit(char c) { return c >= '0' && c <= '9'; }

  void advance(std::size_t n) {
    for (std::size_t i = 0; i < n && pos_ < src_.size(); ++i, ++pos_) {
      if (src_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
    }
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance(1);
      } else if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance(1);
      } else {
        break;
      }
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

inline bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const auto orient = [](Vec2 p, Vec2 q, Vec2 r) { return cross(q - p, r - p); };
  const auto on_segment = [](Vec2 p, Vec2 q, Vec2 r) {
    return std::min(p.x, q.x) <= r.x && r.x <= std::max(p.x, q.x) && std::min(p.y, q.y) <= r.y &&
           r.y <= std::max(p.y, q.y);
  };
  const double o1 = orient(a, b, c);
  const double o2 = orient(a, b, d);
  const double o3 = orient(c, d, a);
  const double o4 = orient(c, d, b);
  if (((o1 > 0 && o2 < 0) || (o1 < 0 && o2 > 0)) && ((o3 > 0 && o4 < 0) || (o3 < 0 && o4 > 0)))
    return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

inline double signed_area(const std::vector<Vec2>& pts) {
  double a = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) a += cross(pts[i], pts[(i + 1) % pts.size()]);
  return 0.5 * a;
}

/// True iff no two non-adjacent edges of the closed loop touch.
inline bool is_simple_polygon(const std::vector<Vec2>& pts) {
  const std::size_t n = pts.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n])) return false;
    }
  }
  return true;
}

class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) { cur_ = lex_.next(); }

  CadProgram parse() {
    CadProgram prog;
    while (cur_.kind != LexKind::End) statement(prog);
    check_semantics(prog);
    return prog;
  }

 private:
  struct Located {
    int line;
    int column;
  };

  [[noreturn]] void syntax(ParseReason r, const std::string& what) const {
    throw ParseError(ParseErrorKind::Syntax, r, cur_.line, cur_.column, what);
  }

  [[noreturn]] void unexpected(const char* expected) const {
    if (cur_.kind == LexKind::End)
      syntax(ParseReason::UnexpectedEnd, std::string("expected ") + expected + ", found end of input");
    syntax(ParseReason::UnexpectedToken,
           std::string("expected ") + expected + ", found '" + std::string(cur_.text) + "'");
  }

  void expect(LexKind k, const char* what) {
    if (cur_.kind != k) unexpected(what);
    cur_ = lex_.next();
  }

  double number() {
    if (cur_.kind != LexKind::Number) unexpected("number");
    const double v = cur_.value;
    cur_ = lex_.next();
    return v;
  }

  Vec2 vec2() {
    expect(LexKind::LParen, "'('");
    Vec2 v;
    v.x = number();
    expect(LexKind::Comma, "','");
    v.y = number();
    expect(LexKind::RParen, "')'");
    return v;
  }

  Vec3 vec3() {
    expect(LexKind::LParen, "'('");
    Vec3 v;
    v.x = number();
    expect(LexKind::Comma, "','");
    v.y = number();
    expect(LexKind::Comma, "','");
    v.z = number();
    expect(LexKind::RParen, "')'");
    return v;
  }

  void statement(CadProgram& prog) {
    if (cur_.kind != LexKind::Word) unexpected("statement keyword");
    const std::string_view kw = cur_.text;
    const Located kw_at{cur_.line, cur_.column};
    locations_.push_back(kw_at);
    cur_ = lex_.next();
    if (kw == "workplane") {
      if (cur_.kind != LexKind::Word) unexpected("plane id");
      stmt::Workplane w;
      if (cur_.text == "XY") {
        w.plane = Plane::XY;
      } else if (cur_.text == "YZ") {
        w.plane = Plane::YZ;
      } else if (cur_.text == "XZ") {
        w.plane = Plane::XZ;
      } else {
        syntax(ParseReason::UnknownPlane, "unknown plane '" + std::string(cur_.text) + "'");
      }
      cur_ = lex_.next();
      w.origin = vec3();
      prog.statements.emplace_back(w);
    } else if (kw == "rect") {
      stmt::Rect r;
      r.width = number();
      r.height = number();
      prog.statements.emplace_back(r);
    } else if (kw == "circle") {
      prog.statements.emplace_back(stmt::Circle{number()});
    } else if (kw == "polygon") {
      const Lexeme at = cur_;
      const double sides = number();
      if (sides != std::floor(sides) || std::abs(sides) > 1e6) {
        throw ParseError(ParseErrorKind::Syntax, ParseReason::BadNumber, at.line, at.column,
                         "polygon side count must be an integer");
      }
      stmt::Polygon p;
      p.sides = static_cast<int>(sides);
      p.circumradius = number();
      prog.statements.emplace_back(p);
    } else if (kw == "polyline") {
      stmt::Polyline pl;
      while (cur_.kind == LexKind::LParen) pl.points.push_back(vec2());
      prog.statements.emplace_back(std::move(pl));
    } else if (kw == "extrude") {
      prog.statements.emplace_back(stmt::Extrude{number()});
    } else if (kw == "hole") {
      stmt::Hole h;
      h.center = vec2();
      h.radius = number();
      h.through = false;
      if (cur_.kind == LexKind::Word && cur_.text == "through") {
        h.through = true;
        cur_ = lex_.next();
      }
      prog.statements.emplace_back(h);
    } else if (kw == "chamfer") {
      prog.statements.emplace_back(stmt::Chamfer{number()});
    } else if (kw == "cut") {
      prog.statements.emplace_back(stmt::CutExtrude{number()});
    } else {
      throw ParseError(ParseErrorKind::Syntax, ParseReason::UnknownKeyword, kw_at.line, kw_at.column,
                       "unknown statement '" + std::string(kw) + "'");
    }
    expect(LexKind::Semi, "';'");
  }

  [[noreturn]] void semantic(std::size_t index, ParseReason r, const std::string& what) const {
    const Located at = index < locations_.size() ? locations_[index] : Located{1, 1};
    throw ParseError(ParseErrorKind::Semantic, r, at.line, at.column, what);
  }

  void positive(std::size_t index, double v, const char* what) const {
    if (!(v > 0.0)) semantic(index, ParseReason::NonPositiveDimension, std::string(what) + " must be positive");
  }

  void check_semantics(const CadProgram& prog) const {
    if (prog.statements.empty() || !std::holds_alternative<stmt::Workplane>(prog.statements.front()))
      semantic(0, ParseReason::MissingWorkplane, "program must start with a workplane");

    bool pending_sketch = false;
    std::size_t sketch_index = 0;
    bool have_solid = false;
    bool last_extrusion_chamfered = false;
    for (std::size_t i = 0; i < prog.statements.size(); ++i) {
      const Statement& s = prog.statements[i];
      if (is_sketch(s)) {
        if (pending_sketch)
          semantic(sketch_index, ParseReason::SketchWithoutExtrude,
                   "sketch is not followed by extrude or cut before the next sketch");
        pending_sketch = true;
        sketch_index = i;
      }
      if (const auto* r = std::get_if<stmt::Rect>(&s)) {
        positive(i, r->width, "rect width");
        positive(i, r->height, "rect height");
      } else if (const auto* c = std::get_if<stmt::Circle>(&s)) {
        positive(i, c->radius, "circle radius");
      } else if (const auto* p = std::get_if<stmt::Polygon>(&s)) {
        if (p->sides < 3) semantic(i, ParseReason::TooFewSides, "polygon needs at least 3 sides");
        positive(i, p->circumradius, "polygon circumradius");
      } else if (const auto* pl = std::get_if<stmt::Polyline>(&s)) {
        if (pl->points.size() < 3) semantic(i, ParseReason::TooFewPoints, "polyline needs at least 3 points");
        for (std::size_t k = 0; k < pl->points.size(); ++k) {
          if (pl->points[k] == pl->points[(k + 1) % pl->points.size()])
            semantic(i, ParseReason::DegeneratePolyline, "polyline has a zero-length edge");
        }
        if (std::abs(signed_area(pl->points)) <= 0.0)
          semantic(i, ParseReason::DegeneratePolyline, "polyline encloses no area");
        if (!is_simple_polygon(pl->points))
          semantic(i, ParseReason::SelfIntersectingPolyline, "polyline intersects itself");
      } else if (const auto* e = std::get_if<stmt::Extrude>(&s)) {
        positive(i, e->depth, "extrude depth");
        if (!pending_sketch) semantic(i, ParseReason::ExtrudeWithoutSketch, "extrude without a sketch");
        pending_sketch = false;
        have_solid = true;
        last_extrusion_chamfered = false;
      } else if (const auto* ce = std::get_if<stmt::CutExtrude>(&s)) {
        positive(i, ce->depth, "cut depth");
        if (!pending_sketch) semantic(i, ParseReason::ExtrudeWithoutSketch, "cut without a sketch");
        if (!have_solid) semantic(i, ParseReason::NoSolidForModifier, "cut before any extrusion");
        pending_sketch = false;
      } else if (const auto* h = std::get_if<stmt::Hole>(&s)) {
        positive(i, h->radius, "hole radius");
        if (!have_solid) semantic(i, ParseReason::NoSolidForModifier, "hole before any extrusion");
      } else if (const auto* ch = std::get_if<stmt::Chamfer>(&s)) {
        positive(i, ch->leg, "chamfer leg");
        if (!have_solid) semantic(i, ParseReason::NoSolidForModifier, "chamfer before any extrusion");
        if (last_extrusion_chamfered)
          semantic(i, ParseReason::DuplicateChamfer, "extrusion is already chamfered");
        last_extrusion_chamfered = true;
      }
    }
    if (pending_sketch)
      semantic(sketch_index, ParseReason::SketchWithoutExtrude, "sketch is never extruded or cut");
  }

  Lexer lex_;
  Lexeme cur_;
  std::vector<Located> locations_;
};

}  // namespace detail

/// Parse and validate a script. Throws ParseError; never aborts on any input.
inline CadProgram parse(std::string_view text) { return detail::Parser(text).parse(); }

/// Non-throwing variant.
inline std::variant<CadProgram, ParseError> try_parse(std::string_view text) {
  try {
    return parse(text);
  } catch (const ParseError& e) {
    return e;
  }
}

/// 6 significant digits, no trailing zeros, no negative zero.
inline std::string format_number(double v) {
  if (v == 0.0) v = 0.0;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  std::string s(buf);
  if (s == "-0") s = "0";
  return s;
}

namespace detail {

inline void emit_vec(std::string& out, Vec2 v) {
  out += '(' + format_number(v.x) + ',' + format_number(v.y) + ')';
}

inline void emit_vec(std::string& out, Vec3 v) {
  out += '(' + format_number(v.x) + ',' + format_number(v.y) + ',' + format_number(v.z) + ')';
}

struct StatementEmitter {
  std::string& out;

  void operator()(const stmt::Workplane& s) const {
    out += "workplane ";
    out += plane_name(s.plane);
    out += ' ';
    emit_vec(out, s.origin);
  }
  void operator()(const stmt::Rect& s) const {
    out += "rect " + format_number(s.width) + ' ' + format_number(s.height);
  }
  void operator()(const stmt::Circle& s) const { out += "circle " + format_number(s.radius); }
  void operator()(const stmt::Polygon& s) const {
    out += "polygon " + std::to_string(s.sides) + ' ' + format_number(s.circumradius);
  }
  void operator()(const stmt::Polyline& s) const {
    out += "polyline";
    for (const Vec2& p : s.points) {
      out += ' ';
      emit_vec(out, p);
    }
  }
  void operator()(const stmt::Extrude& s) const { out += "extrude " + format_number(s.depth); }
  void operator()(const stmt::Hole& s) const {
    out += "hole ";
    emit_vec(out, s.center);
    out += ' ' + format_number(s.radius);
    if (s.through) out += " through";
  }
  void operator()(const stmt::Chamfer& s) const { out += "chamfer " + format_number(s.leg); }
  void operator()(const stmt::CutExtrude& s) const { out += "cut " + format_number(s.depth); }
};

}  // namespace detail

/// Canonical text: one statement per line, LF endings.
inline std::string emit(const CadProgram& program) {
  std::string out;
  for (const Statement& s : program.statements) {
    std::visit(detail::StatementEmitter{out}, s);
    out += ";\n";
  }
  return out;
}

inline std::string emit(const Statement& s) {
  std::string out;
  std::visit(detail::StatementEmitter{out}, s);
  return out;
}

/// Frame of the leading workplane.
inline Frame workplane_frame(const CadProgram& program) {
  const auto& wp = std::get<stmt::Workplane>(program.statements.front());
  return plane_frame(wp.plane, wp.origin);
}

}  // namespace cadforge
