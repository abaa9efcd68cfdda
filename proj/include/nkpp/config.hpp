#pragma once

// Flat experiment configuration: `[section]` headers and `key = value` lines;
// values are numbers, booleans, "strings" or [number, ...] arrays. `#` starts
// a comment. Serialization is canonical (sorted keys, %.17g numbers), so
// parse -> serialize -> parse is the identity and the text can be hashed.

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "nkpp/errors.hpp"
#include "nkpp/grid.hpp"
#include "nkpp/kernels.hpp"
#include "nkpp/model.hpp"
#include "nkpp/solver.hpp"
#include "nkpp/weinberger.hpp"

namespace nkpp {

class ParseError : public ConfigError {
 public:
  ParseError(const std::string& what, int line, int col)
      : ConfigError("line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + what),
        line_(line),
        col_(col) {}
  int line() const { return line_; }
  int column() const { return col_; }

 private:
  int line_, col_;
};

namespace cfg {

using Array = std::vector<double>;

struct Value {
  std::variant<double, bool, std::string, Array> data;
  int line = 0, col = 0;

  bool operator==(const Value& o) const { return data == o.data; }
};

inline std::string format_number(double v) {
  char buf[64];
  if (std::isfinite(v) && v == std::floor(v) && std::abs(v) < 9007199254740992.0) {
    std::snprintf(buf, sizeof buf, "%.0f", v);
  } else {
    std::snprintf(buf, sizeof buf, "%.17g", v);
  }
  return buf;
}

/// Sections keyed by name; "" holds the keys before the first header.
class Document {
 public:
  using Section = std::map<std::string, Value>;

  static Document parse(const std::string& text) {
    Document doc;
    std::string section;
    doc.sections_[section];
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      Cursor c{line, 0, lineno};
      c.skip_ws();
      if (c.done() || c.peek() == '#') continue;
      if (c.peek() == '[') {
        ++c.pos;
        c.skip_ws();
        const int col = c.col();
        std::string name = c.identifier();
        if (name.empty()) throw ParseError("expected a section name", lineno, col);
        c.skip_ws();
        if (c.done() || c.peek() != ']') throw ParseError("expected ']'", lineno, c.col());
        ++c.pos;
        c.expect_end();
        if (doc.sections_.count(name)) throw ParseError("duplicate section [" + name + "]", lineno, col);
        section = name;
        doc.sections_[section];
        continue;
      }
      const int key_col = c.col();
      std::string key = c.identifier();
      if (key.empty()) throw ParseError("expected a key", lineno, key_col);
      c.skip_ws();
      if (c.done() || c.peek() != '=') throw ParseError("expected '=' after key '" + key + "'", lineno, c.col());
      ++c.pos;
      c.skip_ws();
      Value v = c.value();
      c.expect_end();
      auto& sec = doc.sections_[section];
      if (sec.count(key)) throw ParseError("duplicate key '" + key + "'", lineno, key_col);
      sec[key] = std::move(v);
    }
    return doc;
  }

  static Document load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  std::string serialize() const {
    std::ostringstream os;
    bool first = true;
    for (const auto& [name, sec] : sections_) {
      if (sec.empty()) continue;
      if (!name.empty()) os << (first ? "" : "\n") << "[" << name << "]\n";
      first = false;
      for (const auto& [k, v] : sec) os << k << " = " << render(v) << "\n";
    }
    return os.str();
  }

  bool operator==(const Document& o) const {
    auto strip = [](const Document& d) {
      std::map<std::string, Section> m;
      for (const auto& [n, s] : d.sections_)
        if (!s.empty()) m[n] = s;
      return m;
    };
    return strip(*this) == strip(o);
  }

  bool has_section(const std::string& s) const { return sections_.count(s) && !sections_.at(s).empty(); }
  const Value* find(const std::string& s, const std::string& k) const {
    auto it = sections_.find(s);
    if (it == sections_.end()) return nullptr;
    auto jt = it->second.find(k);
    return jt == it->second.end() ? nullptr : &jt->second;
  }
  void set(const std::string& s, const std::string& k, Value v) { sections_[s][k] = std::move(v); }
  const std::map<std::string, Section>& sections() const { return sections_; }

  static std::string render(const Value& v) {
    return std::visit(
        [](const auto& x) -> std::string {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, double>) return format_number(x);
          else if constexpr (std::is_same_v<T, bool>) return x ? "true" : "false";
          else if constexpr (std::is_same_v<T, std::string>) {
            std::string out = "\"";
            for (char ch : x) {
              if (ch == '"' || ch == '\\') out += '\\';
              out += ch;
            }
            return out + "\"";
          } else {
            std::string out = "[";
            for (std::size_t i = 0; i < x.size(); ++i) out += (i ? ", " : "") + format_number(x[i]);
            return out + "]";
          }
        },
        v.data);
  }

 private:
  struct Cursor {
    const std::string& s;
    std::size_t pos;
    int line;

    bool done() const { return pos >= s.size(); }
    char peek() const { return s[pos]; }
    int col() const { return static_cast<int>(pos) + 1; }
    void skip_ws() {
      while (!done() && (s[pos] == ' ' || s[pos] == '\t' || s[pos] == '\r')) ++pos;
    }
    std::string identifier() {
      std::string out;
      while (!done() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_' || s[pos] == '-'))
        out += s[pos++];
      return out;
    }
    void expect_end() {
      skip_ws();
      if (!done() && peek() != '#') throw ParseError("unexpected trailing characters", line, col());
    }
    double number() {
      const int c0 = col();
      std::size_t start = pos;
      while (!done() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '.' || s[pos] == '+' ||
                         s[pos] == '-'))
        ++pos;
      const std::string tok = s.substr(start, pos - start);
      if (tok.empty()) throw ParseError("expected a value", line, c0);
      if (tok == "inf" || tok == "+inf") return std::numeric_limits<double>::infinity();
      if (tok == "-inf") return -std::numeric_limits<double>::infinity();
      std::size_t used = 0;
      double v = 0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size() || std::isnan(v)) throw ParseError("invalid number '" + tok + "'", line, c0);
      return v;
    }
    Value value() {
      Value v;
      v.line = line;
      v.col = col();
      if (done()) throw ParseError("expected a value", line, col());
      const char ch = peek();
      if (ch == '"') {
        ++pos;
        std::string out;
        while (true) {
          if (done()) throw ParseError("unterminated string", line, v.col);
          char x = s[pos++];
          if (x == '"') break;
          if (x == '\\') {
            if (done()) throw ParseError("unterminated string", line, v.col);
            x = s[pos++];
          }
          out += x;
        }
        v.data = out;
      } else if (ch == '[') {
        ++pos;
        Array arr;
        skip_ws();
        if (!done() && peek() == ']') {
          ++pos;
        } else {
          while (true) {
            skip_ws();
            arr.push_back(number());
            skip_ws();
            if (done()) throw ParseError("unterminated array", line, v.col);
            if (peek() == ',') {
              ++pos;
              continue;
            }
            if (peek() == ']') {
              ++pos;
              break;
            }
            throw ParseError("expected ',' or ']' in array", line, col());
          }
        }
        v.data = arr;
      } else if (s.compare(pos, 4, "true") == 0) {
        pos += 4;
        v.data = true;
      } else if (s.compare(pos, 5, "false") == 0) {
        pos += 5;
        v.data = false;
      } else {
        v.data = number();
      }
      return v;
    }
  };

  std::map<std::string, Section> sections_;
};

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Typed, consuming access to one section; unknown keys are reported by finish().
class Reader {
 public:
  Reader(const Document& d, std::string section) : doc_(d), section_(std::move(section)) {}

  double number(const std::string& key) const { return get<double>(key, "a number"); }
  double number(const std::string& key, double def) const { return has(key) ? number(key) : def; }
  long integer(const std::string& key) const {
    const double v = number(key);
    if (v != std::floor(v) || std::abs(v) > 9e15) throw error(key, "must be an integer");
    return static_cast<long>(v);
  }
  long integer(const std::string& key, long def) const { return has(key) ? integer(key) : def; }
  bool boolean(const std::string& key, bool def) const { return has(key) ? get<bool>(key, "true or false") : def; }
  std::string string(const std::string& key) const { return get<std::string>(key, "a string"); }
  std::string string(const std::string& key, const std::string& def) const { return has(key) ? string(key) : def; }
  Array array(const std::string& key) const { return get<Array>(key, "an array of numbers"); }
  Array array(const std::string& key, const Array& def) const { return has(key) ? array(key) : def; }

  bool has(const std::string& key) const {
    seen_.insert(key);
    return doc_.find(section_, key) != nullptr;
  }

  ConfigError error(const std::string& key, const std::string& what) const {
    const Value* v = doc_.find(section_, key);
    std::string where = v ? "line " + std::to_string(v->line) + ", column " + std::to_string(v->col) + ": " : "";
    return ConfigError(where + label(key) + " " + what);
  }

  void finish() const {
    auto it = doc_.sections().find(section_);
    if (it == doc_.sections().end()) return;
    for (const auto& [k, v] : it->second) {
      if (!seen_.count(k)) throw ParseError("unknown key " + label(k), v.line, v.col);
    }
  }

 private:
  std::string label(const std::string& key) const {
    return "'" + key + "'" + (section_.empty() ? "" : " in [" + section_ + "]");
  }

  template <class T>
  T get(const std::string& key, const char* type) const {
    seen_.insert(key);
    const Value* v = doc_.find(section_, key);
    if (!v) throw ConfigError("missing key " + label(key));
    if (const T* x = std::get_if<T>(&v->data)) return *x;
    throw error(key, std::string("must be ") + type);
  }

  const Document& doc_;
  std::string section_;
  mutable std::set<std::string> seen_;
};

}  // namespace cfg

enum class ExperimentKind { check, speed, front_set, simulate, track, weinberger, stationary };

inline std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::check: return "check";
    case ExperimentKind::speed: return "speed";
    case ExperimentKind::front_set: return "front-set";
    case ExperimentKind::simulate: return "simulate";
    case ExperimentKind::track: return "track";
    case ExperimentKind::weinberger: return "weinberger";
    case ExperimentKind::stationary: return "stationary";
  }
  return "check";
}

inline ExperimentKind kind_from_string(const std::string& s) {
  for (auto k : {ExperimentKind::check, ExperimentKind::speed, ExperimentKind::front_set, ExperimentKind::simulate,
                 ExperimentKind::track, ExperimentKind::weinberger, ExperimentKind::stationary}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown experiment kind '" + s + "'");
}

struct TrackSettings {
  double level = 0.5;  ///< fraction of theta
  int directions = 16;  ///< 2D rays / front-set directions
  double window_fraction = 0.5;
  double tolerance = 0.05;  ///< relative slope tolerance for the verdict
  double hausdorff_fraction = 0.1;
  double inside_shrink = 0.8;
};

struct WeinbergerSettings {
  double T = 1.0;
  std::optional<double> tol;  ///< default 0.02 T
  Direction xi;
  WeinbergerOptions options;
  int max_doublings = 2;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::check;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  int directions = 64;  ///< directions for check / speed / front-set in 2D
  SimConfig sim;
  bool has_simulation = false;
  TrackSettings track;
  WeinbergerSettings weinberger;
  double stationary_window = 0.5;
  std::string source;  ///< canonical serialization of the parsed document
  std::string hash;    ///< FNV-1a of `source`

  int dim() const { return sim.kernel_plus.dim(); }
};

namespace detail {

inline KernelSpec kernel_from(const cfg::Document& doc, const std::string& section) {
  cfg::Reader r(doc, section);
  const std::string fam = r.string("family");
  const int dim = static_cast<int>(r.integer("dim", 1));
  KernelSpec k;
  if (fam == "gaussian") {
    k = KernelSpec::gaussian(r.number("sigma"), dim);
  } else if (fam == "laplace") {
    k = KernelSpec::laplace(r.number("rate"), dim);
  } else if (fam == "uniform_ball") {
    k = KernelSpec::uniform_ball(r.number("radius"), dim);
  } else if (fam == "anisotropic_gaussian") {
    if (r.has("covariance")) {
      k = KernelSpec::anisotropic_gaussian(r.array("covariance"), dim);
    } else {
      if (dim != 2) throw r.error("dim", "must be 2 when sigma_x / sigma_y are given");
      k = KernelSpec::anisotropic_gaussian_2d(r.number("sigma_x"), r.number("sigma_y"), r.number("angle", 0.0));
    }
  } else if (fam == "shifted_gaussian") {
    const auto mean = r.array("mean");
    if (static_cast<int>(mean.size()) != dim) throw r.error("mean", "must have dim entries");
    k = KernelSpec::shifted_gaussian(Vec(mean), r.number("sigma"));
  } else if (fam == "pareto_tail") {
    k = KernelSpec::pareto_tail(r.number("alpha"), r.number("scale", 1.0), dim);
  } else if (fam == "tabulated") {
    k = load_tabulated_kernel(r.string("path"));
    if (k.dim() != dim) throw r.error("dim", "does not match the tabulated file");
  } else {
    throw r.error("family", "is not a known kernel family ('" + fam + "')");
  }
  r.finish();
  return k;
}

inline Direction direction_from(const cfg::Reader& r, const std::string& key, int dim) {
  if (!r.has(key)) {
    Vec e(dim);
    e[0] = 1.0;
    return Direction(e);
  }
  const auto a = r.array(key);
  if (static_cast<int>(a.size()) != dim) throw r.error(key, "must have one entry per dimension");
  try {
    return Direction::normalized(Vec(a));
  } catch (const std::exception&) {
    throw r.error(key, "must be a nonzero vector");
  }
}

inline std::vector<double> load_column_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open initial-condition file " + path);
  std::vector<double> v;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    double x;
    while (ls >> x) v.push_back(x);
  }
  return v;
}

inline InitialCondition initial_from(const cfg::Document& doc, int dim, double theta, std::uint64_t seed) {
  cfg::Reader r(doc, "initial");
  const std::string kind = r.string("kind");
  // Amplitudes are given as fractions of theta.
  InitialCondition ic;
  if (kind == "ball") {
    Vec c(dim);
    if (r.has("center")) {
      const auto a = r.array("center");
      if (static_cast<int>(a.size()) != dim) throw r.error("center", "must have one entry per dimension");
      c = Vec(a);
    }
    ic = InitialCondition::ball(c, r.number("radius"), r.number("amplitude") * theta);
  } else if (kind == "constant") {
    ic = InitialCondition::constant(r.number("value") * theta);
  } else if (kind == "plane_wave") {
    const Direction xi = direction_from(r, "xi", dim);
    ic = InitialCondition::plane_wave(xi, r.number("lambda"), r.number("cap", 1.0) * theta, r.number("offset", 0.0),
                                      r.number("cutoff", -std::numeric_limits<double>::infinity()));
  } else if (kind == "half_space") {
    const Direction xi = direction_from(r, "xi", dim);
    ic = InitialCondition::half_space(xi, r.number("amplitude") * theta, r.number("offset", 0.0),
                                      r.number("cutoff", -std::numeric_limits<double>::infinity()));
  } else if (kind == "random") {
    ic = InitialCondition::random(r.number("lo") * theta, r.number("hi") * theta,
                                  static_cast<std::uint64_t>(r.integer("seed", static_cast<long>(seed))));
  } else if (kind == "tabulated") {
    ic = InitialCondition::tabulated(load_column_file(r.string("path")));
  } else {
    throw r.error("kind", "is not a known initial condition ('" + kind + "')");
  }
  r.finish();
  return ic;
}

}  // namespace detail

/// Builds and validates an experiment from a parsed document. `kind_override`
/// replaces (or supplies) the top-level `kind`.
inline ExperimentConfig experiment_from(const cfg::Document& doc,
                                        std::optional<ExperimentKind> kind_override = std::nullopt) {
  static const std::set<std::string> known{"",     "model",       "kernel_plus", "kernel_minus", "grid",
                                           "initial", "simulation", "track",       "weinberger",   "stationary"};
  for (const auto& [name, sec] : doc.sections()) {
    if (!known.count(name) && !sec.empty()) {
      const auto& v = sec.begin()->second;
      throw ParseError("unknown section [" + name + "]", v.line, 1);
    }
  }
  ExperimentConfig e;
  cfg::Reader top(doc, "");
  if (kind_override) {
    e.kind = *kind_override;
    if (top.has("kind")) top.string("kind");
  } else {
    e.kind = kind_from_string(top.string("kind"));
  }
  e.seed = static_cast<std::uint64_t>(top.integer("seed", 0));
  e.out_dir = top.string("out", "out");
  e.directions = static_cast<int>(top.integer("directions", 64));
  if (e.directions < 3) throw top.error("directions", "must be at least 3");
  top.finish();

  cfg::Reader m(doc, "model");
  ModelParams p;
  p.kappa_plus = m.number("kappa_plus");
  p.m = m.number("m");
  p.kappa_l = m.number("kappa_l", 0.0);
  p.kappa_nl = m.number("kappa_nl", 1.0);
  m.finish();
  p.validate();

  SimConfig& s = e.sim;
  s.params = p;
  s.kernel_plus = detail::kernel_from(doc, "kernel_plus");
  s.kernel_minus = doc.has_section("kernel_minus") ? detail::kernel_from(doc, "kernel_minus") : s.kernel_plus;
  if (s.kernel_minus.dim() != s.kernel_plus.dim()) throw ConfigError("kernel_minus dimension differs from kernel_plus");
  const int dim = s.kernel_plus.dim();
  if (dim > 2 && doc.has_section("grid")) throw ConfigError("simulations support dimensions 1 and 2 only");

  e.has_simulation = doc.has_section("grid");
  const bool needs_sim = e.kind == ExperimentKind::simulate || e.kind == ExperimentKind::track ||
                         e.kind == ExperimentKind::stationary;
  if (needs_sim && !e.has_simulation) throw ConfigError("missing section [grid]");
  if (e.has_simulation) {
    cfg::Reader g(doc, "grid");
    const int n = static_cast<int>(g.integer("n"));
    const double L = g.number("length");
    if (dim == 1) {
      s.grid = g.has("lower") ? Grid::line(n, L, g.number("lower")) : Grid::line(n, L);
    } else {
      s.grid = Grid::square(n, L);
    }
    g.finish();
    s.grid.validate();
    if (!doc.has_section("initial")) throw ConfigError("missing section [initial]");
    s.initial = detail::initial_from(doc, dim, p.theta(), e.seed);

    cfg::Reader r(doc, "simulation");
    s.dt = r.number("dt", 0.01);
    s.t_end = r.number("t_end", 1.0);
    s.snapshot_stride = static_cast<int>(r.integer("snapshot_stride", 10));
    const std::string integ = r.string("integrator", "rk4");
    if (integ == "rk4") s.integrator = Integrator::rk4;
    else if (integ == "euler") s.integrator = Integrator::euler;
    else throw r.error("integrator", "must be \"rk4\" or \"euler\"");
    const std::string samp = r.string("sampling", "automatic");
    if (samp == "automatic") s.sampling = KernelSampling::automatic;
    else if (samp == "point") s.sampling = KernelSampling::point;
    else if (samp == "cell_average") s.sampling = KernelSampling::cell_average;
    else throw r.error("sampling", "must be \"automatic\", \"point\" or \"cell_average\"");
    s.tube_mode = r.boolean("tube_mode", true);
    s.tube_tol = r.number("tube_tol", 1e-9);
    s.seam_guard = r.boolean("seam_guard", false);
    s.seam_cells = static_cast<int>(r.integer("seam_cells", 5));
    s.seam_level = r.number("seam_level", 1e-6);
    s.noise_floor = r.number("noise_floor", 1e-12);
    s.allow_kernel_truncation = r.boolean("allow_kernel_truncation", false);
    r.finish();
    s.validate();
  }

  cfg::Reader t(doc, "track");
  e.track.level = t.number("level", 0.5);
  e.track.directions = static_cast<int>(t.integer("directions", 16));
  e.track.window_fraction = t.number("window_fraction", 0.5);
  e.track.tolerance = t.number("tolerance", 0.05);
  e.track.hausdorff_fraction = t.number("hausdorff_fraction", 0.1);
  e.track.inside_shrink = t.number("inside_shrink", 0.8);
  t.finish();
  if (!(e.track.level > 0 && e.track.level < 1)) throw t.error("level", "must be in (0, 1)");
  if (e.track.directions < 2) throw t.error("directions", "must be at least 2");

  cfg::Reader w(doc, "weinberger");
  auto& ws = e.weinberger;
  ws.T = w.number("T", 1.0);
  if (w.has("tol")) ws.tol = w.number("tol");
  ws.xi = detail::direction_from(w, "xi", dim);
  ws.options.plateau = w.number("plateau", ws.options.plateau);
  ws.options.ramp = w.number("ramp", ws.options.ramp);
  ws.options.window_scale = w.number("window_scale", ws.options.window_scale);
  ws.options.target_h = w.number("target_h", ws.options.target_h);
  ws.options.dt = w.number("dt", ws.options.dt);
  ws.options.budget = static_cast<int>(w.integer("budget", ws.options.budget));
  ws.max_doublings = static_cast<int>(w.integer("max_doublings", ws.max_doublings));
  w.finish();
  if (!(ws.T > 0)) throw w.error("T", "must be positive");
  if (!(ws.options.plateau > 0 && ws.options.plateau < 1)) throw w.error("plateau", "must be in (0, 1)");
  if (ws.options.budget < 1) throw w.error("budget", "must be >= 1");

  cfg::Reader st(doc, "stationary");
  e.stationary_window = st.number("window", 0.5);
  st.finish();

  e.source = doc.serialize();
  e.hash = cfg::hex64(cfg::fnv1a(e.source));
  return e;
}

inline ExperimentConfig load_experiment(const std::string& path,
                                        std::optional<ExperimentKind> kind_override = std::nullopt) {
  return experiment_from(cfg::Document::load(path), kind_override);
}

}  // namespace nkpp
