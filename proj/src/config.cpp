#include "oscillax/config.hpp"

#include <toml.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace oscillax {

using nlohmann::json;

namespace {

json from_toml(const toml::node& node) {
  if (auto* t = node.as_table()) {
    json out = json::object();
    for (auto&& [k, v] : *t) out[std::string(k.str())] = from_toml(v);
    return out;
  }
  if (auto* a = node.as_array()) {
    json out = json::array();
    for (auto&& v : *a) out.push_back(from_toml(v));
    return out;
  }
  if (auto v = node.value_exact<std::int64_t>()) return *v;
  if (auto v = node.value_exact<double>()) return *v;
  if (auto v = node.value_exact<bool>()) return *v;
  if (auto v = node.value_exact<std::string>()) return *v;
  throw ConfigError("dates and times are not valid scenario values");
}

char first_significant(std::string_view text) {
  bool comment = false;
  for (char c : text) {
    if (comment) {
      comment = c != '\n';
      continue;
    }
    if (c == '#') {
      comment = true;
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      return c;
    }
  }
  return '\0';
}

// Typed access to one section of the document with the key path kept for
// error messages.
class Section {
 public:
  Section(const json& doc, std::string path) : doc_(doc), path_(std::move(path)) {
    if (!doc_.is_object()) fail("", "must be a table");
  }

  bool has(const char* key) const { return doc_.contains(key); }

  Section sub(const char* key) const {
    static const json empty = json::object();
    return Section(has(key) ? doc_.at(key) : empty, join(key));
  }

  double number(const char* key, double def) const { return has(key) ? as_number(doc_.at(key), key) : def; }

  int integer(const char* key, int def) const {
    if (!has(key)) return def;
    const json& v = doc_.at(key);
    if (!v.is_number_integer()) fail(key, "must be an integer");
    return v.get<int>();
  }

  bool boolean(const char* key, bool def) const {
    if (!has(key)) return def;
    const json& v = doc_.at(key);
    if (!v.is_boolean()) fail(key, "must be true or false");
    return v.get<bool>();
  }

  std::string string(const char* key, const std::string& def) const {
    if (!has(key)) return def;
    const json& v = doc_.at(key);
    if (!v.is_string()) fail(key, "must be a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const char* key, std::vector<double> def) const {
    if (!has(key)) return def;
    std::vector<double> out;
    for (const json& v : array(key)) out.push_back(as_number(v, key));
    return out;
  }

  std::vector<int> integers(const char* key, std::vector<int> def) const {
    if (!has(key)) return def;
    std::vector<int> out;
    for (const json& v : array(key)) {
      if (!v.is_number_integer()) fail(key, "entries must be integers");
      out.push_back(v.get<int>());
    }
    return out;
  }

  /// Entries are numbers or strings "1/n".
  std::vector<double> epsilons(const char* key) const {
    std::vector<double> out;
    if (!has(key)) return out;
    for (const json& v : array(key)) {
      if (v.is_string()) {
        const std::string s = v.get<std::string>();
        int n = 0;
        char tail = 0;
        if (std::sscanf(s.c_str(), "1/%d%c", &n, &tail) != 1 || n <= 0) fail(key, "bad entry '" + s + "'");
        out.push_back(1.0 / n);
      } else {
        out.push_back(as_number(v, key));
      }
    }
    return out;
  }

  void only(std::initializer_list<const char*> known) const {
    std::set<std::string> allowed(known.begin(), known.end());
    for (auto it = doc_.begin(); it != doc_.end(); ++it) {
      if (!allowed.count(it.key())) fail(it.key().c_str(), "unknown key");
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError(join(key) + ": " + what);
  }

 private:
  std::string join(const std::string& key) const {
    if (path_.empty()) return key;
    return key.empty() ? path_ : path_ + "." + key;
  }
  const json& array(const char* key) const {
    const json& v = doc_.at(key);
    if (!v.is_array()) fail(key, "must be an array");
    return v;
  }
  double as_number(const json& v, const char* key) const {
    if (!v.is_number()) fail(key, "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(key, "must be finite");
    return x;
  }

  const json& doc_;
  std::string path_;
};

ProfileSpec read_profile(const Section& s) {
  s.only({"mean", "cos", "sin", "k"});
  ProfileSpec p;
  p.mean = s.number("mean", 0);
  p.cos_amp = s.number("cos", 0);
  p.sin_amp = s.number("sin", 0);
  p.k = s.integer("k", 1);
  return p;
}

InitialSpec read_initial(const Section& s, InitialSpec def) {
  s.only({"kind", "alpha", "beta", "theta", "epsilon", "u0", "v0"});
  InitialSpec in = def;
  in.kind = s.string("kind", def.kind);
  if (in.kind != "two-state" && in.kind != "profile") s.fail("kind", "expected two-state or profile");
  in.alpha = s.number("alpha", def.alpha);
  in.beta = s.number("beta", def.beta);
  in.theta = s.number("theta", def.theta);
  in.epsilon = s.number("epsilon", def.epsilon);
  if (s.has("u0")) in.u0 = read_profile(s.sub("u0"));
  if (s.has("v0")) in.v0 = read_profile(s.sub("v0"));
  if (!(in.theta > 0 && in.theta < 1)) s.fail("theta", "must lie in (0, 1)");
  return in;
}

// n = 1/epsilon when it is an integer, else 0.
int inverse_epsilon(double eps) {
  if (!(eps > 0)) return 0;
  const double n = std::round(1 / eps);
  return std::abs(n * eps - 1) < 1e-12 ? static_cast<int>(n) : 0;
}

void check_oscillatory_grid(const Section& s, const char* key, int cells, double eps) {
  const int n = inverse_epsilon(eps);
  if (n == 0) s.fail(key, "1/epsilon must be a positive integer");
  if (cells % n != 0 || cells / n < 8) {
    s.fail(key, "grid of " + std::to_string(cells) + " cells does not resolve epsilon = 1/" + std::to_string(n) +
                    " (need a multiple of 1/epsilon with >= 8 cells per period)");
  }
}

void check_cells(const Section& s, int cells) {
  if (cells < 16) s.fail("cells", "need at least 16 cells");
}

ReactionRule read_rule(const Section& s) {
  const std::string r = s.string("reaction", "exact");
  if (r == "exact") return ReactionRule::Exact;
  if (r == "upwind") return ReactionRule::Upwind;
  s.fail("reaction", "expected exact or upwind");
}

}  // namespace

json parse_config_text(std::string_view text, const std::string& origin) {
  if (first_significant(text) == '{') {
    try {
      return json::parse(text);
    } catch (const json::parse_error& e) {
      throw ConfigError(origin + ": " + e.what());
    }
  }
  try {
    return from_toml(toml::parse(text, origin));
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << origin << ":" << e.source().begin.line << ":" << e.source().begin.column << ": " << e.description();
    throw ConfigError(msg.str());
  }
}

json load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot open");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string());
}

Mode parse_mode(std::string_view name) {
  if (name == "verify-exact") return Mode::VerifyExact;
  if (name == "simulate") return Mode::Simulate;
  if (name == "effective") return Mode::Effective;
  if (name == "compare-homog") return Mode::CompareHomog;
  throw ConfigError("unknown mode '" + std::string(name) + "'");
}

std::string mode_name(Mode mode) {
  switch (mode) {
    case Mode::VerifyExact: return "verify-exact";
    case Mode::Simulate: return "simulate";
    case Mode::Effective: return "effective";
    case Mode::CompareHomog: return "compare-homog";
  }
  return "?";
}

double ProfileSpec::operator()(double x) const {
  const double w = k * std::numbers::pi * x;
  return mean + cos_amp * std::cos(w) + sin_amp * std::sin(w);
}

StressLaw LawSpec::build() const {
  if (kind == "two-phase") return make_two_phase_stress(a, b, growth, two_phase);
  if (kind == "affine") return make_affine_law(slope, intercept, lo, hi);
  std::ifstream in(file);
  if (!in) throw ConfigError("law.file: cannot open " + file.string());
  try {
    return law_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw ConfigError("law.file: " + std::string(e.what()));
  }
}

std::optional<PressureLaw> PressureSpec::build(const ExactSolutionParams& p) const {
  if (kind == "none") return std::nullopt;
  if (kind == "matched") return make_nonmonotone_pressure(p.a, p.b, p.d, matched);
  if (kind == "monotone") return make_affine_law(slope, intercept, 0.0, matched.range_factor * p.b);
  std::ifstream in(file);
  if (!in) throw ConfigError("pressure.file: cannot open " + file.string());
  try {
    return law_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw ConfigError("pressure.file: " + std::string(e.what()));
  }
}

ScenarioConfig scenario_from_json(const json& doc, Mode mode) {
  const Section root(doc, "");
  root.only({"mode", "seed", "threads", "out", "law", "pressure", "params", "verify", "simulate", "effective",
             "homog"});
  ScenarioConfig c;
  c.mode = mode;
  c.source = doc;
  if (root.has("mode") && parse_mode(root.string("mode", "")) != mode) {
    root.fail("mode", "file is for mode '" + root.string("mode", "") + "', run as '" + mode_name(mode) + "'");
  }
  if (root.has("seed")) {
    const json& s = doc.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0)) {
      root.fail("seed", "must be a non-negative integer");
    }
    c.seed = s.get<std::uint64_t>();
  }
  c.threads = root.integer("threads", 1);
  if (c.threads < 1) root.fail("threads", "must be >= 1");
  c.out = root.string("out", c.out.string());

  {
    const Section s = root.sub("law");
    s.only({"kind", "a", "b", "growth", "slope", "tail_coeff", "level", "range_factor", "intercept", "lo", "hi",
            "file"});
    LawSpec& l = c.law;
    l.kind = s.string("kind", l.kind);
    l.a = s.number("a", l.a);
    l.b = s.number("b", l.b);
    l.growth = s.number("growth", l.growth);
    l.two_phase.slope = s.number("slope", l.two_phase.slope);
    l.two_phase.tail_coeff = s.number("tail_coeff", l.two_phase.tail_coeff);
    if (s.has("level")) l.two_phase.level = s.number("level", 0);
    l.two_phase.range_factor = s.number("range_factor", l.two_phase.range_factor);
    l.slope = l.two_phase.slope;
    l.intercept = s.number("intercept", l.intercept);
    l.lo = s.number("lo", l.lo);
    l.hi = s.number("hi", l.hi);
    l.file = s.string("file", "");
    if (l.kind == "two-phase") {
      if (!(l.a > 0 && 2 * l.a < l.b)) s.fail("b", "need 0 < 2a < b");
      if (!(l.growth > 2)) s.fail("growth", "need growth exponent > 2");
    } else if (l.kind == "affine") {
      if (!(l.lo < l.hi)) s.fail("hi", "need lo < hi");
    } else if (l.kind == "file") {
      if (l.file.empty()) s.fail("file", "required for kind = file");
    } else {
      s.fail("kind", "expected two-phase, affine or file");
    }
  }

  {
    const Section s = root.sub("params");
    s.only({"a", "b", "theta", "d", "mu", "lambda"});
    ExactSolutionParams& p = c.params;
    p.a = s.number("a", p.a);
    p.b = s.number("b", p.b);
    p.theta = s.number("theta", p.theta);
    p.d = s.integer("d", p.d);
    p.mu = s.number("mu", p.mu);
    p.lambda = s.number("lambda", p.lambda);
  }

  {
    const Section s = root.sub("pressure");
    s.only({"kind", "slope", "intercept", "tail_coeff", "tail_exponent", "floor", "range_factor", "file"});
    PressureSpec& p = c.pressure;
    p.kind = s.string("kind", p.kind);
    p.matched.slope = s.number("slope", p.matched.slope);
    p.matched.tail_coeff = s.number("tail_coeff", p.matched.tail_coeff);
    p.matched.tail_exponent = s.number("tail_exponent", p.matched.tail_exponent);
    p.matched.floor = s.number("floor", p.matched.floor);
    p.matched.range_factor = s.number("range_factor", p.matched.range_factor);
    p.slope = p.matched.slope;
    p.intercept = s.number("intercept", p.intercept);
    p.file = s.string("file", "");
    if (p.kind != "matched" && p.kind != "monotone" && p.kind != "none" && p.kind != "file") {
      s.fail("kind", "expected matched, monotone, none or file");
    }
    if (p.kind == "file" && p.file.empty()) s.fail("file", "required for kind = file");
    if (p.kind == "monotone" && !(p.slope > 0)) s.fail("slope", "monotone pressure needs slope > 0");
  }

  switch (mode) {
    case Mode::VerifyExact: {
      try {
        c.params.validate(c.params.d > 1);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("params: ") + e.what());
      }
      const Section s = root.sub("verify");
      s.only({"times", "k_max", "tests", "ball_radius", "order", "t_cells", "angle_cells", "radial_cells", "n",
              "rh_tol", "weak_tol", "young_n", "young_time", "young_cells", "young_window"});
      VerifySpec& v = c.verify;
      v.times = s.numbers("times", v.times);
      v.k_max = s.integer("k_max", v.k_max);
      v.tests = s.integer("tests", v.tests);
      v.ball_radius = s.number("ball_radius", v.ball_radius);
      v.quad.order = s.integer("order", v.quad.order);
      v.quad.t_cells = s.integer("t_cells", v.quad.t_cells);
      v.quad.angle_cells = s.integer("angle_cells", v.quad.angle_cells);
      v.quad.radial_cells = s.integer("radial_cells", v.quad.radial_cells);
      v.n = s.integer("n", v.n);
      v.rh_tol = s.number("rh_tol", v.rh_tol);
      v.weak_tol = s.number("weak_tol", v.weak_tol);
      v.young_n = s.integers("young_n", v.young_n);
      v.young_time = s.number("young_time", v.young_time);
      v.young_cells = s.integer("young_cells", v.young_cells);
      v.young_window = s.integer("young_window", v.young_window);
      if (v.times.empty()) s.fail("times", "must not be empty");
      for (double t : v.times) {
        if (t < 1 || t > 2) s.fail("times", "entries must lie in [1, 2]");
      }
      if (v.k_max < 1) s.fail("k_max", "must be >= 1");
      if (v.tests < 0) s.fail("tests", "must be >= 0");
      if (v.quad.order < 1 || v.quad.t_cells < 1 || v.quad.angle_cells < 1 || v.quad.radial_cells < 1) {
        s.fail("order", "quadrature sizes must be >= 1");
      }
      if (v.n < 1) s.fail("n", "must be >= 1");
      if (v.young_time < 1 || v.young_time > 2) s.fail("young_time", "must lie in [1, 2]");
      if (v.young_window < 1 || v.young_cells < v.young_window) s.fail("young_window", "need 1 <= window <= cells");
      for (int n : v.young_n) {
        if (n < 1) s.fail("young_n", "entries must be >= 1");
      }
      break;
    }
    case Mode::Simulate: {
      const Section s = root.sub("simulate");
      s.only({"cells", "T", "dt", "snapshots", "energy_tol", "initial", "epsilons"});
      SimulateSpec& m = c.simulate;
      m.cells = s.integer("cells", m.cells);
      m.T = s.number("T", m.T);
      if (s.has("dt")) m.dt = s.number("dt", 0);
      m.snapshots = s.integer("snapshots", m.snapshots);
      m.energy_tol = s.number("energy_tol", m.energy_tol);
      m.initial = read_initial(s.sub("initial"), m.initial);
      m.epsilons = s.epsilons("epsilons");
      check_cells(s, m.cells);
      if (!(m.T > 0)) s.fail("T", "must be > 0");
      if (m.dt && !(*m.dt > 0)) s.fail("dt", "must be > 0");
      if (m.snapshots < 1) s.fail("snapshots", "must be >= 1");
      if (m.initial.kind == "two-state") {
        if (m.epsilons.empty()) m.epsilons = {m.initial.epsilon};
        for (double e : m.epsilons) check_oscillatory_grid(s, "epsilons", m.cells, e);
      }
      break;
    }
    case Mode::Effective: {
      const Section s = root.sub("effective");
      s.only({"cells", "T", "xi_step", "cfl", "dt_factor", "snapshots", "system", "reaction", "initial",
              "compare_direct", "refinements", "direct_tol", "min_slope", "cross_tol"});
      EffectiveSpec& e = c.effective;
      e.cells = s.integer("cells", e.cells);
      e.T = s.number("T", e.T);
      e.xi_step = s.number("xi_step", e.xi_step);
      e.cfl = s.number("cfl", e.cfl);
      e.dt_factor = s.number("dt_factor", e.dt_factor);
      e.snapshots = s.integer("snapshots", e.snapshots);
      e.system = s.string("system", e.system);
      e.rule = read_rule(s);
      e.initial = read_initial(s.sub("initial"), e.initial);
      e.compare_direct = s.boolean("compare_direct", e.compare_direct);
      e.refinements = s.integer("refinements", e.refinements);
      e.direct_tol = s.number("direct_tol", e.direct_tol);
      e.min_slope = s.number("min_slope", e.min_slope);
      e.cross_tol = s.number("cross_tol", e.cross_tol);
      check_cells(s, e.cells);
      if (!(e.T > 0)) s.fail("T", "must be > 0");
      if (e.xi_step < 0) s.fail("xi_step", "must be >= 0");
      if (!(e.cfl > 0 && e.cfl <= 1)) s.fail("cfl", "must lie in (0, 1]");
      if (!(e.dt_factor > 0)) s.fail("dt_factor", "must be > 0");
      if (e.snapshots < 1) s.fail("snapshots", "must be >= 1");
      if (e.system != "effs1" && e.system != "effs2" && e.system != "both") {
        s.fail("system", "expected effs1, effs2 or both");
      }
      if (e.refinements < 0 || e.refinements > 4) s.fail("refinements", "must lie in [0, 4]");
      if (e.compare_direct && e.initial.kind != "profile") {
        s.fail("compare_direct", "needs a profile initial state (a single-valued strain)");
      }
      if (e.initial.kind == "two-state") check_oscillatory_grid(s, "initial.epsilon", e.cells, e.initial.epsilon);
      break;
    }
    case Mode::CompareHomog: {
      const Section s = root.sub("homog");
      s.only({"epsilons", "fine_cells", "effective_cells", "T", "window", "stride", "xi_step", "dt_factor",
              "u_rel_tol", "effs2", "initial"});
      HomogSpec& h = c.homog;
      h.epsilons = s.epsilons("epsilons");
      h.fine_cells = s.integer("fine_cells", h.fine_cells);
      h.effective_cells = s.integer("effective_cells", h.effective_cells);
      h.T = s.number("T", h.T);
      h.window = s.number("window", h.window);
      h.stride = s.number("stride", h.stride);
      h.xi_step = s.number("xi_step", h.xi_step);
      h.dt_factor = s.number("dt_factor", h.dt_factor);
      h.u_rel_tol = s.number("u_rel_tol", h.u_rel_tol);
      h.effs2 = s.boolean("effs2", h.effs2);
      h.initial = read_initial(s.sub("initial"), h.initial);
      if (h.initial.kind != "two-state") s.fail("initial.kind", "compare-homog needs two-state data");
      if (h.epsilons.empty()) s.fail("epsilons", "must not be empty");
      for (std::size_t i = 0; i < h.epsilons.size(); ++i) {
        check_oscillatory_grid(s, "epsilons", h.fine_cells, h.epsilons[i]);
        if (i > 0 && !(h.epsilons[i] < h.epsilons[i - 1])) {
          s.fail("epsilons", "must be listed coarse to fine (1/epsilon strictly ascending)");
        }
      }
      if (h.effective_cells < 16 || h.fine_cells % h.effective_cells != 0) {
        s.fail("effective_cells", "must be >= 16 and divide fine_cells");
      }
      if (!(h.T > 0)) s.fail("T", "must be > 0");
      if (!(h.xi_step > 0)) s.fail("xi_step", "must be > 0");
      if (!(h.dt_factor > 0)) s.fail("dt_factor", "must be > 0");
      auto cells_of = [&](double w, const char* key) {
        const double c = w * h.effective_cells;
        if (!(w > 0 && w <= 1) || std::abs(c - std::round(c)) > 1e-9) {
          s.fail(key, "must be a positive multiple of the effective cell width, at most 1");
        }
      };
      cells_of(h.window, "window");
      cells_of(h.stride, "stride");
      break;
    }
  }
  return c;
}

}  // namespace oscillax
