#pragma once
/// @file cli.hpp
/// @brief Run configuration: an INI-style document with [game], [initial],
/// [integrator], [sweep] and [output] sections, its parser and writer, and
/// the command executor behind the `hcg` tool.

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "hcg/core.hpp"
#include "hcg/deception.hpp"
#include "hcg/sim.hpp"
#include "hcg/solution.hpp"
#include "hcg/strategy.hpp"

namespace hcg {

enum class Command { Geometry, Classify, Simulate, Sweep };

inline const char* to_string(Command c) {
  switch (c) {
    case Command::Geometry: return "geometry";
    case Command::Classify: return "classify";
    case Command::Simulate: return "simulate";
    case Command::Sweep: return "sweep";
  }
  return "?";
}

/// Exit statuses of the tool.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitNumerical = 3, kExitNoCapture = 4 };

/// A configuration problem, with the 1-based line (0 when the problem is not
/// tied to one line, e.g. a missing key) and the key involved.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, std::string key, const std::string& msg, const std::string& path = "")
      : std::runtime_error(format(line, key, msg, path)), line_(line), key_(std::move(key)), msg_(msg) {}
  int line() const { return line_; }
  const std::string& key() const { return key_; }
  /// The diagnostic without location.
  const std::string& message() const { return msg_; }

 private:
  static std::string format(int line, const std::string& key, const std::string& msg, const std::string& path) {
    std::ostringstream os;
    if (!path.empty()) os << path << ": ";
    if (line > 0) os << "line " << line << ": ";
    if (!key.empty()) os << "key '" << key << "': ";
    os << msg;
    return os.str();
  }
  int line_;
  std::string key_;
  std::string msg_;
};

struct RunConfig {
  std::optional<Command> command;

  // [game]
  double mu1 = 0.0;
  double mu2 = 0.0;
  double l = 0.0;
  PursuerMode pursuer = PursuerMode::Informed;
  EvaderPolicy::Kind evader = EvaderPolicy::Kind::Truthful;
  EvaderPolicy::Trigger trigger = EvaderPolicy::Trigger::BarrierCrossing;
  double switch_time = 0.0;

  // [initial]
  std::optional<RelState> initial;

  // [integrator]
  double dt = 1e-3;
  double t_max = 100.0;
  double d_tau = 1e-3;
  int n_phi = 200;
  EstimatorTiming estimator = EstimatorTiming::Immediate;
  EquivocalBranch equivocal = EquivocalBranch::Depart;

  // [sweep]
  std::optional<SweepWindow> window;
  double spacing = 0.1;
  unsigned workers = 0;

  // [output]
  std::string dir = ".";
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

/// Shortest text that parses back to the same double.
inline std::string fmt_exact(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

struct Entry {
  std::string value;
  int line = 0;
};

using Document = std::map<std::string, std::map<std::string, Entry>>;

inline const std::map<std::string, std::vector<std::string>>& schema() {
  static const std::map<std::string, std::vector<std::string>> s{
      {"", {"command"}},
      {"game", {"mu1", "mu2", "l", "pursuer", "evader", "trigger", "switch_time"}},
      {"initial", {"x0", "y0"}},
      {"integrator", {"dt", "t_max", "d_tau", "n_phi", "estimator", "equivocal"}},
      {"sweep", {"x_min", "x_max", "y_min", "y_max", "spacing", "workers"}},
      {"output", {"dir"}},
  };
  return s;
}

inline Document tokenize(const std::string& text) {
  Document doc;
  std::istringstream in(text);
  std::string raw, section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (line == 1 && raw.size() >= 3 && raw.compare(0, 3, "\xEF\xBB\xBF") == 0) raw.erase(0, 3);
    // '#' or ';' starts a comment at line start or after whitespace.
    for (size_t i = 0; i < raw.size(); ++i) {
      if ((raw[i] == '#' || raw[i] == ';') && (i == 0 || std::isspace(static_cast<unsigned char>(raw[i - 1])))) {
        raw.erase(i);
        break;
      }
    }
    const std::string s = trim(raw);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(line, "", "unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      if (!schema().count(section) || section.empty()) throw ConfigError(line, "", "unknown section [" + section + "]");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(line, "", "expected 'key = value'");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) throw ConfigError(line, "", "missing key before '='");
    const auto& allowed = schema().at(section);
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(line, key,
                        section.empty() ? "unknown key outside any section" : "unknown key in [" + section + "]");
    }
    auto& sec = doc[section];
    if (auto it = sec.find(key); it != sec.end()) {
      throw ConfigError(line, key, "duplicate key (first set on line " + std::to_string(it->second.line) + ")");
    }
    if (value.empty()) throw ConfigError(line, key, "empty value");
    sec[key] = {value, line};
  }
  return doc;
}

inline const Entry* lookup(const Document& d, const std::string& sec, const std::string& key) {
  auto s = d.find(sec);
  if (s == d.end()) return nullptr;
  auto k = s->second.find(key);
  return k == s->second.end() ? nullptr : &k->second;
}

inline double to_double(const Entry& e, const std::string& key) {
  const char* b = e.value.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(b, &end);
  if (end == b || *end != '\0' || errno == ERANGE || !std::isfinite(v))
    throw ConfigError(e.line, key, "not a finite number: '" + e.value + "'");
  return v;
}

inline long to_long(const Entry& e, const std::string& key) {
  long v = 0;
  const auto* b = e.value.data();
  const auto r = std::from_chars(b, b + e.value.size(), v);
  if (r.ec != std::errc() || r.ptr != b + e.value.size())
    throw ConfigError(e.line, key, "not an integer: '" + e.value + "'");
  return v;
}

template <class T>
T to_enum(const Entry& e, const std::string& key, std::initializer_list<std::pair<const char*, T>> names) {
  std::string options;
  for (const auto& [n, v] : names) {
    if (e.value == n) return v;
    options += options.empty() ? n : std::string(", ") + n;
  }
  throw ConfigError(e.line, key, "expected one of " + options + ", got '" + e.value + "'");
}

}  // namespace detail

/// Parses and validates a configuration. Every parameter set it names
/// passes validate_params before this returns.
inline RunConfig parse_config(const std::string& text) {
  using namespace detail;
  const Document doc = tokenize(text);
  RunConfig c;
  auto get = [&](const char* sec, const char* key) { return lookup(doc, sec, key); };
  auto need = [&](const char* sec, const char* key) -> const Entry& {
    if (auto e = get(sec, key)) return *e;
    throw ConfigError(0, key, std::string("missing required key in [") + sec + "]");
  };

  if (auto e = get("", "command"))
    c.command = to_enum<Command>(*e, "command", {{"geometry", Command::Geometry},
                                                 {"classify", Command::Classify},
                                                 {"simulate", Command::Simulate},
                                                 {"sweep", Command::Sweep}});

  const Entry& emu1 = need("game", "mu1");
  const Entry& el = need("game", "l");
  c.mu1 = to_double(emu1, "mu1");
  c.l = to_double(el, "l");
  const Entry* emu2 = get("game", "mu2");
  c.mu2 = emu2 ? to_double(*emu2, "mu2") : c.mu1;
  try {
    validate_params(c.mu1, c.l);
  } catch (const InvalidParams& ex) {
    throw ConfigError(ex.which() == ParamInvariant::NonPositiveRadius ? el.line : emu1.line,
                      ex.which() == ParamInvariant::NonPositiveRadius ? "l" : "mu1", ex.what());
  }
  try {
    validate_params(c.mu2, c.l);
  } catch (const InvalidParams& ex) {
    throw ConfigError(emu2 ? emu2->line : 0, "mu2", ex.what());
  }
  if (c.mu1 < c.mu2) {
    std::ostringstream os;
    os.precision(9);
    os << "mu1 (" << c.mu1 << ") must not be below mu2 (" << c.mu2 << "): mu1 is the true bound, mu2 the slow speed";
    throw ConfigError(emu2 ? emu2->line : 0, "mu2", os.str());
  }
  if (auto e = get("game", "pursuer"))
    c.pursuer = to_enum<PursuerMode>(*e, "pursuer", {{"informed", PursuerMode::Informed},
                                                     {"estimating", PursuerMode::Estimating}});
  if (auto e = get("game", "evader"))
    c.evader = to_enum<EvaderPolicy::Kind>(*e, "evader", {{"truthful", EvaderPolicy::Kind::Truthful},
                                                          {"deceptive", EvaderPolicy::Kind::Deceptive}});
  if (auto e = get("game", "trigger"))
    c.trigger = to_enum<EvaderPolicy::Trigger>(*e, "trigger", {{"barrier", EvaderPolicy::Trigger::BarrierCrossing},
                                                               {"time", EvaderPolicy::Trigger::Time}});
  if (auto e = get("game", "switch_time")) {
    c.switch_time = to_double(*e, "switch_time");
    if (c.switch_time < 0.0) throw ConfigError(e->line, "switch_time", "must be >= 0");
  }
  if (c.trigger == EvaderPolicy::Trigger::Time && !get("game", "switch_time"))
    throw ConfigError(get("game", "trigger")->line, "switch_time", "trigger = time needs switch_time");

  const Entry* ex0 = get("initial", "x0");
  const Entry* ey0 = get("initial", "y0");
  if (ex0 || ey0) {
    if (!ex0) throw ConfigError(ey0->line, "x0", "y0 given without x0");
    if (!ey0) throw ConfigError(ex0->line, "y0", "x0 given without y0");
    c.initial = RelState{to_double(*ex0, "x0"), to_double(*ey0, "y0")};
  }

  auto positive = [&](const char* key, double& out) {
    if (auto e = get("integrator", key)) {
      out = to_double(*e, key);
      if (!(out > 0.0)) throw ConfigError(e->line, key, "must be > 0");
    }
  };
  positive("dt", c.dt);
  positive("t_max", c.t_max);
  positive("d_tau", c.d_tau);
  if (auto e = get("integrator", "d_tau"); e && !(c.d_tau < 0.01))
    throw ConfigError(e->line, "d_tau", "must be < 0.01");
  if (auto e = get("integrator", "n_phi")) {
    const long n = to_long(*e, "n_phi");
    if (n < 2 || n > 100000) throw ConfigError(e->line, "n_phi", "must lie in [2, 100000]");
    c.n_phi = static_cast<int>(n);
  }
  if (auto e = get("integrator", "estimator"))
    c.estimator = to_enum<EstimatorTiming>(*e, "estimator", {{"immediate", EstimatorTiming::Immediate},
                                                             {"lag", EstimatorTiming::OneStepLag}});
  if (auto e = get("integrator", "equivocal"))
    c.equivocal = to_enum<EquivocalBranch>(*e, "equivocal", {{"depart", EquivocalBranch::Depart},
                                                             {"stay", EquivocalBranch::Stay}});

  const char* wkeys[] = {"x_min", "x_max", "y_min", "y_max"};
  int nw = 0;
  for (auto k : wkeys) nw += get("sweep", k) != nullptr;
  if (nw != 0 && nw != 4) {
    for (auto k : wkeys)
      if (!get("sweep", k)) throw ConfigError(0, k, "sweep window needs all of x_min, x_max, y_min, y_max");
  }
  if (nw == 4) {
    SweepWindow w{to_double(*get("sweep", "x_min"), "x_min"), to_double(*get("sweep", "x_max"), "x_max"),
                  to_double(*get("sweep", "y_min"), "y_min"), to_double(*get("sweep", "y_max"), "y_max")};
    if (!(w.x_max >= w.x_min)) throw ConfigError(get("sweep", "x_max")->line, "x_max", "must be >= x_min");
    if (!(w.y_max >= w.y_min)) throw ConfigError(get("sweep", "y_max")->line, "y_max", "must be >= y_min");
    c.window = w;
  }
  if (auto e = get("sweep", "spacing")) {
    c.spacing = to_double(*e, "spacing");
    if (!(c.spacing > 0.0)) throw ConfigError(e->line, "spacing", "must be > 0");
  }
  if (auto e = get("sweep", "workers")) {
    const long n = to_long(*e, "workers");
    if (n < 0 || n > 4096) throw ConfigError(e->line, "workers", "must lie in [0, 4096]");
    c.workers = static_cast<unsigned>(n);
  }
  if (auto e = get("output", "dir")) c.dir = e->value;
  return c;
}

/// Writes every key explicitly; parse_config(serialize_config(c)) == c.
inline std::string serialize_config(const RunConfig& c) {
  using detail::fmt_exact;
  std::ostringstream os;
  if (c.command) os << "command = " << to_string(*c.command) << "\n\n";
  os << "[game]\n"
     << "mu1 = " << fmt_exact(c.mu1) << "\n"
     << "mu2 = " << fmt_exact(c.mu2) << "\n"
     << "l = " << fmt_exact(c.l) << "\n"
     << "pursuer = " << (c.pursuer == PursuerMode::Informed ? "informed" : "estimating") << "\n"
     << "evader = " << (c.evader == EvaderPolicy::Kind::Truthful ? "truthful" : "deceptive") << "\n"
     << "trigger = " << (c.trigger == EvaderPolicy::Trigger::BarrierCrossing ? "barrier" : "time") << "\n";
  if (c.trigger == EvaderPolicy::Trigger::Time || c.switch_time != 0.0)
    os << "switch_time = " << fmt_exact(c.switch_time) << "\n";
  if (c.initial) os << "\n[initial]\nx0 = " << fmt_exact(c.initial->x) << "\ny0 = " << fmt_exact(c.initial->y) << "\n";
  os << "\n[integrator]\n"
     << "dt = " << fmt_exact(c.dt) << "\n"
     << "t_max = " << fmt_exact(c.t_max) << "\n"
     << "d_tau = " << fmt_exact(c.d_tau) << "\n"
     << "n_phi = " << c.n_phi << "\n"
     << "estimator = " << (c.estimator == EstimatorTiming::Immediate ? "immediate" : "lag") << "\n"
     << "equivocal = " << (c.equivocal == EquivocalBranch::Depart ? "depart" : "stay") << "\n";
  os << "\n[sweep]\n";
  if (c.window) {
    os << "x_min = " << fmt_exact(c.window->x_min) << "\n"
       << "x_max = " << fmt_exact(c.window->x_max) << "\n"
       << "y_min = " << fmt_exact(c.window->y_min) << "\n"
       << "y_max = " << fmt_exact(c.window->y_max) << "\n";
  }
  os << "spacing = " << fmt_exact(c.spacing) << "\n"
     << "workers = " << c.workers << "\n";
  os << "\n[output]\ndir = " << c.dir << "\n";
  return os.str();
}

inline bool operator==(const RunConfig& a, const RunConfig& b) {
  return a.command == b.command && a.mu1 == b.mu1 && a.mu2 == b.mu2 && a.l == b.l && a.pursuer == b.pursuer &&
         a.evader == b.evader && a.trigger == b.trigger && a.switch_time == b.switch_time &&
         a.initial.has_value() == b.initial.has_value() && (!a.initial || *a.initial == *b.initial) &&
         a.dt == b.dt && a.t_max == b.t_max && a.d_tau == b.d_tau && a.n_phi == b.n_phi &&
         a.estimator == b.estimator && a.equivocal == b.equivocal && a.window == b.window &&
         a.spacing == b.spacing && a.workers == b.workers && a.dir == b.dir;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(e.line(), e.key(), e.message(), path);
  }
}

inline GeometryOptions geometry_options(const RunConfig& c) {
  GeometryOptions o;
  o.d_tau = c.d_tau;
  o.n_phi = c.n_phi;
  return o;
}

inline Scenario make_scenario(const RunConfig& c) {
  if (!c.initial) throw ConfigError(0, "x0", "this command needs [initial] x0 and y0");
  Scenario sc;
  sc.params_truth = {c.mu1, c.l};
  sc.params_low = {c.mu2, c.l};
  sc.initial_rel = *c.initial;
  sc.evader_policy.kind = c.evader;
  sc.evader_policy.mu_low = c.mu2;
  sc.evader_policy.mu_high = c.mu1;
  sc.evader_policy.trigger = c.trigger;
  sc.evader_policy.switch_time = c.switch_time;
  sc.pursuer_mode = c.pursuer;
  sc.dt = c.dt;
  sc.t_max = c.t_max;
  sc.equivocal_branch = c.equivocal;
  sc.estimator_timing = c.estimator;
  return sc;
}

namespace detail {

inline std::ofstream open_output(const std::string& dir, const std::string& name, std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
  path = (std::filesystem::path(dir) / name).string();
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  return f;
}

inline void close_output(std::ofstream& f, const std::string& path) {
  f.close();
  if (!f) throw std::runtime_error("error while writing '" + path + "'");
}

}  // namespace detail

/// Runs the configured command. Results go to files under c.dir, a one-line
/// summary to `out`, diagnostics to `err`. Returns an ExitCode.
inline int execute(const RunConfig& c, std::ostream& out, std::ostream& err) {
  if (!c.command) {
    err << "no command given (set 'command' or pass a subcommand)\n";
    return kExitConfig;
  }
  const auto prec = out.precision(9);
  try {
    GeometryCache cache(geometry_options(c));
    switch (*c.command) {
      case Command::Geometry: {
        std::vector<double> mus{c.mu1};
        if (c.mu2 != c.mu1) mus.push_back(c.mu2);
        for (size_t i = 0; i < mus.size(); ++i) {
          const auto g = cache.get({mus[i], c.l});
          std::string path;
          auto f = detail::open_output(c.dir, i == 0 ? "curves_mu1.csv" : "curves_mu2.csv", path);
          write_curves_csv(f, *g);
          detail::close_output(f, path);
          out << "mu=" << mus[i] << " l=" << c.l << " bup=(" << g->bup().x << "," << g->bup().y << ") barrier_end=("
              << g->barrier_end().x << "," << g->barrier_end().y << ") ybar=" << g->ybar() << " file=" << path << "\n";
        }
        break;
      }
      case Command::Classify: {
        if (!c.initial) throw ConfigError(0, "x0", "classify needs [initial] x0 and y0");
        out << label(cache.get({c.mu1, c.l})->classify(*c.initial)) << "\n";
        break;
      }
      case Command::Simulate: {
        const Scenario sc = make_scenario(c);
        const Trajectory tr = run_closed_loop(sc, cache);
        std::string path;
        auto f = detail::open_output(c.dir, "trajectory.csv", path);
        write_trajectory_csv(f, tr);
        detail::close_output(f, path);
        if (tr.capture_time) out << "capture_time=" << *tr.capture_time;
        else out << "no_capture t_max=" << sc.t_max;
        out << " switches=" << tr.count(EventKind::Switch);
        if (tr.switch_time)
          out << " switch_time=" << *tr.switch_time << " switch_at=(" << tr.switch_point->x << ","
              << tr.switch_point->y << ")";
        out << " barrier_crossings=" << tr.count(EventKind::BarrierCross)
            << " axis_crossings=" << tr.count(EventKind::AxisCross) << " file=" << path << "\n";
        if (!tr.capture_time) {
          err << "no capture within t_max=" << sc.t_max << "\n";
          out.precision(prec);
          return kExitNoCapture;
        }
        break;
      }
      case Command::Sweep: {
        SweepSpec spec;
        spec.mu1 = c.mu1;
        spec.mu2 = c.mu2;
        spec.l = c.l;
        spec.window = c.window;
        spec.spacing = c.spacing;
        spec.run = {c.dt, c.t_max, c.estimator};
        spec.workers = c.workers;
        const AdvantageMap map = sweep(spec, cache);
        std::string path;
        auto f = detail::open_output(c.dir, "advantage.csv", path);
        write_advantage_csv(f, map);
        detail::close_output(f, path);
        size_t errors = 0, incomplete = 0;
        for (const auto& cell : map.cells) {
          if (!cell.error.empty()) {
            ++errors;
            err << "cell (" << cell.initial_rel.x << "," << cell.initial_rel.y << "): " << cell.error << "\n";
          } else if (!cell.complete) {
            ++incomplete;
          }
        }
        out << "cells=" << map.cells.size() << " max_gain=" << map.max_gain()
            << " advantageous=" << map.advantageous() << " failed=" << errors << " no_capture=" << incomplete
            << " file=" << path << "\n";
        out.precision(prec);
        if (errors) return kExitNumerical;
        if (incomplete) return kExitNoCapture;
        return kExitOk;
      }
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    out.precision(prec);
    return kExitConfig;
  } catch (const InvalidParams& e) {
    err << "config error: " << e.what() << "\n";
    out.precision(prec);
    return kExitConfig;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    out.precision(prec);
    return kExitNumerical;
  } catch (const PreconditionError& e) {
    err << "numerical failure: " << e.what() << "\n";
    out.precision(prec);
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    out.precision(prec);
    return kExitFailure;
  }
  out.precision(prec);
  return kExitOk;
}

}  // namespace hcg
