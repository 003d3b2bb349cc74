#pragma once
/// @file deception.hpp
/// @brief Truthful vs deceptive capture-time comparison and lattice sweeps of
/// the deception gain.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "hcg/core.hpp"
#include "hcg/sim.hpp"
#include "hcg/solution.hpp"
#include "hcg/strategy.hpp"

namespace hcg {

/// Gains above this count as advantageous deception.
inline constexpr double kAdvantageTol = 5e-3;

/// Integrator settings shared by every run of a comparison.
struct RunSettings {
  double dt = 1e-3;
  double t_max = 100.0;
  EstimatorTiming estimator_timing = EstimatorTiming::Immediate;
};

struct DeceptionReport {
  RelState initial_rel;
  double t_truthful = std::numeric_limits<double>::quiet_NaN();     // informed pursuer, truthful evader
  double t_deceptive = std::numeric_limits<double>::quiet_NaN();    // estimating pursuer, deceptive evader
  double t_alternative = std::numeric_limits<double>::quiet_NaN();  // estimating pursuer, truthful evader
  double gain = std::numeric_limits<double>::quiet_NaN();           // t_deceptive - t_truthful
  Region region_mu1;
  Region region_mu2;
  std::optional<Vec2> switch_point;
  bool complete = false;  // both main runs captured within t_max
  std::string error;      // set when the cell could not be evaluated
};

namespace detail {

inline void check_pair(double mu1, double mu2, double l) {
  validate_params(mu1, l);
  validate_params(mu2, l);
  if (mu1 < mu2) {
    std::ostringstream os;
    os.precision(9);
    os << "deception needs mu1 >= mu2 (got mu1=" << mu1 << ", mu2=" << mu2 << ")";
    throw std::invalid_argument(os.str());
  }
}

inline Scenario scenario(const GameParams& p1, const GameParams& p2, RelState s0, const RunSettings& rs) {
  Scenario sc;
  sc.params_truth = p1;
  sc.params_low = p2;
  sc.initial_rel = s0;
  sc.dt = rs.dt;
  sc.t_max = rs.t_max;
  sc.estimator_timing = rs.estimator_timing;
  return sc;
}

}  // namespace detail

/// Case 1 (informed pursuer, truthful evader at mu1) against Case 2
/// (estimating pursuer, evader at mu2 switching to mu1 on reaching B(mu1)),
/// plus the estimating-pursuer truthful baseline.
inline DeceptionReport deception_gain(double mu1, double mu2, double l, RelState s0, GeometryCache& cache,
                                      const RunSettings& rs = {}) {
  detail::check_pair(mu1, mu2, l);
  const GameParams p1{mu1, l}, p2{mu2, l};
  DeceptionReport r;
  r.initial_rel = s0;
  r.region_mu1 = cache.get(p1)->classify(s0);
  r.region_mu2 = cache.get(p2)->classify(s0);

  Scenario truthful = detail::scenario(p1, p2, s0, rs);
  truthful.evader_policy = {EvaderPolicy::Kind::Truthful, mu2, mu1};
  truthful.pursuer_mode = PursuerMode::Informed;

  Scenario deceptive = detail::scenario(p1, p2, s0, rs);
  deceptive.evader_policy = {EvaderPolicy::Kind::Deceptive, mu2, mu1};
  deceptive.pursuer_mode = PursuerMode::Estimating;

  Scenario alternative = truthful;
  alternative.pursuer_mode = PursuerMode::Estimating;

  const auto a = run_closed_loop(truthful, cache);
  const auto b = run_closed_loop(deceptive, cache);
  const auto c = run_closed_loop(alternative, cache);
  if (a.capture_time) r.t_truthful = *a.capture_time;
  if (b.capture_time) r.t_deceptive = *b.capture_time;
  if (c.capture_time) r.t_alternative = *c.capture_time;
  r.switch_point = b.switch_point;
  r.complete = a.capture_time && b.capture_time;
  if (r.complete) r.gain = r.t_deceptive - r.t_truthful;
  return r;
}

struct SweepWindow {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;
};

inline bool operator==(const SweepWindow& a, const SweepWindow& b) {
  return a.x_min == b.x_min && a.x_max == b.x_max && a.y_min == b.y_min && a.y_max == b.y_max;
}

/// Bounding box of both barriers and their mirror images, grown by one turn
/// radius.
inline SweepWindow default_window(const Geometry& g1, const Geometry& g2) {
  SweepWindow w{0.0, 0.0, std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const Geometry* g : {&g1, &g2}) {
    for (const auto& c : g->barrier().points) {
      w.x_max = std::max(w.x_max, std::abs(c.s.x));
      w.y_min = std::min(w.y_min, c.s.y);
      w.y_max = std::max(w.y_max, c.s.y);
    }
  }
  w.x_min = -w.x_max - 1.0;
  w.x_max += 1.0;
  w.y_min -= 1.0;
  w.y_max += 1.0;
  return w;
}

/// Cell filter on the (mu1, mu2) region pair, e.g. T(mu1) and T(mu2) only.
using RegionFilter = std::function<bool(const Region& mu1, const Region& mu2)>;

struct SweepSpec {
  double mu1 = 0.0;
  double mu2 = 0.0;
  double l = 0.0;
  std::optional<SweepWindow> window;  // default_window() when unset
  double spacing = 0.1;
  RunSettings run;
  unsigned workers = 0;  // 0: HCG_WORKERS or hardware threads
  RegionFilter filter;   // empty: every cell outside the capture circle
};

struct AdvantageMap {
  SweepWindow window;
  double spacing = 0.0;
  size_t nx = 0;
  size_t ny = 0;
  std::vector<DeceptionReport> cells;  // row-major in (iy, ix), skipped cells omitted

  double max_gain() const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& c : cells)
      if (c.complete) m = std::max(m, c.gain);
    return m;
  }
  size_t advantageous() const {
    return static_cast<size_t>(
        std::count_if(cells.begin(), cells.end(), [](const auto& c) { return c.complete && c.gain > kAdvantageTol; }));
  }
  size_t failures() const {
    return static_cast<size_t>(
        std::count_if(cells.begin(), cells.end(), [](const auto& c) { return !c.complete || !c.error.empty(); }));
  }
};

/// Worker count: HCG_WORKERS if set to a positive integer, else `requested`
/// if positive, else the hardware thread count.
inline unsigned resolve_workers(unsigned requested) {
  if (const char* env = std::getenv("HCG_WORKERS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Lattice points x_min + i*spacing (inclusive of the upper edge within
/// round-off).
inline size_t lattice_count(double lo, double hi, double spacing) {
  return static_cast<size_t>(std::floor((hi - lo) / spacing + 1e-9)) + 1;
}

/// Evaluates deception_gain over the lattice in parallel. Results are stored
/// by lattice index, so the output does not depend on scheduling. A cell
/// whose evaluation throws is kept with its error message.
inline AdvantageMap sweep(const SweepSpec& spec, GeometryCache& cache) {
  detail::check_pair(spec.mu1, spec.mu2, spec.l);
  if (!(spec.spacing > 0.0)) throw std::invalid_argument("sweep spacing must be > 0");
  const auto g1 = cache.get({spec.mu1, spec.l});
  const auto g2 = cache.get({spec.mu2, spec.l});

  AdvantageMap map;
  map.window = spec.window ? *spec.window : default_window(*g1, *g2);
  map.spacing = spec.spacing;
  const auto& w = map.window;
  if (!(w.x_max >= w.x_min && w.y_max >= w.y_min)) throw std::invalid_argument("sweep window has max < min");
  map.nx = lattice_count(w.x_min, w.x_max, spec.spacing);
  map.ny = lattice_count(w.y_min, w.y_max, spec.spacing);

  std::vector<RelState> pts;
  for (size_t iy = 0; iy < map.ny; ++iy) {
    for (size_t ix = 0; ix < map.nx; ++ix) {
      const RelState q{w.x_min + static_cast<double>(ix) * spec.spacing,
                       w.y_min + static_cast<double>(iy) * spec.spacing};
      if (norm(q) <= spec.l) continue;
      if (spec.filter && !spec.filter(g1->classify(q), g2->classify(q))) continue;
      pts.push_back(q);
    }
  }

  map.cells.resize(pts.size());
  std::atomic<size_t> next{0};
  auto work = [&] {
    for (size_t i; (i = next.fetch_add(1)) < pts.size();) {
      try {
        map.cells[i] = deception_gain(spec.mu1, spec.mu2, spec.l, pts[i], cache, spec.run);
      } catch (const std::exception& e) {
        DeceptionReport r;
        r.initial_rel = pts[i];
        r.error = e.what();
        map.cells[i] = r;
      }
    }
  };
  const unsigned n = std::min<unsigned>(resolve_workers(spec.workers), static_cast<unsigned>(std::max<size_t>(1, pts.size())));
  std::vector<std::thread> pool;
  for (unsigned k = 1; k < n; ++k) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  return map;
}

/// x0,y0,region_mu1,region_mu2,t_truthful,t_deceptive,gain,switch_x,switch_y
inline void write_advantage_csv(std::ostream& os, const AdvantageMap& map) {
  const auto prec = os.precision(9);
  os << "x0,y0,region_mu1,region_mu2,t_truthful,t_deceptive,gain,switch_x,switch_y\n";
  for (const auto& c : map.cells) {
    os << c.initial_rel.x << ',' << c.initial_rel.y << ',' << label(c.region_mu1) << ',' << label(c.region_mu2) << ','
       << c.t_truthful << ',' << c.t_deceptive << ',' << c.gain << ',';
    if (c.switch_point) os << c.switch_point->x << ',' << c.switch_point->y;
    else os << ',';
    os << '\n';
  }
  os.precision(prec);
}

}  // namespace hcg
