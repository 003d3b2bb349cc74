#pragma once
/// @file sim.hpp
/// @brief Fixed-step closed-loop play in the relative frame with event
/// detection and trajectory logging.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "hcg/core.hpp"
#include "hcg/solution.hpp"
#include "hcg/strategy.hpp"

namespace hcg {

/// Geometries keyed by GameParams, built on first use. Thread safe.
class GeometryCache {
 public:
  explicit GeometryCache(GeometryOptions o = {}) : o_(o) {}

  std::shared_ptr<const Geometry> get(const GameParams& p) {
    std::lock_guard<std::mutex> lk(m_);
    for (auto& [k, g] : items_)
      if (k == p) return g;
    auto g = Geometry::build(p, o_);
    items_.emplace_back(p, g);
    return g;
  }

  const GeometryOptions& options() const { return o_; }

 private:
  GeometryOptions o_;
  std::mutex m_;
  std::vector<std::pair<GameParams, std::shared_ptr<const Geometry>>> items_;
};

enum class PursuerMode { Informed, Estimating };

/// What the evader does on reaching the equivocal curve, where both options
/// cost the same. Depart leaves along the tributary (pursuer +1, evader
/// t_UL). Stay rides the curve toward the barrier endpoint (pursuer's
/// curve-sustaining control, evader pure pursuit) and continues in the
/// tributary region from there.
enum class EquivocalBranch { Depart, Stay };

/// When an estimating pursuer sees the evader's speed. Immediate: the
/// commanded speed is observed as it is applied, so a mid-step switch moves
/// the pursuer to the other geometry at that instant. OneStepLag: the speed
/// is the world-frame displacement of the evader over the previous step
/// divided by dt, read at the start of each step, and the deceptive switch
/// is taken at samples only.
enum class EstimatorTiming { Immediate, OneStepLag };

struct Scenario {
  GameParams params_truth;  // mu = true bound mu1
  GameParams params_low;    // mu = mu2
  RelState initial_rel;
  EvaderPolicy evader_policy;
  PursuerMode pursuer_mode = PursuerMode::Informed;
  double dt = 1e-3;
  double t_max = 100.0;
  EquivocalBranch equivocal_branch = EquivocalBranch::Depart;
  EstimatorTiming estimator_timing = EstimatorTiming::Immediate;
};

enum class EventKind : uint8_t { Capture = 1, BarrierCross = 2, Switch = 4, AxisCross = 8 };

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::Capture: return "capture";
    case EventKind::BarrierCross: return "barrier_cross";
    case EventKind::Switch: return "switch";
    case EventKind::AxisCross: return "axis_cross";
  }
  return "?";
}

struct Event {
  double t = 0.0;
  EventKind kind = EventKind::Capture;
  Vec2 loc;
};

struct Sample {
  double t = 0.0;
  RelState s;
  Controls c;
  double mu_hat = 0.0;
  Region region;
  uint8_t events = 0;  // EventKind bits for events since the previous sample
};

struct Trajectory {
  std::vector<Sample> samples;
  std::vector<Event> events;
  std::optional<double> capture_time;
  std::optional<Vec2> switch_point;
  std::optional<double> switch_time;
  size_t control_switches = 0;  // in-step regime changes resolved by bisection

  size_t count(EventKind k) const {
    size_t n = 0;
    for (const auto& e : events) n += e.kind == k;
    return n;
  }
  std::optional<Event> first(EventKind k) const {
    for (const auto& e : events)
      if (e.kind == k) return e;
    return std::nullopt;
  }
};

/// One RK4 step of the relative dynamics with controls held.
inline RelState step(RelState s, const Controls& c, double dt) {
  return rk4_step([&](double, Vec2 q) { return rel_dynamics(q, c); }, 0.0, s, dt);
}

/// One RK4 step with the pursuer's turn rate and the evader's world heading
/// held: the relative heading turns at -u. Equilibrium evaders move in
/// straight lines, so this hold is exact for them.
inline RelState step_held(RelState s, const Controls& c, double dt) {
  return rk4_step(
      [&](double t, Vec2 q) {
        return rel_dynamics(q, {c.u, c.psi - c.u * t, c.mu_cmd});
      },
      0.0, s, dt);
}

/// Capture, B(mu1) crossing and y-axis arrival between two states, located by
/// linear interpolation along the chord.
inline std::vector<Event> detect_events(double t0, RelState a, double t1, RelState b, const Geometry& truth) {
  std::vector<Event> ev;
  const double l = truth.params().l;
  const double ra = norm(a), rb = norm(b);
  const double db = truth.options().dead_band;
  if (std::abs(a.x) > db && (std::abs(b.x) <= db || a.x * b.x < 0.0)) {
    const double f = std::clamp(a.x / (a.x - b.x), 0.0, 1.0);
    ev.push_back({t0 + f * (t1 - t0), EventKind::AxisCross, lerp(a, b, f)});
  }
  if (auto f = truth.barrier_crossing(a, b)) ev.push_back({t0 + *f * (t1 - t0), EventKind::BarrierCross, lerp(a, b, *f)});
  if (ra > l && rb <= l) {
    const double f = (ra - l) / (ra - rb);
    ev.push_back({t0 + f * (t1 - t0), EventKind::Capture, lerp(a, b, f)});
  }
  std::sort(ev.begin(), ev.end(), [](const Event& x, const Event& y) { return x.t < y.t; });
  return ev;
}

/// True while q is on the equivocal curve short of its barrier-end terminus,
/// within `tol` (a ride tolerance, looser than the classification dead-band).
inline bool riding_equivocal(const Geometry& g, RelState q, double tol = 1e-4) {
  const auto n = g.equivocal_line().nearest({std::abs(q.x), q.y}, tol);
  return n.dist <= tol && !(n.seg == 0 && n.t <= 0.0);
}

/// Foot of the perpendicular from q onto the equivocal curve, on q's side of
/// the y-axis.
inline RelState project_on_equivocal(const Geometry& g, RelState q) {
  const auto& line = g.equivocal_line();
  const auto n = line.nearest({std::abs(q.x), q.y});
  const auto& pts = line.points();
  const Vec2 f = lerp(pts[n.seg], pts[std::min(n.seg + 1, pts.size() - 1)], n.t);
  return {q.x < 0.0 ? -f.x : f.x, f.y};
}

/// Region whose feedback law is actually played at a point. On the equivocal
/// curve the evader's indifference is resolved by `riding`, the latch of the
/// Stay branch: while set, the sliding law is kept as long as the state stays
/// on the curve, so round-off cannot bounce it between the two sides.
/// Otherwise the curve is left along the tributary.
inline Region played_region(const Geometry& g, RelState s, bool riding) {
  Region r = g.classify(s);
  if (riding && r.tag != RegionTag::Captured && riding_equivocal(g, s)) {
    r.tag = RegionTag::Equivocal;
    return r;
  }
  if (r.tag == RegionTag::Equivocal) r.tag = RegionTag::Tributary;
  if (r.tag == RegionTag::Dispersal) r = {RegionTag::Tributary, false, false};
  return r;
}

/// Closed-loop run: estimator update -> pursuer feedback (on mu_hat or mu1)
/// -> evader policy -> step -> events, until capture or t_max.
///
/// The pursuer's turn rate and the evader's world heading are held over a
/// step (step_held), except for two things resolved inside the step instead
/// of at the next sample. When the state leaves the
/// region whose law produced the controls, the crossing is located by
/// bisection and the rest of the step is played under the new law. The
/// deceptive evader's switch is placed at the last instant before its
/// tentative slow step reaches B(mu1), or at the explicit switch time. Under
/// EstimatorTiming::OneStepLag both the switch and the pursuer's reaction
/// happen at samples instead.
inline Trajectory run_closed_loop(const Scenario& sc, GeometryCache& cache) {
  if (!(sc.dt > 0.0) || !(sc.t_max > 0.0)) throw std::invalid_argument("scenario needs dt > 0 and t_max > 0");
  if (norm(sc.initial_rel) <= sc.params_truth.l) throw std::invalid_argument("initial point inside the capture circle");
  const auto g1p = cache.get(sc.params_truth);
  const auto g2p = cache.get(sc.params_low);
  const Geometry& g1 = *g1p;
  const Geometry& g2 = *g2p;
  const bool informed = sc.pursuer_mode == PursuerMode::Informed;
  const EquivocalBranch branch = sc.equivocal_branch;
  const double dt = sc.dt;
  constexpr int kMaxSwitches = 6;
  constexpr int kBisect = 34;

  EvaderPolicy pol = sc.evader_policy;
  pol.switched = false;
  // With equal speeds the switch is a no-op and the run is the truthful one.
  const bool deceptive = pol.kind == EvaderPolicy::Kind::Deceptive && pol.mu_low < pol.mu_high;
  SpeedEstimate est;
  const Geometry* gp = &g1;
  double mu_hat = sc.params_truth.mu;
  const bool lag = sc.estimator_timing == EstimatorTiming::OneStepLag;
  auto observe = [&](double speed) {
    if (informed) return;
    est = estimator_update(est, std::min(speed, 0.999999999));
    mu_hat = est.mu_hat;
    gp = std::abs(mu_hat - g2.params().mu) <= std::abs(mu_hat - g1.params().mu) ? &g2 : &g1;
  };
  observe(pol.current_speed());  // the speed in use at t = 0
  RelState s = sc.initial_rel;
  Pose P{};  // pursuer world pose, for the differenced observation
  Vec2 Ew = to_global(s, P);
  bool riding = false;
  auto update_riding = [&](RelState q, const Geometry& g) {
    if (branch != EquivocalBranch::Stay) return;
    riding = (riding || g.classify(q).tag == RegionTag::Equivocal) && riding_equivocal(g, q);
  };

  Trajectory tr;
  uint8_t pending = 0;
  auto fire = [&](double at, RelState where) {
    pol.switched = true;
    if (!lag) observe(pol.current_speed());
    tr.events.push_back({at, EventKind::Switch, where});
    tr.switch_point = where;
    tr.switch_time = at;
    pending |= static_cast<uint8_t>(EventKind::Switch);
  };
  const long nmax = static_cast<long>(std::ceil(sc.t_max / dt - 1e-9));

  for (long k = 0;; ++k) {
    const double t = static_cast<double>(k) * dt;
    update_riding(s, *gp);
    const double u0 = pursuer_feedback(*gp, s, played_region(*gp, s, riding));

    // Offset into this step at which the deceptive evader switches, if it does.
    std::optional<double> switch_in;
    if (deceptive && !pol.switched) {
      if (pol.trigger == EvaderPolicy::Trigger::Time) {
        if (lag ? pol.switch_time <= t : pol.switch_time < t + dt) switch_in = std::max(0.0, pol.switch_time - t);
      } else {
        const Controls slow{u0, evader_feedback(g2, s, played_region(g2, s, false)), pol.mu_low};
        if (lag) {
          // The pursuer reacts one sample late, so look two slow steps ahead:
          // the fast step played against the stale law must not reach B(mu1).
          const RelState s1 = step_held(s, slow, dt);
          if (g1.barrier_crossing(s, s1) || g1.barrier_crossing(s1, step_held(s1, slow, dt))) switch_in = 0.0;
        } else if (g1.barrier_crossing(s, step_held(s, slow, dt))) {
          // Last instant before the slow path reaches B(mu1), so the switch
          // happens on the evader's side of the barrier.
          double lo = 0.0, hi = 1.0;
          for (int it = 0; it < kBisect; ++it) {
            const double m = 0.5 * (lo + hi);
            (g1.barrier_crossing(s, step_held(s, slow, m * dt)) ? hi : lo) = m;
          }
          switch_in = lo * dt;
        }
      }
      if (switch_in && *switch_in <= 0.0) {
        fire(t, s);
        switch_in.reset();
      }
    }

    // The switch above may have moved the pursuer to another geometry.
    const Region rp = gp->classify(s);
    const Region lp = played_region(*gp, s, riding);
    const Geometry* ge = &g1;
    auto evader_geometry = [&] { ge = (deceptive && !pol.switched) ? &g2 : &g1; };
    evader_geometry();
    auto evader_psi = [&](RelState q, const Region& pr) {
      return evader_feedback(*ge, q, ge == gp ? pr : played_region(*ge, q, riding));
    };
    Controls c{pursuer_feedback(*gp, s, lp), evader_psi(s, lp), pol.current_speed()};
    tr.samples.push_back({t, s, c, mu_hat, rp, pending});
    pending = 0;
    if (k >= nmax) return tr;  // no capture within t_max

    auto key = [&](RelState q) {
      const Region a = played_region(*gp, q, riding);
      return std::pair<Region, Region>{a, ge == gp ? a : played_region(*ge, q, riding)};
    };

    RelState cur = s;
    double tt = t, rem = dt;
    for (int pass = 0; rem > 0.0; ++pass) {
      const double h0 = switch_in ? std::min(rem, t + *switch_in - tt) : rem;
      double h = h0;
      RelState nxt = step_held(cur, c, h);
      if (pass < kMaxSwitches && norm(nxt) > sc.params_truth.l) {
        const auto k0 = key(cur);
        if (key(nxt) != k0) {
          double lo = 0.0, hi = 1.0;
          for (int it = 0; it < kBisect; ++it) {
            const double m = 0.5 * (lo + hi);
            (key(step_held(cur, c, m * h0)) == k0 ? lo : hi) = m;
          }
          h = hi * h0;
          nxt = step_held(cur, c, h);
          ++tr.control_switches;
        }
      }
      for (const auto& e : detect_events(tt, cur, tt + h, nxt, g1)) {
        tr.events.push_back(e);
        pending |= static_cast<uint8_t>(e.kind);
        if (e.kind == EventKind::Capture) {
          tr.capture_time = e.t;
          Region rc;
          rc.tag = RegionTag::Captured;
          rc.mirrored = e.loc.x < 0.0;
          tr.samples.push_back({e.t, e.loc, c, mu_hat, rc, pending});
          return tr;
        }
      }
      P = advance_pose(P, c.u, h);
      cur = nxt;
      tt += h;
      rem -= h;
      if (switch_in && h == h0 && h0 < rem + h) {
        fire(tt, cur);
        switch_in.reset();
        evader_geometry();
      }
      update_riding(cur, *gp);
      if (riding) cur = project_on_equivocal(*gp, cur);
      if (rem <= 1e-12 * dt) break;
      const Region r2 = played_region(*gp, cur, riding);
      c = {pursuer_feedback(*gp, cur, r2), evader_psi(cur, r2), pol.current_speed()};
    }
    s = cur;
    const Vec2 Ew2 = to_global(s, P);
    if (lag) observe(norm(Ew2 - Ew) / dt);
    Ew = Ew2;
  }
}

/// One row per sample: t,x,y,u,psi,mu_cmd,mu_hat,region,event.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
  const auto prec = os.precision(9);
  os << "t,x,y,u,psi,mu_cmd,mu_hat,region,event\n";
  for (const auto& s : tr.samples) {
    os << s.t << ',' << s.s.x << ',' << s.s.y << ',' << s.c.u << ',' << s.c.psi << ',' << s.c.mu_cmd << ','
       << s.mu_hat << ',' << label(s.region) << ',';
    bool first = true;
    for (auto k : {EventKind::Switch, EventKind::AxisCross, EventKind::BarrierCross, EventKind::Capture}) {
      if (s.events & static_cast<uint8_t>(k)) {
        if (!first) os << ';';
        os << to_string(k);
        first = false;
      }
    }
    os << '\n';
  }
  os.precision(prec);
}

}  // namespace hcg
