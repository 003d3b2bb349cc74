#pragma once
/// @file solution.hpp
/// @brief Solution geometry of the homicidal chauffeur game for one (mu, l):
/// barrier, characteristic fans, equivocal curve, regions and value.
///
/// Everything is built by retrograde integration in the relative frame. An
/// equilibrium path keeps u constant and the evader's world heading fixed,
/// so along a retrograde characteristic psi(tau) = psi0 + u * tau.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hcg/core.hpp"
#include "hcg/geom.hpp"

namespace hcg {

/// Construction failed (trace left its domain, locus not found, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A query violated an operation's precondition.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline double bup_angle(const GameParams& p) { return std::acos(p.mu); }

/// Point of the capture circle at clockwise angle phi from +Y.
inline Vec2 circle_point(double l, double phi) { return {l * std::sin(phi), l * std::cos(phi)}; }

/// dq/dtau for the retrograde equilibrium path with constant u.
inline Vec2 retro_rhs(const GameParams& p, double u, double psi0, double tau, Vec2 q) {
  const double psi = psi0 + u * tau;
  return {q.y * u - p.mu * std::sin(psi), -q.x * u + 1.0 - p.mu * std::cos(psi)};
}

inline void check_step(double d_tau) {
  if (!(d_tau > 0.0)) throw std::invalid_argument("integration step must be positive");
  if (d_tau >= 0.01) {
    std::ostringstream os;
    os << "integration step " << d_tau << " rejected: must be < 0.01";
    throw std::invalid_argument(os.str());
  }
}

// ---------------------------------------------------------------------------
// Curves and fans

enum class CurveKind { Barrier, Equivocal };

/// tau is the time-to-go (value) at the sample; sigma is the retrograde
/// integration time from the curve's first sample; u is the pursuer control
/// that keeps the state on the curve.
struct CurveSample {
  RelState s;
  double tau = 0.0;
  double u = 0.0;
  double sigma = 0.0;
};

struct SampledCurve {
  CurveKind kind = CurveKind::Barrier;
  std::vector<CurveSample> points;
  bool ended_at_extremum = false;  // barrier only

  std::vector<Vec2> positions() const {
    std::vector<Vec2> v;
    v.reserve(points.size());
    for (const auto& c : points) v.push_back(c.s);
    return v;
  }
};

enum class Family { Primary, Tributary, Secondary };
enum class Terminal { UsablePart, UniversalPositive, Equivocal, UniversalNegative };

inline const char* to_string(Family f) {
  switch (f) {
    case Family::Primary: return "primary";
    case Family::Tributary: return "tributary";
    case Family::Secondary: return "secondary";
  }
  return "?";
}

/// One retrograde characteristic; points[k] sits at time-to-terminal k*d_tau.
struct Characteristic {
  Terminal terminal = Terminal::UsablePart;
  double param = 0.0;   // phi for primary, junction coordinate otherwise
  double value0 = 0.0;  // value on the terminal manifold
  double psi0 = 0.0;    // evader relative heading at the terminal point
  double u = 1.0;       // pursuer control along the path
  Vec2 anchor;          // terminal point; (x_ES, y_ES) for equivocal junctions
  double d_tau = 0.0;
  std::vector<Vec2> points;

  double tau(size_t k) const { return static_cast<double>(k) * d_tau; }
  double value(size_t k) const { return value0 + tau(k); }
  double psi(size_t k) const { return psi0 + u * tau(k); }
};

struct CharacteristicField {
  Family family = Family::Primary;
  std::vector<Characteristic> trajectories;
};

/// Integrate one characteristic retrograde. Samples are kept every `stride`
/// steps; `stop(q, tau)` is consulted at kept samples.
template <class Stop>
Characteristic integrate_characteristic(const GameParams& p, Vec2 start, double psi0, double u, double d_tau,
                                        int stride, double horizon, Stop&& stop) {
  Characteristic c;
  c.psi0 = psi0;
  c.u = u;
  c.anchor = start;
  c.d_tau = d_tau * stride;
  c.points.push_back(start);
  auto f = [&](double t, Vec2 q) { return retro_rhs(p, u, psi0, t, q); };
  Vec2 q = start;
  const long n = static_cast<long>(std::floor(horizon / d_tau + 1e-9));
  for (long i = 1; i <= n; ++i) {
    q = rk4_step(f, (i - 1) * d_tau, q, d_tau);
    if (i % stride == 0) {
      c.points.push_back(q);
      if (stop(q, i * d_tau)) break;
    }
  }
  return c;
}

inline Characteristic integrate_characteristic(const GameParams& p, Vec2 start, double psi0, double u, double d_tau,
                                               int stride, double horizon) {
  return integrate_characteristic(p, start, psi0, u, d_tau, stride, horizon, [](Vec2, double) { return false; });
}

/// Barrier: the primary characteristic leaving the BUP. Integration stops at
/// tau_max or where dx/dtau turns from positive to non-positive (the curve's
/// x-extremum), whichever comes first.
inline SampledCurve compute_barrier(const GameParams& p, double d_tau = 1e-3, double tau_max = 20.0) {
  check_step(d_tau);
  const double phib = bup_angle(p);
  auto f = [&](double t, Vec2 q) { return retro_rhs(p, 1.0, phib, t, q); };
  SampledCurve c;
  c.kind = CurveKind::Barrier;
  Vec2 q = circle_point(p.l, phib);
  double tau = 0.0;
  c.points.push_back({q, 0.0, 1.0, 0.0});
  bool seen_pos = f(0.0, q).x > 0.0;
  for (long i = 1; tau < tau_max - 1e-12; ++i) {
    const double h = std::min(d_tau, tau_max - tau);
    const Vec2 qn = rk4_step(f, tau, q, h);
    const double vx = f(tau + h, qn).x;
    if (seen_pos && vx <= 0.0) {
      double lo = 0.0, hi = h;
      for (int it = 0; it < 80 && hi - lo > 1e-16; ++it) {
        const double m = 0.5 * (lo + hi);
        (f(tau + m, rk4_step(f, tau, q, m)).x > 0.0 ? lo : hi) = m;
      }
      const double m = 0.5 * (lo + hi);
      if (m > 1e-13) c.points.push_back({rk4_step(f, tau, q, m), tau + m, 1.0, tau + m});
      c.ended_at_extremum = true;
      return c;
    }
    if (vx > 0.0) seen_pos = true;
    q = qn;
    tau = (h == d_tau) ? i * d_tau : tau + h;
    c.points.push_back({q, tau, 1.0, tau});
  }
  return c;
}

/// Primary fan: phi_i = phibar * i / (n_phi - 1) including both ends, so the
/// phi = 0 characteristic (primary/tributary boundary) and the barrier are
/// the outer rows.
inline CharacteristicField compute_primary_fan(const GameParams& p, int n_phi, double d_tau, double horizon,
                                               int stride = 10) {
  if (n_phi < 2) throw std::invalid_argument("n_phi must be >= 2");
  check_step(d_tau);
  CharacteristicField fan;
  fan.family = Family::Primary;
  const double phib = bup_angle(p);
  for (int i = 0; i < n_phi; ++i) {
    const double phi = phib * i / (n_phi - 1);
    auto c = integrate_characteristic(p, circle_point(p.l, phi), phi, 1.0, d_tau, stride, horizon);
    c.terminal = Terminal::UsablePart;
    c.param = phi;
    c.value0 = 0.0;
    fan.trajectories.push_back(std::move(c));
  }
  return fan;
}

// ---------------------------------------------------------------------------
// Tributary closed form

/// C-segment duration of the CS path: smallest t >= 0 such that a pursuer
/// turning right (u = +1) for time t has its heading ray through the target
/// in the forward direction. Empty when the target lies strictly inside the
/// right turn circle, where no such alignment exists.
inline std::optional<double> cs_turn_time_rel(RelState q) {
  const Vec2 w{q.x - 1.0, q.y};
  const double rho = norm(w);
  if (rho < 1.0) return std::nullopt;
  double t = std::fmod(std::atan2(w.x, w.y) + std::asin(1.0 / rho), kTwoPi);
  if (t < 0.0) t += kTwoPi;
  if (t > kTwoPi - 1e-12) t = 0.0;
  return t;
}

inline std::optional<double> dubins_cs_turn_time(const Pose& pursuer, Vec2 target) {
  return cs_turn_time_rel(to_relative({pursuer.pos, pursuer.heading, target}));
}

/// Tributary value t_UL + (s - l) / (1 - mu), s = s0 + mu t_UL, for the
/// mirrored point (|x|, y).
inline double tributary_value(const GameParams& p, RelState s) {
  const RelState q{std::abs(s.x), s.y};
  const auto t = cs_turn_time_rel(q);
  if (!t) {
    std::ostringstream os;
    os.precision(9);
    os << "tributary_value: (" << s.x << ", " << s.y << ") lies inside the pursuer's turn circle";
    throw PreconditionError(os.str());
  }
  const Vec2 w{q.x - 1.0, q.y};
  const double s0 = std::sqrt(std::max(0.0, dot(w, w) - 1.0));
  return *t + (s0 + p.mu * *t - p.l) / (1.0 - p.mu);
}

/// Gradient of the tributary value at a point with x >= 0 and rho > 1.
inline Vec2 tributary_gradient(const GameParams& p, RelState q) {
  const Vec2 w{q.x - 1.0, q.y};
  const double r2 = dot(w, w);
  const double s0 = std::sqrt(r2 - 1.0);
  return (1.0 / (1.0 - p.mu)) * (Vec2{w.y / r2, -w.x / r2} + (s0 / r2) * w);
}

/// Tributary fan for plotting: from U+ junctions (0, y_J) with psi = tau.
template <class Stop>
CharacteristicField compute_tributary_fan(const GameParams& p, int n, double span, double d_tau, double horizon,
                                          int stride, Stop&& stop) {
  CharacteristicField fan;
  fan.family = Family::Tributary;
  for (int j = 0; j < n; ++j) {
    const double y = p.l + span * j / std::max(1, n - 1);
    auto c = integrate_characteristic(p, {0.0, y}, 0.0, 1.0, d_tau, stride, horizon, stop);
    c.terminal = Terminal::UniversalPositive;
    c.param = y;
    c.value0 = (y - p.l) / (1.0 - p.mu);
    fan.trajectories.push_back(std::move(c));
  }
  return fan;
}

// ---------------------------------------------------------------------------
// Equivocal curve

/// Pursuer control that keeps the tributary value decreasing at unit rate
/// while the evader plays pure pursuit at q (x > 0).
struct EquivocalRate {
  Vec2 vel;  // forward-time velocity
  double u;
};

inline EquivocalRate equivocal_rate(const GameParams& p, Vec2 q) {
  const double r = norm(q);
  const Vec2 e{-q.x / r, -q.y / r};
  const Vec2 g = tributary_gradient(p, q);
  const double a = dot(g, Vec2{-q.y, q.x});
  const double b = dot(g, p.mu * e + Vec2{0.0, -1.0});
  if (std::abs(a) < 1e-12) {
    std::ostringstream os;
    os.precision(9);
    os << "equivocal locus lost: control has no authority at (" << q.x << ", " << q.y << "), residual " << (1.0 + b);
    throw NumericalError(os.str());
  }
  const double u = (-1.0 - b) / a;
  return {u * Vec2{-q.y, q.x} + p.mu * e + Vec2{0.0, -1.0}, u};
}

/// Equal-cost locus traced retrograde from the barrier end to the y-axis.
/// Along it the evader plays pure pursuit and the pursuer the control that
/// makes staying on the curve cost exactly as much as departing along the
/// tributary (dV_T/dt = -1), which is the differential form of the
/// two-branch indifference.
inline SampledCurve compute_equivocal(const GameParams& p, const SampledCurve& barrier, double d_tau = 1e-3,
                                      double sigma_max = 40.0) {
  check_step(d_tau);
  if (barrier.points.empty() || !barrier.ended_at_extremum)
    throw NumericalError("equivocal curve needs a barrier that ends at its x-extremum");
  SampledCurve c;
  c.kind = CurveKind::Equivocal;
  auto guard = [&](Vec2 q) {
    const double rho = std::hypot(q.x - 1.0, q.y);
    if (!(rho > 1.0 + 1e-12) || !std::isfinite(q.x) || !std::isfinite(q.y)) {
      std::ostringstream os;
      os.precision(9);
      os << "equivocal locus not found: trace reached (" << q.x << ", " << q.y
         << ") inside the pursuer's turn circle (rho=" << rho << ") where the tributary branch does not exist";
      throw NumericalError(os.str());
    }
  };
  auto rate = [&](Vec2 q) {
    guard(q);
    auto r = equivocal_rate(p, q);
    if (!(std::abs(r.u) <= 1.0 + 1e-9)) {
      std::ostringstream os;
      os.precision(9);
      os << "equivocal locus not found: sustaining control u=" << r.u << " outside [-1, 1] at (" << q.x << ", "
         << q.y << ")";
      throw NumericalError(os.str());
    }
    return r;
  };
  auto f = [&](double, Vec2 q) { return -rate(q).vel; };
  Vec2 q = barrier.points.back().s;
  double sigma = 0.0;
  for (long i = 1;; ++i) {
    c.points.push_back({q, tributary_value(p, q), rate(q).u, sigma});
    const Vec2 qn = rk4_step(f, sigma, q, d_tau);
    if (qn.x <= 0.0) {
      const double fr = q.x / (q.x - qn.x);
      Vec2 qa = lerp(q, qn, fr);
      qa.x = 0.0;
      if (!(qa.y < -p.l)) {
        std::ostringstream os;
        os.precision(9);
        os << "equivocal locus met the y-axis at y=" << qa.y << ", not behind the capture circle";
        throw NumericalError(os.str());
      }
      guard(qa);
      const double ua = equivocal_rate(p, Vec2{1e-12, qa.y}).u;
      if (fr * d_tau > 1e-13) c.points.push_back({qa, tributary_value(p, qa), ua, sigma + fr * d_tau});
      else c.points.back() = {qa, tributary_value(p, qa), ua, sigma};
      return c;
    }
    q = qn;
    sigma = i * d_tau;
    if (sigma > sigma_max) {
      std::ostringstream os;
      os.precision(9);
      os << "equivocal locus did not reach the y-axis within sigma=" << sigma_max << "; last point (" << q.x << ", "
         << q.y << ")";
      throw NumericalError(os.str());
    }
  }
}

// ---------------------------------------------------------------------------
// Regions

enum class RegionTag {
  Primary,
  Tributary,
  Secondary,
  UniversalPositive,
  UniversalNegative,
  Equivocal,
  Dispersal,
  Captured
};

inline const char* to_string(RegionTag t) {
  switch (t) {
    case RegionTag::Primary: return "Primary";
    case RegionTag::Tributary: return "Tributary";
    case RegionTag::Secondary: return "Secondary";
    case RegionTag::UniversalPositive: return "UniversalPositive";
    case RegionTag::UniversalNegative: return "UniversalNegative";
    case RegionTag::Equivocal: return "Equivocal";
    case RegionTag::Dispersal: return "Dispersal";
    case RegionTag::Captured: return "Captured";
  }
  return "?";
}

inline std::optional<RegionTag> region_from_string(const std::string& s) {
  for (int i = 0; i <= static_cast<int>(RegionTag::Captured); ++i)
    if (s == to_string(static_cast<RegionTag>(i))) return static_cast<RegionTag>(i);
  return std::nullopt;
}

/// mirrored: the query had x < 0 and was reflected. tie_break: on the
/// dispersal line, where the x > 0 branch was chosen.
struct Region {
  RegionTag tag = RegionTag::Captured;
  bool mirrored = false;
  bool tie_break = false;
};

inline bool operator==(const Region& a, const Region& b) {
  return a.tag == b.tag && a.mirrored == b.mirrored && a.tie_break == b.tie_break;
}

inline std::string label(const Region& r) {
  std::string s = to_string(r.tag);
  if (r.tie_break) s += "(x>0)";
  return s;
}

struct GeometryOptions {
  double d_tau = 1e-3;
  int n_phi = 200;
  int store_stride = 10;   // fan samples kept every stride steps
  int n_equivocal = 150;   // secondary junctions along the equivocal curve
  int n_negative = 60;     // secondary junctions along U-
  int n_tributary = 40;    // plotting only
  double dead_band = 1e-6;
  double tau_max = 20.0;
};

/// Everything needed to classify, evaluate and play from a point, for one
/// GameParams. Immutable once built; share it read-only between threads.
class Geometry {
 public:
  struct PrimaryHit {
    double phi;
    double tau;
    bool exact;  // false when the point fell between mesh cells
  };
  struct SecondaryHit {
    double tau;     // time to the junction
    double psi0;    // evader heading at the junction
    double value0;  // value at the junction
    Vec2 anchor;
    bool exact;
  };

  static std::shared_ptr<const Geometry> build(const GameParams& p, const GeometryOptions& o = {}) {
    return std::shared_ptr<const Geometry>(new Geometry(p, o));
  }

  const GameParams& params() const { return p_; }
  const GeometryOptions& options() const { return o_; }
  const SampledCurve& barrier() const { return barrier_; }
  const SampledCurve& equivocal() const { return equivocal_; }
  const CharacteristicField& primary_fan() const { return primary_; }
  const CharacteristicField& secondary_fan() const { return secondary_; }
  const CharacteristicField& tributary_fan() const { return tributary_; }
  const geom::Polygon& enclosure() const { return enclosure_; }
  const geom::Polygon& primary_region() const { return primary_poly_; }
  const geom::Polyline& barrier_line() const { return barrier_line_; }
  const geom::Polyline& equivocal_line() const { return equivocal_line_; }
  Vec2 bup() const { return circle_point(p_.l, bup_angle(p_)); }
  Vec2 barrier_end() const { return barrier_.points.back().s; }
  /// (0, ybar_ES): where the equivocal curve meets the y-axis.
  double ybar() const { return ybar_; }
  /// Where the phi = 0 characteristic meets the barrier.
  Vec2 primary_corner() const { return corner_; }

  Region classify(RelState s) const {
    Region r;
    r.mirrored = s.x < 0.0;
    const Vec2 q{std::abs(s.x), s.y};
    const double db = o_.dead_band;
    if (dot(q, q) <= p_.l * p_.l) return r.tag = RegionTag::Captured, r;
    if (q.x <= db) {
      if (q.y > 0.0) r.tag = RegionTag::UniversalPositive;
      else if (q.y > ybar_ + db) r.tag = RegionTag::UniversalNegative;
      else if (q.y >= ybar_ - db) r.tag = RegionTag::Equivocal;
      else {
        r.tag = RegionTag::Dispersal;
        r.mirrored = false;
        r.tie_break = true;
      }
      return r;
    }
    if (equivocal_line_.nearest(q, db).dist <= db) return r.tag = RegionTag::Equivocal, r;
    if (enclosure_.contains(q)) return r.tag = RegionTag::Secondary, r;
    if (primary_poly_.contains(q) || std::hypot(q.x - 1.0, q.y) < 1.0) return r.tag = RegionTag::Primary, r;
    r.tag = RegionTag::Tributary;
    return r;
  }

  double value(RelState s) const { return value(s, classify(s)); }

  double value(RelState s, const Region& r) const {
    const Vec2 q{std::abs(s.x), s.y};
    switch (r.tag) {
      case RegionTag::Captured: return 0.0;
      case RegionTag::UniversalPositive: return (q.y - p_.l) / (1.0 - p_.mu);
      case RegionTag::UniversalNegative: return (q.y - ybar_) / (1.0 - p_.mu) + vbar_;
      case RegionTag::Tributary:
      case RegionTag::Dispersal:
      case RegionTag::Equivocal: return tributary_value(p_, q);
      case RegionTag::Secondary: {
        auto h = secondary_lookup(q);
        return h.value0 + h.tau;
      }
      case RegionTag::Primary: return primary_lookup(q).tau;
    }
    return 0.0;
  }

  /// (phi, tau) of the primary characteristic through q (x >= 0).
  PrimaryHit primary_lookup(Vec2 q) const {
    const auto& rows = primary_.trajectories;
    if (auto h = primary_mesh_.locate(q)) {
      const double phi = rows[h->row].param + h->b * (rows[h->row + 1].param - rows[h->row].param);
      return {phi, (h->col + h->a) * rows[h->row].d_tau, true};
    }
    const auto n = primary_mesh_.nearest_node(q);
    return {rows[n.row].param, rows[n.row].tau(n.col), false};
  }

  SecondaryHit secondary_lookup(Vec2 q) const {
    const auto& rows = secondary_.trajectories;
    if (auto h = secondary_mesh_.locate(q)) {
      const auto& r0 = rows[h->row];
      const auto& r1 = rows[h->row + 1];
      const double b = h->b;
      return {(h->col + h->a) * r0.d_tau, r0.psi0 + b * (r1.psi0 - r0.psi0), r0.value0 + b * (r1.value0 - r0.value0),
              lerp(r0.anchor, r1.anchor, b), true};
    }
    const auto n = secondary_mesh_.nearest_node(q);
    const auto& r = rows[n.row];
    return {r.tau(n.col), r.psi0, r.value0, r.anchor, false};
  }

  /// Pursuer control sustaining the equivocal curve near q (x >= 0).
  double equivocal_control(Vec2 q) const {
    const auto n = equivocal_line_.nearest(q);
    const auto& a = equivocal_.points[n.seg];
    const auto& b = equivocal_.points[std::min(n.seg + 1, equivocal_.points.size() - 1)];
    return a.u + n.t * (b.u - a.u);
  }

  /// First crossing of the chord [a, b] with the barrier (either side of the
  /// y-axis), as a chord parameter in [0, 1].
  std::optional<double> barrier_crossing(RelState a, RelState b) const {
    std::optional<double> s;
    if (auto c = barrier_line_.first_crossing(a, b)) s = c->s;
    if (auto c = barrier_line_.first_crossing({-a.x, a.y}, {-b.x, b.y}); c && (!s || c->s < *s)) s = c->s;
    return s;
  }

 private:
  Geometry(const GameParams& p, const GeometryOptions& o) : p_(p), o_(o) {
    check_step(o.d_tau);
    barrier_ = compute_barrier(p, o.d_tau, o.tau_max);
    if (!barrier_.ended_at_extremum) {
      std::ostringstream os;
      os << "barrier did not reach its x-extremum within tau_max=" << o.tau_max;
      throw NumericalError(os.str());
    }
    barrier_line_ = geom::Polyline(barrier_.positions());
    if (!cs_turn_time_rel(barrier_end())) {
      std::ostringstream os;
      os.precision(9);
      os << "unsupported parameters (mu=" << p.mu << ", l=" << p.l << "): the barrier ends at (" << barrier_end().x
         << ", " << barrier_end().y << "), inside the pursuer's right turn circle, where the tributary construction "
         << "of the equivocal curve does not apply";
      throw NumericalError(os.str());
    }
    equivocal_ = compute_equivocal(p, barrier_, o.d_tau, o.tau_max * 2.0);
    equivocal_line_ = geom::Polyline(equivocal_.positions(), 0.02);
    ybar_ = equivocal_.points.back().s.y;
    vbar_ = equivocal_.points.back().tau;
    build_enclosure();
    build_primary();
    build_secondary();
    tributary_ = compute_tributary_fan(p, o.n_tributary, 3.0, o.d_tau, 6.0, o.store_stride,
                                       [&](Vec2 q, double) { return enclosure_.contains(q) || primary_poly_.contains(q); });
  }

  void build_enclosure() {
    std::vector<Vec2> v = barrier_.positions();
    for (size_t i = 1; i < equivocal_.points.size(); ++i) v.push_back(equivocal_.points[i].s);
    v.push_back({0.0, -p_.l});
    const double phib = bup_angle(p_);
    const int n = 200;
    for (int j = 1; j < n; ++j) v.push_back(circle_point(p_.l, kPi - (kPi - phib) * j / n));
    enclosure_ = geom::Polygon(std::move(v));
  }

  void build_primary() {
    // Boundary characteristic phi = 0 at full resolution, cut where it meets the barrier.
    const double horizon0 = barrier_.points.back().tau + 4.0;
    const auto c0 = integrate_characteristic(p_, {0.0, p_.l}, 0.0, 1.0, o_.d_tau, 1, horizon0);
    std::optional<size_t> seg;
    geom::Polyline::Crossing cr{};
    for (size_t k = 0; k + 1 < c0.points.size(); ++k) {
      if (auto c = barrier_line_.first_crossing(c0.points[k], c0.points[k + 1])) {
        seg = k;
        cr = *c;
        break;
      }
    }
    if (!seg) throw NumericalError("the phi = 0 primary characteristic never meets the barrier");
    corner_ = lerp(c0.points[*seg], c0.points[*seg + 1], cr.s);
    const double tau0 = (*seg + cr.s) * o_.d_tau;
    const double taub = barrier_.points[cr.seg].tau +
                        cr.t * (barrier_.points[cr.seg + 1].tau - barrier_.points[cr.seg].tau);

    std::vector<Vec2> v(c0.points.begin(), c0.points.begin() + *seg + 1);
    v.push_back(corner_);
    for (size_t k = cr.seg + 1; k-- > 0;) v.push_back(barrier_.points[k].s);
    const double phib = bup_angle(p_);
    const int n = 200;
    for (int j = 1; j < n; ++j) v.push_back(circle_point(p_.l, phib - phib * j / n));
    primary_poly_ = geom::Polygon(std::move(v));

    const double horizon = 1.3 * std::max(tau0, taub) + 0.2;
    primary_ = compute_primary_fan(p_, o_.n_phi, o_.d_tau, horizon, o_.store_stride);
    std::vector<std::vector<Vec2>> rows;
    for (const auto& c : primary_.trajectories) rows.push_back(c.points);
    primary_mesh_ = geom::QuadMesh(std::move(rows), 0.05);
  }

  void build_secondary() {
    secondary_.family = Family::Secondary;
    const auto& E = equivocal_.points;
    std::vector<size_t> picks;
    const size_t stride = std::max<size_t>(1, E.size() / std::max(1, o_.n_equivocal));
    for (size_t i = 0; i + 1 < E.size(); i += stride) picks.push_back(i);
    picks.push_back(E.size() - 1);

    struct Junction {
      Vec2 q;
      double value;
      Terminal term;
    };
    std::vector<Junction> js;
    for (size_t i : picks) js.push_back({E[i].s, E[i].tau, Terminal::Equivocal});
    for (int j = 1; j <= o_.n_negative; ++j) {
      const double y = ybar_ + (-p_.l - ybar_) * j / o_.n_negative;
      js.push_back({{0.0, y}, (y - ybar_) / (1.0 - p_.mu) + vbar_, Terminal::UniversalNegative});
    }

    const double margin = 0.3;
    for (size_t j = 0; j < js.size(); ++j) {
      const auto& J = js[j];
      const double psi0 = heading_of(-J.q);
      bool was_in = false;
      double out_since = -1.0;
      auto stop = [&](Vec2 q, double tau) {
        // Past the capture circle the path is not playable by the evader.
        if (tau > 0.0 && dot(q, q) <= p_.l * p_.l) return true;
        if (enclosure_.contains(q)) {
          was_in = true;
          out_since = -1.0;
          return false;
        }
        if (out_since < 0.0) out_since = tau;
        return (was_in || tau > 1.0) && tau - out_since > margin;
      };
      auto c = integrate_characteristic(p_, J.q, psi0, -1.0, o_.d_tau, o_.store_stride, o_.tau_max, stop);
      c.terminal = J.term;
      c.param = static_cast<double>(j);
      c.value0 = J.value;
      secondary_.trajectories.push_back(std::move(c));
    }
    std::vector<std::vector<Vec2>> rows;
    for (const auto& c : secondary_.trajectories) rows.push_back(c.points);
    secondary_mesh_ = geom::QuadMesh(std::move(rows), 0.05);
  }

  GameParams p_;
  GeometryOptions o_;
  SampledCurve barrier_, equivocal_;
  CharacteristicField primary_, secondary_, tributary_;
  geom::Polyline barrier_line_, equivocal_line_;
  geom::Polygon enclosure_, primary_poly_;
  geom::QuadMesh primary_mesh_, secondary_mesh_;
  double ybar_ = 0.0, vbar_ = 0.0;
  Vec2 corner_;
};

// Free-function forms of the geometry queries.
inline Region classify_region(const Geometry& g, RelState s) { return g.classify(s); }
inline double value(const Geometry& g, RelState s) { return g.value(s); }

/// Curves and fans as CSV: family,branch_id,tau,x,y.
inline void write_curves_csv(std::ostream& os, const Geometry& g) {
  const auto prec = os.precision(9);
  os << "family,branch_id,tau,x,y\n";
  for (const auto& c : g.barrier().points) os << "barrier,0," << c.tau << ',' << c.s.x << ',' << c.s.y << '\n';
  for (const auto& c : g.equivocal().points) os << "equivocal,0," << c.tau << ',' << c.s.x << ',' << c.s.y << '\n';
  for (const auto* f : {&g.primary_fan(), &g.tributary_fan(), &g.secondary_fan()}) {
    for (size_t i = 0; i < f->trajectories.size(); ++i) {
      const auto& c = f->trajectories[i];
      for (size_t k = 0; k < c.points.size(); ++k)
        os << to_string(f->family) << ',' << i << ',' << c.value(k) << ',' << c.points[k].x << ',' << c.points[k].y
           << '\n';
    }
  }
  os.precision(prec);
}

}  // namespace hcg
