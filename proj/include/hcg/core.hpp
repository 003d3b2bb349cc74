#pragma once
/// @file core.hpp
/// @brief Game parameters, frames and the reduced-order relative dynamics.
///
/// Angle convention used everywhere in the library: headings are measured
/// clockwise from the +Y axis, so heading a points along (sin a, cos a).
/// A pursuer with heading theta has forward axis h = (sin theta, cos theta)
/// and right-hand axis r = (cos theta, -sin theta). The relative frame puts
/// the pursuer at the origin with +Y along h and +X along r, i.e.
///
///     [x]   [ cos theta  -sin theta ] [dX]
///     [y] = [ sin theta   cos theta ] [dY]
///
/// where (dX, dY) is the world-frame offset from pursuer to evader.

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

namespace hcg {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
inline Vec2 operator*(double k, Vec2 a) { return {k * a.x, k * a.y}; }
inline Vec2 operator*(Vec2 a, double k) { return {k * a.x, k * a.y}; }
inline bool operator==(Vec2 a, Vec2 b) { return a.x == b.x && a.y == b.y; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline Vec2 lerp(Vec2 a, Vec2 b, double t) { return a + t * (b - a); }

/// Evader position in the pursuer-fixed frame.
using RelState = Vec2;

/// Unit vector of a clockwise-from-+Y heading.
inline Vec2 heading_vec(double a) { return {std::sin(a), std::cos(a)}; }

/// Clockwise-from-+Y heading of a vector.
inline double heading_of(Vec2 v) { return std::atan2(v.x, v.y); }

/// Wrap to [-pi, pi].
inline double wrap_angle(double a) {
  if (a >= -kPi && a <= kPi) return a;
  double w = std::remainder(a, kTwoPi);
  if (w < -kPi) w += kTwoPi;
  if (w > kPi) w -= kTwoPi;
  return w;
}

enum class ParamInvariant { NonPositiveRadius, SpeedRatio, Classical };

inline const char* to_string(ParamInvariant w) {
  switch (w) {
    case ParamInvariant::NonPositiveRadius: return "capture radius l must be > 0";
    case ParamInvariant::SpeedRatio: return "speed ratio mu must lie in (0, 1)";
    case ParamInvariant::Classical: return "classical case requires mu^2 + l^2 < 1";
  }
  return "?";
}

class InvalidParams : public std::invalid_argument {
 public:
  InvalidParams(ParamInvariant which, const std::string& msg)
      : std::invalid_argument(msg), which_(which) {}
  ParamInvariant which() const { return which_; }

 private:
  ParamInvariant which_;
};

/// Evader/pursuer speed ratio and capture radius, in pursuer turn-radius units.
struct GameParams {
  double mu = 0.0;
  double l = 0.0;
};

inline bool operator==(const GameParams& a, const GameParams& b) {
  return a.mu == b.mu && a.l == b.l;
}

inline GameParams validate_params(double mu, double l) {
  auto fail = [&](ParamInvariant w) {
    std::ostringstream os;
    os.precision(9);
    os << "invalid parameters (mu=" << mu << ", l=" << l << "): " << to_string(w);
    throw InvalidParams(w, os.str());
  };
  if (!(l > 0.0) || !std::isfinite(l)) fail(ParamInvariant::NonPositiveRadius);
  if (!(mu > 0.0 && mu < 1.0)) fail(ParamInvariant::SpeedRatio);
  if (!(mu * mu + l * l < 1.0)) fail(ParamInvariant::Classical);
  return {mu, l};
}

struct Pose {
  Vec2 pos;
  double heading = 0.0;
};

struct GlobalState {
  Vec2 pursuer_pos;
  double pursuer_heading = 0.0;
  Vec2 evader_pos;

  Pose pursuer() const { return {pursuer_pos, pursuer_heading}; }
};

/// u: pursuer turn rate (+1 turns right). psi: evader heading relative to the
/// pursuer's. mu_cmd: instantaneous evader speed.
struct Controls {
  double u = 0.0;
  double psi = 0.0;
  double mu_cmd = 0.0;
};

/// f = (-y u + mu sin psi, x u - 1 + mu cos psi).
inline Vec2 rel_dynamics(RelState s, const Controls& c) {
  return {-s.y * c.u + c.mu_cmd * std::sin(c.psi),
          s.x * c.u - 1.0 + c.mu_cmd * std::cos(c.psi)};
}

inline RelState to_relative(const GlobalState& g) {
  const double th = wrap_angle(g.pursuer_heading);
  const double c = std::cos(th), s = std::sin(th);
  const Vec2 d = g.evader_pos - g.pursuer_pos;
  return {c * d.x - s * d.y, s * d.x + c * d.y};
}

inline Vec2 to_global(RelState r, const Pose& pursuer) {
  const double th = wrap_angle(pursuer.heading);
  const double c = std::cos(th), s = std::sin(th);
  return pursuer.pos + Vec2{c * r.x + s * r.y, -s * r.x + c * r.y};
}

/// Pursuer pose after turning at constant rate u for time t at unit speed.
inline Pose advance_pose(const Pose& p, double u, double t) {
  if (std::abs(u) < 1e-12) return {p.pos + t * heading_vec(p.heading), p.heading};
  // Turn centre sits at distance 1/|u| on the turning side.
  const double th1 = p.heading + u * t;
  const Vec2 d{(std::cos(p.heading) - std::cos(th1)) / u, (std::sin(th1) - std::sin(p.heading)) / u};
  return {p.pos + d, wrap_angle(th1)};
}

/// Classical fourth-order step for ds/dt = f(t, s).
template <class F>
Vec2 rk4_step(F&& f, double t, Vec2 s, double h) {
  const Vec2 k1 = f(t, s);
  const Vec2 k2 = f(t + 0.5 * h, s + (0.5 * h) * k1);
  const Vec2 k3 = f(t + 0.5 * h, s + (0.5 * h) * k2);
  const Vec2 k4 = f(t + h, s + h * k3);
  return s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace hcg
