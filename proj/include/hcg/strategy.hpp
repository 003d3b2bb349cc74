#pragma once
/// @file strategy.hpp
/// @brief Feedback equilibrium strategies, the pursuer's speed estimator and
/// the evader's slow-then-fast deceptive policy.

#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "hcg/core.hpp"
#include "hcg/solution.hpp"

namespace hcg {

/// Pursuer turn rate: +1 in primary/tributary, -1 in secondary, 0 on the
/// universal lines, the curve-sustaining control on the equivocal curve.
/// Negated for mirrored (x < 0) points.
inline double pursuer_feedback(const Geometry& g, RelState s, const Region& r) {
  const double sign = r.mirrored ? -1.0 : 1.0;
  switch (r.tag) {
    case RegionTag::Primary:
    case RegionTag::Tributary:
    case RegionTag::Dispersal: return sign;
    case RegionTag::Secondary: return -sign;
    case RegionTag::Equivocal: return sign * g.equivocal_control({std::abs(s.x), s.y});
    case RegionTag::UniversalPositive:
    case RegionTag::UniversalNegative:
    case RegionTag::Captured: return 0.0;
  }
  return 0.0;
}

inline double pursuer_feedback(const Geometry& g, RelState s) { return pursuer_feedback(g, s, g.classify(s)); }

/// Evader relative heading: phi + tau in primary, tau (= t_UL) in tributary,
/// psi_J - tau in secondary, 0 on the universal lines and pure pursuit of
/// the pursuer on the equivocal curve.
inline double evader_feedback(const Geometry& g, RelState s, const Region& r) {
  const double sign = r.mirrored ? -1.0 : 1.0;
  const Vec2 q{std::abs(s.x), s.y};
  switch (r.tag) {
    case RegionTag::Primary: {
      const auto h = g.primary_lookup(q);
      return wrap_angle(sign * (h.phi + h.tau));
    }
    case RegionTag::Tributary:
    case RegionTag::Dispersal: {
      const auto t = cs_turn_time_rel(q);
      return wrap_angle(sign * (t ? *t : 0.0));
    }
    case RegionTag::Secondary: {
      const auto h = g.secondary_lookup(q);
      return wrap_angle(sign * (h.psi0 - h.tau));
    }
    case RegionTag::Equivocal: return heading_of(-s);
    case RegionTag::UniversalPositive:
    case RegionTag::UniversalNegative: return 0.0;
    case RegionTag::Captured: return heading_of(s);
  }
  return 0.0;
}

inline double evader_feedback(const Geometry& g, RelState s) { return evader_feedback(g, s, g.classify(s)); }

/// Running supremum of the evader speeds the pursuer has observed. The
/// estimate is the sup over the evader's observed actions; before the first
/// observation it is undefined and the first observation initialises it.
struct SpeedEstimate {
  double mu_hat = 0.0;
  double history_max = 0.0;
  bool initialized = false;
};

inline SpeedEstimate estimator_update(SpeedEstimate e, double observed_speed) {
  if (!(observed_speed >= 0.0 && observed_speed < 1.0)) {
    std::ostringstream os;
    os.precision(9);
    os << "observed evader speed " << observed_speed << " outside [0, 1)";
    throw std::out_of_range(os.str());
  }
  e.history_max = e.initialized ? std::max(e.history_max, observed_speed) : observed_speed;
  e.mu_hat = e.history_max;
  e.initialized = true;
  return e;
}

struct EvaderPolicy {
  enum class Kind { Truthful, Deceptive };
  enum class Trigger { BarrierCrossing, Time };

  Kind kind = Kind::Truthful;
  double mu_low = 0.0;
  double mu_high = 0.0;
  Trigger trigger = Trigger::BarrierCrossing;
  double switch_time = 0.0;  // used with Trigger::Time
  bool switched = false;     // latch

  double current_speed() const { return (kind == Kind::Deceptive && !switched) ? mu_low : mu_high; }
};

struct EvaderAction {
  double psi = 0.0;
  double mu_cmd = 0.0;
  bool switched = false;      // latch state after this call
  bool switched_now = false;  // this call performed the switch
};

/// g1: geometry for the true bound mu_high; g2: for mu_low. With the barrier
/// trigger the switch fires at the first sample whose next step, played
/// slow, would cross B(mu_high): `next_if_slow` carries that tentative state.
inline EvaderAction deceptive_policy(EvaderPolicy& pol, const Geometry& g1, const Geometry& g2, RelState s, double t,
                                     const std::optional<RelState>& next_if_slow = std::nullopt) {
  EvaderAction a;
  if (pol.kind == EvaderPolicy::Kind::Deceptive && !pol.switched) {
    bool fire = false;
    if (pol.trigger == EvaderPolicy::Trigger::Time) fire = t >= pol.switch_time;
    else if (next_if_slow) fire = g1.barrier_crossing(s, *next_if_slow).has_value();
    if (fire) {
      pol.switched = true;
      a.switched_now = true;
    }
  }
  const bool fast = pol.kind == EvaderPolicy::Kind::Truthful || pol.switched;
  a.psi = evader_feedback(fast ? g1 : g2, s);
  a.mu_cmd = fast ? pol.mu_high : pol.mu_low;
  a.switched = pol.switched;
  return a;
}

}  // namespace hcg
