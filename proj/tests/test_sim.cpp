#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "hcg/sim.hpp"
#include "support.hpp"

using namespace hcg;
using hcg::test::geo;

TEST(Step, ZeroSpeedStraightAhead) {
  const RelState s = step({0.3, 2.0}, {0.0, 0.0, 0.0}, 1e-3);
  EXPECT_EQ(s.x, 0.3);
  EXPECT_NEAR(s.y, 2.0 - 1e-3, 1e-15);
}

TEST(Step, FourthOrderConvergence) {
  const Controls c{0.7, 1.1, 0.4};
  auto run = [&](double dt) {
    RelState s{1.5, -0.5};
    const int n = static_cast<int>(std::lround(10.0 / dt));
    for (int i = 0; i < n; ++i) s = step(s, c, dt);
    return s;
  };
  const RelState a = run(0.04), b = run(0.02), ref = run(0.0025);
  const double e1 = norm(a - ref), e2 = norm(b - ref);
  // Halving dt divides the error by ~16.
  EXPECT_GT(e1 / e2, 16.0 / 1.6);
  EXPECT_LT(e1 / e2, 16.0 * 1.6);
}

TEST(Step, PureRotationConservesRadius) {
  // Evader at rest, u = 1: relative motion is a circle about (1, 0).
  RelState s{2.5, 0.7};
  const double r0 = norm(s - Vec2{1.0, 0.0});
  const double dt = 1e-3;
  for (int i = 0; i < static_cast<int>(kTwoPi / dt); ++i) s = step(s, {1.0, 0.0, 0.0}, dt);
  EXPECT_NEAR(norm(s - Vec2{1.0, 0.0}), r0, 1e-8);
}

TEST(DetectEvents, CaptureInterpolation) {
  const auto g = geo(0.3, 0.5);
  const auto ev = detect_events(1.0, {0.0, 0.5004}, 1.001, {0.0, 0.4994}, *g);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].kind, EventKind::Capture);
  EXPECT_LT(std::abs(norm(ev[0].loc) - 0.5), 1e-6);
  EXPECT_NEAR(ev[0].t, 1.0004, 1e-9);
}

TEST(DetectEvents, QuietStepAndAxis) {
  const auto g = geo(0.3, 0.5);
  EXPECT_TRUE(detect_events(0.0, {3.0, 3.0}, 0.001, {3.0, 2.999}, *g).empty());
  const auto ev = detect_events(0.0, {0.01, 2.0}, 0.001, {-0.01, 2.0}, *g);
  ASSERT_EQ(ev.size(), 1u);
  EXPECT_EQ(ev[0].kind, EventKind::AxisCross);
  EXPECT_NEAR(ev[0].t, 0.0005, 1e-12);
  const Vec2 b = g->barrier().points[1500].s;
  const auto eb = detect_events(0.0, b + Vec2{0.0, 0.01}, 0.001, b - Vec2{0.0, 0.01}, *g);
  ASSERT_EQ(eb.size(), 1u);
  EXPECT_EQ(eb[0].kind, EventKind::BarrierCross);
}

TEST(RunClosedLoop, StraightChase) {
  // Evader at rest dead ahead at distance d: capture at d - l.
  Scenario sc = test::equilibrium({0.3, 0.5}, {0.0, 3.0});
  sc.evader_policy = {EvaderPolicy::Kind::Truthful, 0.0, 0.0};
  const auto tr = run_closed_loop(sc, test::cache());
  ASSERT_TRUE(tr.capture_time);
  EXPECT_NEAR(*tr.capture_time, 2.5, 1e-9);
  EXPECT_EQ(tr.events.back().kind, EventKind::Capture);
}

TEST(RunClosedLoop, TrajectoryInvariants) {
  const auto tr = run_closed_loop(test::equilibrium({0.3, 0.5}, {2.152, -0.214}), test::cache());
  ASSERT_TRUE(tr.capture_time);
  // Samples sit on the dt grid; the last row is the interpolated capture.
  for (size_t i = 1; i + 1 < tr.samples.size(); ++i)
    ASSERT_NEAR(tr.samples[i].t - tr.samples[i - 1].t, 1e-3, 1e-12);
  const double last = tr.samples.back().t - tr.samples[tr.samples.size() - 2].t;
  EXPECT_GT(last, 0.0);
  EXPECT_LE(last, 1e-3 + 1e-12);
  EXPECT_EQ(tr.samples.back().region.tag, RegionTag::Captured);
  ASSERT_FALSE(tr.events.empty());
  EXPECT_EQ(tr.events.back().kind, EventKind::Capture);
  EXPECT_LT(std::abs(norm(tr.events.back().loc) - 0.5), 1e-6);
  EXPECT_EQ(tr.events.back().t, *tr.capture_time);
}

TEST(RunClosedLoop, ReferenceScenarioCases) {
  const GameParams p1{0.3, 0.5}, p2{0.2, 0.5};
  Scenario truthful = test::equilibrium(p1, {2.152, -0.214});
  truthful.params_low = p2;
  truthful.evader_policy = {EvaderPolicy::Kind::Truthful, 0.2, 0.3};
  Scenario deceptive = truthful;
  deceptive.evader_policy = {EvaderPolicy::Kind::Deceptive, 0.2, 0.3};
  deceptive.pursuer_mode = PursuerMode::Estimating;
  const auto a = run_closed_loop(truthful, test::cache());
  const auto b = run_closed_loop(deceptive, test::cache());
  ASSERT_TRUE(a.capture_time && b.capture_time);
  // Frozen from this implementation; see the README on the time scale.
  EXPECT_NEAR(*a.capture_time, 6.8772, 1e-3);
  EXPECT_NEAR(*b.capture_time, 8.2969, 1e-3);
  EXPECT_GT(*b.capture_time, *a.capture_time);
  EXPECT_EQ(b.count(EventKind::Switch), 1u);
  ASSERT_TRUE(b.switch_point);
  // The switch sits on B(0.3), reached along the mu = 0.2 tributary path.
  EXPECT_LT(geo(0.3, 0.5)->barrier_line().nearest(*b.switch_point).dist, 1e-3);
  const double t_sw = *b.switch_time;
  for (const auto& s : b.samples) {
    if (s.t < t_sw - 1e-12) {
      EXPECT_EQ(s.c.mu_cmd, 0.2);
    } else if (s.t > t_sw + 1e-12) {
      EXPECT_EQ(s.c.mu_cmd, 0.3);
    }
  }
  EXPECT_EQ(b.samples.front().region.tag, RegionTag::Tributary);  // under mu_hat = 0.2
}

TEST(RunClosedLoop, Deterministic) {
  Scenario sc = test::equilibrium({0.3, 0.5}, {2.152, -0.214});
  sc.params_low = {0.2, 0.5};
  sc.evader_policy = {EvaderPolicy::Kind::Deceptive, 0.2, 0.3};
  sc.pursuer_mode = PursuerMode::Estimating;
  const auto a = run_closed_loop(sc, test::cache());
  GeometryCache fresh;
  const auto b = run_closed_loop(sc, fresh);
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (size_t i = 0; i < a.samples.size(); ++i) {
    ASSERT_EQ(a.samples[i].s, b.samples[i].s);
    ASSERT_EQ(a.samples[i].c.u, b.samples[i].c.u);
  }
  EXPECT_EQ(*a.capture_time, *b.capture_time);
}

TEST(RunClosedLoop, OneStepLagConvergesToImmediate) {
  Scenario sc = test::equilibrium({0.3, 0.5}, {2.152, -0.214}, 5e-4);
  sc.params_low = {0.2, 0.5};
  sc.evader_policy = {EvaderPolicy::Kind::Deceptive, 0.2, 0.3};
  sc.pursuer_mode = PursuerMode::Estimating;
  const double imm = *run_closed_loop(sc, test::cache()).capture_time;
  sc.estimator_timing = EstimatorTiming::OneStepLag;
  sc.dt = 1e-4;
  const double lag = *run_closed_loop(sc, test::cache()).capture_time;
  EXPECT_NEAR(lag, imm, 2e-3);
}

TEST(RunClosedLoop, CaptureWithinTenTimesValueOnUsablePart) {
  std::mt19937_64 rng(31);
  for (auto [mu, l] : {std::pair{0.3, 0.5}, std::pair{0.5, 0.4}, std::pair{0.3, 0.8}}) {
    const auto g = geo(mu, l);
    const auto pts = test::sample(rng, 15, -4, 4, -3, 4, [&](RelState q) {
      return g->classify(q).tag != RegionTag::Captured && test::covered(*g, q);
    });
    for (const auto& q : pts) {
      const double v = g->value(q);
      const auto tr = run_closed_loop(test::equilibrium(g->params(), q, 1e-3, 10 * v + 1), test::cache());
      ASSERT_TRUE(tr.capture_time) << q.x << "," << q.y;
      const Vec2 c = tr.events.back().loc;
      const double phi = std::atan2(std::abs(c.x), c.y);
      EXPECT_LE(phi, std::acos(mu) + 0.02) << q.x << "," << q.y;
    }
  }
}

TEST(RunClosedLoop, NonCaptureReported) {
  Scenario sc = test::equilibrium({0.3, 0.5}, {0.0, 5.0}, 1e-3, 1.0);
  const auto tr = run_closed_loop(sc, test::cache());
  EXPECT_FALSE(tr.capture_time);
  EXPECT_NEAR(tr.samples.back().t, 1.0, 1e-9);
}

TEST(RunClosedLoop, RejectsBadScenario) {
  EXPECT_THROW(run_closed_loop(test::equilibrium({0.3, 0.5}, {0.1, 0.1}), test::cache()), std::invalid_argument);
  EXPECT_THROW(run_closed_loop(test::equilibrium({0.3, 0.5}, {2, 2}, 0.0), test::cache()), std::invalid_argument);
}

TEST(TrajectoryCsv, Header) {
  const auto tr = run_closed_loop(test::equilibrium({0.3, 0.5}, {0.0, 1.0}), test::cache());
  std::ostringstream os;
  write_trajectory_csv(os, tr);
  const std::string s = os.str();
  EXPECT_EQ(s.substr(0, s.find('\n')), "t,x,y,u,psi,mu_cmd,mu_hat,region,event");
  EXPECT_NE(s.find(",capture"), std::string::npos);
}
