#include <doctest.h>

#include <cmath>
#include <random>

#include "ks2d/initdata.hpp"
#include "ks2d/solver.hpp"

using namespace ks2d;

namespace {

State random_state(const Grid& g, std::mt19937_64& rng, double u_hi = 2.0, double v_hi = 3.0) {
  std::uniform_real_distribution<double> du(0.0, u_hi), dv(0.0, v_hi);
  State s;
  s.u = Field(g);
  s.v = Field(g);
  for (size_t i = 0; i < s.u.size(); ++i) {
    s.u[i] = du(rng);
    s.v[i] = dv(rng);
  }
  return s;
}

}  // namespace

TEST_CASE("constant states are exact fixed points of step") {
  Grid g = build_grid(24, 24, 1.0, 1.0);
  ModelParams p;
  StepControl ctrl;
  State s{Field(g, 1.3), Field(g, 1.3), 0.0};
  State s2 = step(s, p, 0.1, ctrl);
  CHECK(linf_norm(sub(s2.u, s.u)) <= 1e-13);
  CHECK(linf_norm(sub(s2.v, s.v)) <= 1e-13);
  CHECK(s2.t == doctest::Approx(0.1));
}

TEST_CASE("step conserves mass to solver tolerance") {
  Grid g = build_grid(32, 32, 1.0, 1.0);
  ModelParams p;
  StepControl ctrl;
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    State s = random_state(g, rng);
    const double m0 = integrate(s.u);
    State s2 = step(s, p, 0.05, ctrl);
    CHECK(std::abs(integrate(s2.u) - m0) <= 1e-10 * m0);
  }
}

TEST_CASE("step preserves nonnegativity without clamping") {
  Grid g = build_grid(24, 24, 1.0, 1.0);
  ModelParams p;
  StepControl ctrl;
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> dt_dist(-4.0, -1.0);
  for (int trial = 0; trial < 20; ++trial) {
    State s = random_state(g, rng);
    const double dt = std::pow(10.0, dt_dist(rng));
    for (int k = 0; k < 5; ++k) s = step(s, p, dt, ctrl);
    CHECK(min_value(s.u) >= -1e-14);
    CHECK(min_value(s.v) >= -1e-14);
  }
}

TEST_CASE("logistic source keeps u = 1 invariant and positivity intact") {
  Grid g = build_grid(16, 16, 1.0, 1.0);
  ModelParams p;
  p.sigma = 0.8;
  StepControl ctrl;
  SUBCASE("u = v = 1 stays put") {
    State s{Field(g, 1.0), Field(g, 1.0), 0.0};
    State s2 = step(s, p, 0.1, ctrl);
    CHECK(linf_norm(sub(s2.u, s.u)) <= 1e-12);
  }
  SUBCASE("random data stays nonnegative and approaches carrying capacity") {
    std::mt19937_64 rng(31);
    State s = random_state(g, rng, 0.5, 1.0);
    for (int k = 0; k < 200; ++k) s = step(s, p, 0.05, ctrl);
    CHECK(min_value(s.u) >= -1e-14);
    CHECK(linf_norm(sub(s.u, Field(g, 1.0))) <= 0.05);
  }
}

TEST_CASE("adapt_dt controller") {
  Grid g = build_grid(8, 8, 1.0, 1.0);
  StepControl ctrl;
  ctrl.dt_min = 1e-6;
  ctrl.dt_max = 0.5;
  State a{Field(g, 1.0), Field(g, 1.0), 0.0};

  SUBCASE("no change grows, clamped at dt_max") {
    State b = a;
    b.t = 0.1;
    CHECK(adapt_dt(a, b, 0.1, ctrl) == doctest::Approx(0.12));
    CHECK(adapt_dt(a, b, 0.5, ctrl) == doctest::Approx(0.5));
  }
  SUBCASE("large change shrinks") {
    State b = a;
    b.u = Field(g, 3.0);  // relative change 2 >> cap
    CHECK(adapt_dt(a, b, 0.1, ctrl) == doctest::Approx(0.05));
  }
  SUBCASE("shrink clamps at dt_min") {
    State b = a;
    b.u = Field(g, 3.0);
    CHECK(adapt_dt(a, b, 1.5e-6, ctrl) == doctest::Approx(1e-6));
  }
}

TEST_CASE("run on constant data is bounded with flat diagnostics") {
  Grid g = build_grid(16, 16, 1.0, 1.0);
  ModelParams p;
  StepControl ctrl;
  RunSettings settings;
  settings.t_end = 1.0;
  settings.sample_every = 3;
  Field u0(g, 2.0), v0(g, 2.0);
  RunResult r = run(u0, v0, p, ctrl, settings);
  CHECK(r.outcome == Outcome::Bounded);
  REQUIRE(r.series.size() >= 3);
  for (size_t i = 0; i + 1 < r.series.size(); ++i) {
    CHECK(r.series[i + 1].t > r.series[i].t);  // strictly increasing times
  }
  const SampleRow& first = r.series.front();
  for (const auto& row : r.series) {
    CHECK(row.mass == doctest::Approx(first.mass).epsilon(1e-12));
    CHECK(row.linf_u == doctest::Approx(first.linf_u).epsilon(1e-10));
    CHECK(std::abs(row.f_total - first.f_total) <= 1e-10);
    CHECK(row.e_total <= 1e-12);
    CHECK(row.hminus1 <= 1e-12);
  }
  CHECK(r.series.back().residual_to_date <= 1e-10);
}

TEST_CASE("run is deterministic") {
  Grid g = build_grid(16, 16, 1.0, 1.0);
  ModelParams p;
  StepControl ctrl;
  RunSettings settings;
  settings.t_end = 0.5;
  settings.sample_every = 2;
  auto [u0, v0] = perturbed_constant(2.0, 0.3, 1, 1, g);
  RunResult a = run(u0, v0, p, ctrl, settings);
  RunResult b = run(u0, v0, p, ctrl, settings);
  REQUIRE(a.series.size() == b.series.size());
  for (size_t i = 0; i < a.series.size(); ++i) {
    CHECK(a.series[i].t == b.series[i].t);
    CHECK(a.series[i].mass == b.series[i].mass);
    CHECK(a.series[i].linf_u == b.series[i].linf_u);
    CHECK(a.series[i].f_total == b.series[i].f_total);
    CHECK(a.series[i].hminus1 == b.series[i].hminus1);
  }
  CHECK(a.steps == b.steps);
  for (size_t i = 0; i < a.final_state.u.size(); ++i) {
    CHECK(a.final_state.u[i] == b.final_state.u[i]);
  }
}

TEST_CASE("growth rule classifies a manufactured expansion") {
  // sigma > 0 with tiny initial u grows toward carrying capacity 1; with a
  // blow-up factor below that growth the classifier must fire.
  Grid g = build_grid(12, 12, 1.0, 1.0);
  ModelParams p;
  p.sigma = 5.0;
  StepControl ctrl;
  RunSettings settings;
  settings.t_end = 50.0;
  settings.blowup_factor = 10.0;
  settings.sample_every = 5;
  Field u0(g, 1e-3), v0(g, 1e-3);
  RunResult r = run(u0, v0, p, ctrl, settings);
  CHECK(r.outcome == Outcome::BlowupSuspected);
  CHECK(r.growth_rule_fired);
  CHECK(r.growth_final >= 10.0);
  CHECK(r.t_flagged > 0.0);
}

TEST_CASE("dt_min stall rule fires when the controller is pinned") {
  Grid g = build_grid(12, 12, 1.0, 1.0);
  ModelParams p;
  StepControl ctrl;
  // change_cap impossibly tight and dt floor equal to the initial step: every
  // step requests a shrink while pinned
  ctrl.change_cap = 1e-16;
  ctrl.dt_init = ctrl.dt_min = 1e-3;
  ctrl.dt_max = 1e-3;
  RunSettings settings;
  settings.t_end = 10.0;
  settings.dtmin_consec = 5;
  auto [u0, v0] = perturbed_constant(2.0, 0.3, 1, 1, g);
  RunResult r = run(u0, v0, p, ctrl, settings);
  CHECK(r.outcome == Outcome::BlowupSuspected);
  CHECK(r.dtmin_rule_fired);
  CHECK_FALSE(r.growth_rule_fired);
}

TEST_CASE("fixed-dt runs do not trip the stall rule") {
  Grid g = build_grid(12, 12, 1.0, 1.0);
  ModelParams p;
  StepControl ctrl;
  ctrl.dt_init = ctrl.dt_min = ctrl.dt_max = 0.01;
  RunSettings settings;
  settings.t_end = 0.5;
  settings.dtmin_consec = 3;
  auto [u0, v0] = perturbed_constant(1.0, 0.2, 1, 0, g);
  RunResult r = run(u0, v0, p, ctrl, settings);
  CHECK(r.outcome == Outcome::Bounded);
}

TEST_CASE("supercritical bubble run: mass exact, F monotone, aggregate frozen") {
  Grid g = build_grid(64, 64, 1.0, 1.0);
  ModelParams p;
  StepControl ctrl;
  RunSettings settings;
  settings.t_end = 5.0;
  settings.sample_every = 5;
  auto [u0, v0] = bubble_pair({0.05, 0.0, 0.5, 6.0 * M_PI, 1.0}, g);
  shift_to_nonnegative(v0);
  RunResult r = run(u0, v0, p, ctrl, settings);
  CHECK(r.outcome == Outcome::Bounded);
  CHECK(r.motility_underflow);  // e^{-chi v} collapses at the aggregate
  const double m0 = r.series.front().mass;
  for (const auto& row : r.series) {
    CHECK(std::abs(row.mass - m0) / m0 <= 1e-8);
  }
  for (size_t i = 0; i + 1 < r.series.size(); ++i) {
    CHECK(r.series[i + 1].f_total <= r.series[i].f_total + 1e-8);
  }
  // the peak neither grows nor dissolves on this horizon: frozen aggregate
  CHECK(r.growth_final == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("motility underflow is flagged but the run continues") {
  Grid g = build_grid(12, 12, 1.0, 1.0);
  ModelParams p;
  StepControl ctrl;
  RunSettings settings;
  settings.t_end = 0.1;
  Field u0(g, 1.0), v0(g, 40.0);  // e^{-40} ~ 4e-18 < 1e-12
  RunResult r = run(u0, v0, p, ctrl, settings);
  CHECK(r.motility_underflow);
  CHECK(r.outcome == Outcome::Bounded);
}

TEST_CASE("max_steps cap is reported") {
  Grid g = build_grid(12, 12, 1.0, 1.0);
  ModelParams p;
  StepControl ctrl;
  RunSettings settings;
  settings.t_end = 1.0;
  settings.max_steps = 7;
  auto [u0, v0] = perturbed_constant(1.0, 0.2, 1, 1, g);
  RunResult r = run(u0, v0, p, ctrl, settings);
  CHECK(r.outcome == Outcome::MaxStepsReached);
  CHECK(r.steps == 7);
}

TEST_CASE("dissipation inequality check") {
  SUBCASE("constant-state series has zero violation") {
    std::vector<SampleRow> rows;
    for (int i = 0; i <= 5; ++i) {
      SampleRow r;
      r.t = 0.2 * i;
      r.hminus1 = 0.0;
      r.weighted_l2 = 0.0;
      rows.push_back(r);
    }
    DissipationCheckReport rep = dissipation_inequality_check(rows, 2.0, 1.0);
    CHECK(rep.max_violation == 0.0);
  }
  SUBCASE("manufactured violation is detected at the right window") {
    std::vector<SampleRow> rows(3);
    rows[0].t = 0.0;
    rows[1].t = 1.0;
    rows[2].t = 2.0;
    rows[0].hminus1 = 0.0;
    rows[1].hminus1 = 0.0;
    rows[2].hminus1 = 16.0;  // jumps by 16 > bound 8 over the second window
    const double mass0 = 2.0, area = 1.0;  // bound rate = 2*4/1 = 8
    DissipationCheckReport rep = dissipation_inequality_check(rows, mass0, area);
    CHECK(rep.worst_window == 1);
    CHECK(rep.max_violation == doctest::Approx(1.0));  // (16-8)/8
  }
}
