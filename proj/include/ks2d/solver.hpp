#pragma once

// Semi-implicit time integration of
//
//   u_t = L(gamma(v) u) [+ sigma u (1-u)]
//   v_t = L v + u - v
//
// with first-order IMEX splitting: gamma is lagged at v^n, the cell equation
// is solved implicitly in flux form (positivity and exact mass conservation
// come from the M-matrix structure of the implicit operator), and the signal
// equation then uses u^{n+1}:
//
//   gamma^n  = motility_eval(v^n)
//   u^{n+1}  : (1/dt) u - L(gamma^n u) = u^n/dt      [+ pointwise logistic substep]
//   v^{n+1}  : (1/dt + 1) v - L v = v^n/dt + u^{n+1}
//
// Time steps adapt on the relative linf change of u per step. Blow-up style
// growth is classified heuristically: either linf(u) exceeds a configured
// multiple of linf(u0), or the controller keeps requesting shrinks while
// pinned at dt_min for a configured number of consecutive steps. A run can
// only flag unbounded growth; it never claims finite-time blow-up.

#include <string>
#include <vector>

#include "ks2d/energy.hpp"
#include "ks2d/fields.hpp"
#include "ks2d/model.hpp"

namespace ks2d {

struct State {
  Field u, v;
  double t = 0.0;
};

struct StepControl {
  double dt_init = 1e-3;
  double dt_min = 1e-7;
  double dt_max = 0.25;
  double growth_factor = 1.2;
  double shrink_factor = 0.5;
  double change_cap = 0.1;    // max relative linf change of u per step
  double solver_tol = 1e-12;  // linear-solve relative residual inside step()

  // Throws DomainError unless 0 < dt_min <= dt_init <= dt_max,
  // growth_factor > 1, 0 < shrink_factor < 1, change_cap > 0, solver_tol > 0.
  void validate() const;
};

enum class Outcome { Bounded, BlowupSuspected, MaxStepsReached, SolverFailure };

const char* outcome_name(Outcome o);

struct SampleRow {
  double t = 0.0;
  double mass = 0.0;
  double linf_u = 0.0;
  double linf_v = 0.0;
  double min_motility = 0.0;
  double f_total = 0.0;        // F
  double e_total = 0.0;        // E
  double hminus1 = 0.0;        // hminus1_norm_sq of u - mean(u)
  double weighted_l2 = 0.0;    // int e^{-chi v} (u - mean(u))^2
  double residual_to_date = 0.0;  // energy-identity residual over samples so far
};

struct RunSettings {
  double t_end = 10.0;
  double blowup_factor = 1e4;  // growth threshold relative to linf(u0)
  int dtmin_consec = 20;       // consecutive pinned-shrink steps before flagging
  long sample_every = 10;      // steps between diagnostic samples
  long max_steps = 5'000'000;
};

struct RunResult {
  Outcome outcome = Outcome::Bounded;
  State final_state;
  std::vector<SampleRow> series;

  // Classification metadata: which thresholds were hit and when.
  double linf_u0 = 0.0;
  double growth_final = 1.0;          // linf(u_end)/linf(u0)
  bool growth_rule_fired = false;
  bool dtmin_rule_fired = false;
  bool motility_underflow = false;    // min gamma dipped below 1e-12 at some step
  double t_flagged = -1.0;            // time at which a blow-up rule fired
  long steps = 0;
  double final_dt = 0.0;
  std::string solver_message;         // filled on Outcome::SolverFailure
};

// One IMEX step. Preserves nonnegativity and conserves integrate(u) up to the
// linear-solver tolerance when sigma = 0. Constant states are exact fixed
// points. Throws SolverError on linear-solver failure.
State step(const State& state, const ModelParams& params, double dt,
           const StepControl& ctrl);

// Posteriori controller: shrink when the relative linf change of u exceeds
// change_cap, grow otherwise; result clamped to [dt_min, dt_max].
double adapt_dt(const State& prev, const State& next, double dt,
                const StepControl& ctrl);

RunResult run(const Field& u0, const Field& v0, const ModelParams& params,
              const StepControl& ctrl, const RunSettings& settings);

struct DissipationCheckReport {
  double max_violation = 0.0;   // max over windows of (lhs - bound)/bound, clamped at 0
  int worst_window = -1;        // index of the left sample of the worst window
};

// Windowed check of H(t2) - H(t1) + 2 int weighted_l2 dt <= (2 M0^2/|Omega|)(t2-t1)
// over consecutive samples, with the time integral by trapezoid.
DissipationCheckReport dissipation_inequality_check(const std::vector<SampleRow>& series,
                                                    double mass0, double area);

}  // namespace ks2d
