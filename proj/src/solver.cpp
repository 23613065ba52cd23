#include "ks2d/solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ks2d {

void StepControl::validate() const {
  if (!(dt_min > 0.0) || !(dt_min <= dt_init) || !(dt_init <= dt_max)) {
    throw DomainError("StepControl: need 0 < dt_min <= dt_init <= dt_max");
  }
  if (!(growth_factor > 1.0)) throw DomainError("StepControl: growth_factor must be > 1");
  if (!(shrink_factor > 0.0) || !(shrink_factor < 1.0)) {
    throw DomainError("StepControl: shrink_factor must be in (0, 1)");
  }
  if (!(change_cap > 0.0)) throw DomainError("StepControl: change_cap must be positive");
  if (!(solver_tol > 0.0)) throw DomainError("StepControl: solver_tol must be positive");
}

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Bounded: return "bounded";
    case Outcome::BlowupSuspected: return "blowup_suspected";
    case Outcome::MaxStepsReached: return "max_steps_reached";
    case Outcome::SolverFailure: return "solver_failure";
  }
  return "unknown";
}

namespace {

// Exact per-cell solve of z = u + dt*sigma*z*(1-z), taking the root that is
// continuous in u at z = u (dt -> 0). Positivity-preserving for u >= 0.
double logistic_substep(double u, double dt, double sigma) {
  if (u == 0.0) return 0.0;
  const double s = dt * sigma;
  const double b = 1.0 - s;
  return 2.0 * u / (b + std::sqrt(b * b + 4.0 * s * u));
}

struct StepAux {
  double min_motility = 0.0;
  double linf_change = 0.0;  // relative linf change of u
};

State step_impl(const State& state, const ModelParams& params, double dt,
                const StepControl& ctrl, StepAux* aux) {
  if (!(dt > 0.0)) throw DomainError("step: dt must be positive");
  require_same_grid(state.u, state.v, "step");

  const Field gamma = motility_eval(params, state.v);

  const double inv_dt = 1.0 / dt;
  Field rhs_u = scale(state.u, inv_dt);
  Field u_next = solve_weighted_implicit(inv_dt, gamma, rhs_u, ctrl.solver_tol, &state.u);

  if (params.sigma > 0.0) {
    for (size_t i = 0; i < u_next.size(); ++i) {
      u_next[i] = logistic_substep(u_next[i], dt, params.sigma);
    }
  }

  Field rhs_v(state.v.grid());
  for (size_t i = 0; i < rhs_v.size(); ++i) rhs_v[i] = state.v[i] * inv_dt + u_next[i];
  Field v_next = solve_helmholtz(inv_dt + 1.0, rhs_v, ctrl.solver_tol, &state.v);

  // The M-matrix structure guarantees nonnegativity; there is no clamping
  // anywhere, so a dip below the floor is a solver-accuracy fault and must
  // surface instead of being hidden.
  const double floor_u = min_value(u_next), floor_v = min_value(v_next);
  if (floor_u < -1e-14 || floor_v < -1e-14) {
    std::ostringstream msg;
    msg << "step: positivity violated (min u " << floor_u << ", min v " << floor_v
        << "); the linear-solver tolerance is too loose for this state";
    throw SolverError(msg.str(), std::min(floor_u, floor_v), 0);
  }

  if (aux) {
    aux->min_motility = min_value(gamma);
    double worst = 0.0;
    for (size_t i = 0; i < u_next.size(); ++i) {
      worst = std::max(worst, std::abs(u_next[i] - state.u[i]));
    }
    aux->linf_change = worst / std::max(linf_norm(state.u), 1e-300);
  }

  return State{std::move(u_next), std::move(v_next), state.t + dt};
}

}  // namespace

State step(const State& state, const ModelParams& params, double dt,
           const StepControl& ctrl) {
  ctrl.validate();
  return step_impl(state, params, dt, ctrl, nullptr);
}

double adapt_dt(const State& prev, const State& next, double dt, const StepControl& ctrl) {
  double worst = 0.0;
  for (size_t i = 0; i < next.u.size(); ++i) {
    worst = std::max(worst, std::abs(next.u[i] - prev.u[i]));
  }
  const double change = worst / std::max(linf_norm(prev.u), 1e-300);
  const double factor = change > ctrl.change_cap ? ctrl.shrink_factor : ctrl.growth_factor;
  return std::clamp(dt * factor, ctrl.dt_min, ctrl.dt_max);
}

RunResult run(const Field& u0, const Field& v0, const ModelParams& params,
              const StepControl& ctrl, const RunSettings& settings) {
  ctrl.validate();
  params.validate();
  require_same_grid(u0, v0, "run");
  require_finite(u0, "run(u0)");
  require_finite(v0, "run(v0)");
  if (min_value(u0) < 0.0 || min_value(v0) < 0.0) {
    throw DomainError("run: initial data must be nonnegative");
  }
  if (!(settings.t_end > 0.0)) throw DomainError("run: t_end must be positive");
  if (!(settings.blowup_factor > 0.0)) throw DomainError("run: blowup_factor must be positive");
  if (settings.dtmin_consec < 1) throw DomainError("run: dtmin_consec must be >= 1");
  if (settings.sample_every < 1) throw DomainError("run: sample_every must be >= 1");
  if (settings.max_steps < 1) throw DomainError("run: max_steps must be >= 1");

  RunResult res;
  res.linf_u0 = linf_norm(u0);
  const double area = u0.grid().area();
  const double blowup_level = settings.blowup_factor * res.linf_u0;

  State state{u0, v0, 0.0};
  std::vector<EnergySample> energy_series;

  // The H^-1 potential changes slowly between samples; warm-starting its
  // Poisson solve from the previous potential makes per-sample cost small.
  Field phi_cache(u0.grid());
  bool phi_valid = false;

  auto take_sample = [&](double min_motility) {
    if (!res.series.empty() && res.series.back().t == state.t) return;
    SampleRow row;
    row.t = state.t;
    row.mass = integrate(state.u);
    row.linf_u = linf_norm(state.u);
    row.linf_v = linf_norm(state.v);
    row.min_motility = min_motility;
    const EnergyReport er = energy_report(state.u, state.v, params);
    row.f_total = er.f_total;
    row.e_total = er.e_total;

    const double ubar = row.mass / area;
    Field dev = add_scalar(state.u, -ubar);
    const double noise = 1e-14 * std::max(1.0, row.linf_u) * std::sqrt(area);
    if (l2_norm(dev) <= noise) {
      row.hminus1 = 0.0;
    } else {
      Field phi = solve_helmholtz(0.0, dev, ctrl.solver_tol,
                                  phi_valid ? &phi_cache : nullptr);
      row.hminus1 = grad_sq_integral(phi);
      phi_cache = std::move(phi);
      phi_valid = true;
    }
    {
      double acc = 0.0, comp = 0.0;
      for (size_t i = 0; i < dev.size(); ++i) {
        const double x = std::exp(-params.chi * state.v[i]) * dev[i] * dev[i];
        const double y = x - comp;
        const double t2 = acc + y;
        comp = (t2 - acc) - y;
        acc = t2;
      }
      row.weighted_l2 = acc * u0.grid().cell_area();
    }

    energy_series.push_back({row.t, row.f_total, row.e_total});
    row.residual_to_date =
        energy_series.size() >= 3 ? energy_identity_residual(energy_series) : 0.0;
    res.series.push_back(row);
  };

  {
    const Field gamma0 = motility_eval(params, v0);
    const double mg = min_value(gamma0);
    if (mg < 1e-12) res.motility_underflow = true;
    take_sample(mg);
  }

  double dt = ctrl.dt_init;
  int consec_stalled = 0;
  long steps_since_sample = 0;
  const double t_eps = 1e-12 * std::max(1.0, settings.t_end);

  while (state.t < settings.t_end - t_eps) {
    if (res.steps >= settings.max_steps) {
      res.outcome = Outcome::MaxStepsReached;
      take_sample(res.series.back().min_motility);
      res.final_state = std::move(state);
      res.final_dt = dt;
      res.growth_final = res.series.back().linf_u / std::max(res.linf_u0, 1e-300);
      return res;
    }

    const double dt_attempt = std::min(dt, settings.t_end - state.t);
    StepAux aux;
    State next;
    try {
      next = step_impl(state, params, dt_attempt, ctrl, &aux);
    } catch (const SolverError& e) {
      res.outcome = Outcome::SolverFailure;
      res.solver_message = e.what();
      take_sample(res.series.back().min_motility);
      res.final_state = std::move(state);
      res.final_dt = dt_attempt;
      res.growth_final = res.series.back().linf_u / std::max(res.linf_u0, 1e-300);
      return res;
    }

    ++res.steps;
    ++steps_since_sample;
    if (aux.min_motility < 1e-12) res.motility_underflow = true;

    // The stall rule counts only steps where a shrink was requested while dt
    // was already pinned at dt_min; a plain dt == dt_min test would flag
    // fixed-dt runs (dt_min = dt_max).
    const bool wants_shrink = aux.linf_change > ctrl.change_cap;
    const bool pinned = dt_attempt <= ctrl.dt_min * (1.0 + 1e-12);
    consec_stalled = (wants_shrink && pinned) ? consec_stalled + 1 : 0;

    dt = std::clamp(dt * (wants_shrink ? ctrl.shrink_factor : ctrl.growth_factor),
                    ctrl.dt_min, ctrl.dt_max);

    state = std::move(next);

    const double linf_u = linf_norm(state.u);
    const bool growth_hit = linf_u >= blowup_level;
    const bool stall_hit = consec_stalled >= settings.dtmin_consec;

    if (steps_since_sample >= settings.sample_every || growth_hit || stall_hit ||
        state.t >= settings.t_end - t_eps) {
      take_sample(aux.min_motility);
      steps_since_sample = 0;
    }

    if (growth_hit || stall_hit) {
      res.outcome = Outcome::BlowupSuspected;
      res.growth_rule_fired = growth_hit;
      res.dtmin_rule_fired = stall_hit;
      res.t_flagged = state.t;
      res.final_state = std::move(state);
      res.final_dt = dt;
      res.growth_final = linf_u / std::max(res.linf_u0, 1e-300);
      return res;
    }
  }

  res.outcome = Outcome::Bounded;
  res.final_dt = dt;
  res.growth_final = linf_norm(state.u) / std::max(res.linf_u0, 1e-300);
  res.final_state = std::move(state);
  return res;
}

DissipationCheckReport dissipation_inequality_check(const std::vector<SampleRow>& series,
                                                    double mass0, double area) {
  DissipationCheckReport rep;
  const double rate_bound = 2.0 * mass0 * mass0 / area;
  for (size_t i = 0; i + 1 < series.size(); ++i) {
    const SampleRow& a = series[i];
    const SampleRow& b = series[i + 1];
    const double dt = b.t - a.t;
    if (!(dt > 0.0)) continue;
    const double lhs = (b.hminus1 - a.hminus1) + (a.weighted_l2 + b.weighted_l2) * dt;
    const double bound = rate_bound * dt;
    const double violation = (lhs - bound) / bound;
    if (violation > rep.max_violation) {
      rep.max_violation = violation;
      rep.worst_window = static_cast<int>(i);
    }
  }
  return rep;
}

}  // namespace ks2d
