#include "ks2d/experiments.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "ks2d/energy.hpp"
#include "ks2d/initdata.hpp"
#include "ks2d/io.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace ks2d {

// ---------------------------------------------------------------------------
// library-level experiment logic
// ---------------------------------------------------------------------------

BubbleEnergyResult bubble_energy_experiment(double chi, double mass,
                                            const std::vector<double>& eps_list,
                                            double x0, double y0, const Grid& g) {
  BubbleEnergyResult res;
  res.target_slope = 2.0 * (4.0 * M_PI / chi - mass);
  for (double eps : eps_list) {
    BubbleSpec spec{eps, x0, y0, mass, chi};
    if (!bubble_resolved(spec, g)) {
      res.dropped.push_back(eps);
      continue;
    }
    auto [U, V] = bubble_pair(spec, g);
    const EnergyReport er = lyapunov(U, V, chi);
    res.rows.push_back({eps, er.f_total, er.f_entropy, er.f_quadratic, er.f_cross});
  }
  if (res.rows.size() < 3) {
    throw ConfigError("bubble_energy_experiment: fewer than 3 resolved epsilon values "
                      "(grid too coarse for the requested list)");
  }
  // least squares of F against ln(1/eps)
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(res.rows.size());
  for (const auto& r : res.rows) {
    const double x = std::log(1.0 / r.epsilon);
    sx += x;
    sy += r.f_total;
    sxx += x * x;
    sxy += x * r.f_total;
  }
  res.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  res.intercept = (sy - res.slope * sx) / n;
  res.rel_deviation = res.target_slope != 0.0
                          ? std::abs(res.slope - res.target_slope) / std::abs(res.target_slope)
                          : std::numeric_limits<double>::infinity();
  return res;
}

BisectionResult critical_mass_bisection(double m_lo, double m_hi, int iterations,
                                        const TrialRunner& trial) {
  if (!(m_lo > 0.0) || !(m_hi > m_lo)) {
    throw DomainError("critical_mass_bisection: need 0 < m_lo < m_hi");
  }
  if (iterations < 1) throw DomainError("critical_mass_bisection: iterations must be >= 1");

  BisectionResult res;
  int index = 0;
  auto classify = [&](double mass) {
    RunResult r = trial(mass);
    TrialRecord rec;
    rec.index = index++;
    rec.mass = mass;
    rec.outcome = r.outcome;
    rec.growth = r.growth_final;
    rec.t_final = r.final_state.t;
    rec.steps = r.steps;
    rec.motility_underflow = r.motility_underflow;
    res.trials.push_back(rec);
    if (r.outcome == Outcome::SolverFailure) ++res.solver_failures;
    return r.outcome;
  };

  const Outcome lo_out = classify(m_lo);
  const Outcome hi_out = classify(m_hi);
  if (lo_out != Outcome::Bounded || hi_out != Outcome::BlowupSuspected) {
    std::ostringstream msg;
    msg << "critical_mass_bisection: endpoint classifications must be "
        << "(bounded, blowup_suspected); got M_lo=" << m_lo << " -> "
        << outcome_name(lo_out) << ", M_hi=" << m_hi << " -> " << outcome_name(hi_out);
    throw BracketError(msg.str());
  }

  double lo = m_lo, hi = m_hi;
  for (int it = 0; it < iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    const Outcome out = classify(mid);
    if (out == Outcome::SolverFailure) {
      // recorded above; keep the bracket, spend the iteration
      std::cerr << "warning: trial at M=" << mid << " failed in the linear solver; "
                << "bracket kept unchanged\n";
      continue;
    }
    if (out == Outcome::BlowupSuspected) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  res.bracket_lo = lo;
  res.bracket_hi = hi;
  res.estimate = 0.5 * (lo + hi);
  return res;
}

// ---------------------------------------------------------------------------
// config -> objects
// ---------------------------------------------------------------------------

namespace {

Grid grid_from(const Config& cfg) {
  return build_grid(static_cast<int>(cfg.get_int("grid", "nx")),
                    static_cast<int>(cfg.get_int("grid", "ny")),
                    cfg.get_real("grid", "lx"), cfg.get_real("grid", "ly"));
}

ModelParams model_from(const Config& cfg) {
  ModelParams p;
  p.chi = cfg.get_real_or("model", "chi", 1.0);
  const std::string law = cfg.get_string_or("model", "motility", "exponential");
  if (law == "exponential") {
    p.law = MotilityLaw::Exponential;
  } else if (law == "algebraic") {
    p.law = MotilityLaw::Algebraic;
    p.k = cfg.get_real_or("model", "k", 1.0);
  } else {
    throw ConfigError("model.motility must be 'exponential' or 'algebraic', got '" + law + "'");
  }
  p.sigma = cfg.get_real_or("model", "sigma", 0.0);
  p.validate();
  return p;
}

StepControl ctrl_from(const Config& cfg) {
  StepControl c;
  c.dt_init = cfg.get_real_or("step", "dt_init", c.dt_init);
  c.dt_min = cfg.get_real_or("step", "dt_min", c.dt_min);
  c.dt_max = cfg.get_real_or("step", "dt_max", c.dt_max);
  c.growth_factor = cfg.get_real_or("step", "growth", c.growth_factor);
  c.shrink_factor = cfg.get_real_or("step", "shrink", c.shrink_factor);
  c.change_cap = cfg.get_real_or("step", "change_cap", c.change_cap);
  c.solver_tol = cfg.get_real_or("step", "solver_tol", c.solver_tol);
  c.validate();
  return c;
}

RunSettings settings_from(const Config& cfg) {
  RunSettings s;
  s.t_end = cfg.get_real("run", "t_end");
  s.blowup_factor = cfg.get_real_or("run", "blowup_factor", s.blowup_factor);
  s.dtmin_consec = static_cast<int>(cfg.get_int_or("run", "dtmin_consec", s.dtmin_consec));
  s.sample_every = cfg.get_int_or("run", "sample_every", s.sample_every);
  s.max_steps = cfg.get_int_or("run", "max_steps", s.max_steps);
  return s;
}

struct InitData {
  Field u0, v0;
  ordered_json desc;
};

InitData init_from(const Config& cfg, const Grid& g, const ModelParams& model) {
  InitData d;
  const std::string kind = cfg.get_string("init", "kind");
  if (kind == "perturbed" || kind == "constant") {
    const double mass = cfg.get_real("init", "mass");
    const double amp = kind == "constant" ? 0.0 : cfg.get_real_or("init", "amp", 0.1);
    const int kx = static_cast<int>(cfg.get_int_or("init", "kx", 1));
    const int ky = static_cast<int>(cfg.get_int_or("init", "ky", 1));
    auto [u0, v0] = perturbed_constant(mass, amp, kx, ky, g);
    d.u0 = std::move(u0);
    d.v0 = std::move(v0);
    d.desc = {{"kind", kind}, {"mass", mass}, {"amp", amp}, {"kx", kx}, {"ky", ky}};
  } else if (kind == "bubble") {
    BubbleSpec spec;
    spec.epsilon = cfg.get_real("init", "epsilon");
    spec.x0 = cfg.get_real("init", "x0");
    spec.y0 = cfg.get_real("init", "y0");
    spec.mass = cfg.get_real("init", "mass");
    spec.chi = model.chi;
    const bool shift = cfg.get_bool_or("init", "shift_nonneg", true);
    if (!bubble_resolved(spec, g)) {
      std::cerr << "warning: grid (h=" << g.hx() << "," << g.hy()
                << ") does not resolve bubble epsilon=" << spec.epsilon << "\n";
    }
    auto [U, V] = bubble_pair(spec, g);
    double applied = 0.0;
    if (shift) applied = shift_to_nonnegative(V);
    d.u0 = std::move(U);
    d.v0 = std::move(V);
    d.desc = {{"kind", "bubble"},        {"epsilon", spec.epsilon},
              {"x0", spec.x0},            {"y0", spec.y0},
              {"mass", spec.mass},        {"shift_nonneg", shift},
              {"shift_applied", applied}, {"resolved", bubble_resolved(spec, g)}};
  } else if (kind == "file") {
    const std::string up = cfg.get_string("init", "u_path");
    const std::string vp = cfg.get_string("init", "v_path");
    auto [u0, v0] = load_fields(up, vp);
    if (!(u0.grid() == g)) {
      throw ConfigError("init files live on a different grid than [grid] declares");
    }
    d.u0 = std::move(u0);
    d.v0 = std::move(v0);
    d.desc = {{"kind", "file"}, {"u_path", up}, {"v_path", vp}};
  } else {
    throw ConfigError("init.kind must be perturbed|constant|bubble|file, got '" + kind + "'");
  }
  return d;
}

ordered_json grid_json(const Grid& g) {
  return {{"nx", g.nx}, {"ny", g.ny}, {"lx", g.lx}, {"ly", g.ly}};
}

ordered_json model_json(const ModelParams& p) {
  return {{"chi", p.chi},
          {"motility", p.law == MotilityLaw::Exponential ? "exponential" : "algebraic"},
          {"k", p.k},
          {"sigma", p.sigma}};
}

ordered_json ctrl_json(const StepControl& c) {
  return {{"dt_init", c.dt_init},       {"dt_min", c.dt_min},
          {"dt_max", c.dt_max},         {"growth", c.growth_factor},
          {"shrink", c.shrink_factor},  {"change_cap", c.change_cap},
          {"solver_tol", c.solver_tol}};
}

ordered_json settings_json(const RunSettings& s) {
  return {{"t_end", s.t_end},
          {"blowup_factor", s.blowup_factor},
          {"dtmin_consec", s.dtmin_consec},
          {"sample_every", s.sample_every},
          {"max_steps", s.max_steps}};
}

ordered_json run_summary_json(const RunResult& r) {
  return {{"outcome", outcome_name(r.outcome)},
          {"steps", r.steps},
          {"t_final", r.final_state.t},
          {"linf_u0", r.linf_u0},
          {"growth_final", r.growth_final},
          {"growth_rule_fired", r.growth_rule_fired},
          {"dtmin_rule_fired", r.dtmin_rule_fired},
          {"motility_underflow", r.motility_underflow},
          {"t_flagged", r.t_flagged},
          {"samples", r.series.size()},
          {"solver_message", r.solver_message}};
}

void write_series_csv(const std::vector<SampleRow>& rows, const std::string& path) {
  SeriesWriter w(path);
  for (const auto& r : rows) w.append(r);
}

struct CheckFailure {
  std::string message;
};

struct CliOptions {
  std::string config_path;
  std::string out_override;
  bool check = false;
  bool timings = false;
};

struct ExperimentIo {
  Config cfg;
  std::string out_dir;
  std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();
  bool timings = false;

  std::optional<double> wall_clock() const {
    if (!timings) return std::nullopt;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  }
};

ExperimentIo open_experiment(const CliOptions& opt, const std::string& kind) {
  ExperimentIo io{Config::parse_file(opt.config_path), "", {}, opt.timings};
  const std::string declared = io.cfg.get_string("experiment", "kind");
  if (declared != kind) {
    throw ConfigError(opt.config_path + ": [experiment].kind is '" + declared +
                      "' but the subcommand expects '" + kind + "'");
  }
  io.cfg.get_int_or("experiment", "seed", 0);  // reserved, echoed via config_text
  io.out_dir = opt.out_override.empty()
                   ? io.cfg.get_string_or("experiment", "out_dir", "out/" + kind)
                   : opt.out_override;
  fs::create_directories(io.out_dir);
  return io;
}

// --- run ---------------------------------------------------------------

int do_run(const CliOptions& opt) {
  ExperimentIo io = open_experiment(opt, "run");
  const Grid g = grid_from(io.cfg);
  const ModelParams model = model_from(io.cfg);
  const StepControl ctrl = ctrl_from(io.cfg);
  const RunSettings settings = settings_from(io.cfg);
  InitData init = init_from(io.cfg, g, model);

  // [check] keys are parsed unconditionally so typos surface even without --check
  const std::string expected_outcome = io.cfg.get_string_or("check", "expected_outcome", "");
  const double mass_rel_tol = io.cfg.get_real_or("check", "mass_rel_tol", -1.0);
  const double linf_rel_dev = io.cfg.get_real_or("check", "linf_rel_dev", -1.0);
  const bool check_f_monotone = io.cfg.get_bool_or("check", "f_monotone", false);
  const double max_violation = io.cfg.get_real_or("check", "max_dissipation_violation", -1.0);
  io.cfg.ensure_all_consumed();

  write_snapshot(init.u0, {0.0}, io.out_dir + "/u0.snap");
  write_snapshot(init.v0, {0.0}, io.out_dir + "/v0.snap");

  const RunResult res = run(init.u0, init.v0, model, ctrl, settings);

  write_series_csv(res.series, io.out_dir + "/series.csv");
  write_snapshot(res.final_state.u, {res.final_state.t}, io.out_dir + "/final_u.snap");
  write_snapshot(res.final_state.v, {res.final_state.t}, io.out_dir + "/final_v.snap");

  const double mass0 = res.series.front().mass;
  const DissipationCheckReport dis = dissipation_inequality_check(res.series, mass0, g.area());

  ManifestInfo mi;
  mi.experiment = "run";
  mi.config_text = io.cfg.text();
  mi.resolved = {{"grid", grid_json(g)},
                 {"model", model_json(model)},
                 {"step", ctrl_json(ctrl)},
                 {"run", settings_json(settings)},
                 {"init", init.desc}};
  mi.summary = run_summary_json(res);
  mi.summary["identity_residual"] = res.series.back().residual_to_date;
  mi.summary["dissipation_max_violation"] = dis.max_violation;
  mi.wall_clock_s = io.wall_clock();
  write_manifest(mi, io.out_dir + "/manifest.json");

  std::cout << "run: outcome=" << outcome_name(res.outcome) << " steps=" << res.steps
            << " t=" << res.final_state.t << " growth=" << res.growth_final
            << " samples=" << res.series.size() << "\n";

  if (res.outcome == Outcome::SolverFailure) {
    std::cerr << "solver failure: " << res.solver_message << "\n";
    return 2;
  }

  if (opt.check) {
    std::vector<std::string> fails;
    if (!expected_outcome.empty() && expected_outcome != outcome_name(res.outcome)) {
      fails.push_back("outcome " + std::string(outcome_name(res.outcome)) + " != expected " +
                      expected_outcome);
    }
    if (mass_rel_tol >= 0.0) {
      double worst = 0.0;
      for (const auto& r : res.series) {
        worst = std::max(worst, std::abs(r.mass - mass0) / mass0);
      }
      if (worst > mass_rel_tol) {
        fails.push_back("mass drift " + format_g17(worst) + " > " + format_g17(mass_rel_tol));
      }
    }
    if (linf_rel_dev >= 0.0) {
      const double target = mass0 / g.area();
      const double dev = std::abs(res.series.back().linf_u - target) / target;
      if (dev > linf_rel_dev) {
        fails.push_back("linf deviation " + format_g17(dev) + " > " + format_g17(linf_rel_dev));
      }
    }
    if (check_f_monotone) {
      for (size_t i = 0; i + 1 < res.series.size(); ++i) {
        if (res.series[i + 1].f_total > res.series[i].f_total + 1e-8) {
          fails.push_back("F increased at sample " + std::to_string(i + 1));
          break;
        }
      }
    }
    if (max_violation >= 0.0 && dis.max_violation > max_violation) {
      fails.push_back("dissipation violation " + format_g17(dis.max_violation) + " > " +
                      format_g17(max_violation));
    }
    if (!fails.empty()) {
      for (const auto& f : fails) std::cerr << "check failed: " << f << "\n";
      return 3;
    }
    std::cout << "all checks passed\n";
  }
  return 0;
}

// --- steady ------------------------------------------------------------

int do_steady(const CliOptions& opt) {
  ExperimentIo io = open_experiment(opt, "steady");
  const Grid g = grid_from(io.cfg);
  const ModelParams model = model_from(io.cfg);

  SteadyOptions sopt;
  sopt.damping = io.cfg.get_real_or("steady", "damping", sopt.damping);
  sopt.tol = io.cfg.get_real_or("steady", "tol", sopt.tol);
  sopt.max_iter = io.cfg.get_int_or("steady", "max_iter", sopt.max_iter);

  std::vector<double> masses;
  if (io.cfg.has("steady", "masses")) {
    masses = io.cfg.get_real_list("steady", "masses");
  } else {
    masses.push_back(io.cfg.get_real("steady", "mass"));
  }

  const std::string seed_kind = io.cfg.get_string_or("steady", "seed_kind", "zero");
  std::optional<BubbleSpec> seed_spec;
  if (seed_kind == "bubble") {
    BubbleSpec spec;
    spec.epsilon = io.cfg.get_real("steady", "epsilon");
    spec.x0 = io.cfg.get_real("steady", "x0");
    spec.y0 = io.cfg.get_real("steady", "y0");
    spec.chi = model.chi;
    seed_spec = spec;
  } else if (seed_kind != "zero") {
    throw ConfigError("steady.seed_kind must be 'zero' or 'bubble'");
  }

  const bool require_converged = io.cfg.get_bool_or("check", "require_converged", true);
  const double residual_max = io.cfg.get_real_or("check", "residual_max", -1.0);
  const double energy_abs_tol = io.cfg.get_real_or("check", "energy_abs_tol", -1.0);
  io.cfg.ensure_all_consumed();

  std::vector<SteadyScanRow> rows;
  SteadyResult last;
  for (double m : masses) {
    const Field* seed = nullptr;
    Field seed_field;
    if (seed_spec) {
      BubbleSpec spec = *seed_spec;
      spec.mass = m;
      seed_field = bubble_pair(spec, g).second;
      seed = &seed_field;
    }
    SteadyResult r = steady_solve(m, model.chi, g, sopt, seed);
    rows.push_back({m, 0, r.residual, r.energy.f_total, r.iterations, r.converged});
    last = std::move(r);
  }

  {
    std::ofstream out(io.out_dir + "/steady.csv");
    if (!out) throw IoError("cannot open " + io.out_dir + "/steady.csv");
    out << "mass,residual,F,iterations,converged\n";
    for (const auto& r : rows) {
      out << format_g17(r.mass) << ',' << format_g17(r.residual) << ','
          << format_g17(r.f_total) << ',' << r.iterations << ','
          << (r.converged ? 1 : 0) << "\n";
    }
  }
  if (masses.size() == 1) {
    write_snapshot(last.V, {0.0}, io.out_dir + "/steady_V.snap");
    write_snapshot(last.U, {0.0}, io.out_dir + "/steady_U.snap");
  }

  ManifestInfo mi;
  mi.experiment = "steady";
  mi.config_text = io.cfg.text();
  mi.resolved = {{"grid", grid_json(g)},
                 {"model", model_json(model)},
                 {"steady",
                  {{"damping", sopt.damping},
                   {"tol", sopt.tol},
                   {"max_iter", sopt.max_iter},
                   {"seed_kind", seed_kind},
                   {"masses", masses}}}};
  ordered_json jrows = ordered_json::array();
  for (const auto& r : rows) {
    jrows.push_back({{"mass", r.mass},
                     {"residual", r.residual},
                     {"F", r.f_total},
                     {"iterations", r.iterations},
                     {"converged", r.converged}});
  }
  mi.summary = {{"rows", jrows}};
  mi.wall_clock_s = io.wall_clock();
  write_manifest(mi, io.out_dir + "/manifest.json");

  for (const auto& r : rows) {
    std::cout << "steady: M=" << r.mass << " residual=" << r.residual
              << " F=" << r.f_total << " converged=" << (r.converged ? "yes" : "no")
              << " iterations=" << r.iterations << "\n";
  }

  if (opt.check) {
    std::vector<std::string> fails;
    for (const auto& r : rows) {
      if (require_converged && !r.converged) {
        fails.push_back("M=" + format_g17(r.mass) + " did not converge");
      }
      if (residual_max >= 0.0 && r.residual > residual_max) {
        fails.push_back("M=" + format_g17(r.mass) + " residual above bound");
      }
      if (energy_abs_tol >= 0.0) {
        const double closed = constant_state_energy(r.mass, model.chi, g);
        if (std::abs(r.f_total - closed) > energy_abs_tol) {
          fails.push_back("M=" + format_g17(r.mass) + " energy differs from constant-state form");
        }
      }
    }
    if (!fails.empty()) {
      for (const auto& f : fails) std::cerr << "check failed: " << f << "\n";
      return 3;
    }
    std::cout << "all checks passed\n";
  }
  return 0;
}

// --- bubble energy -------------------------------------------------------

int do_bubble_energy(const CliOptions& opt) {
  ExperimentIo io = open_experiment(opt, "bubble-energy");
  const Grid g = grid_from(io.cfg);
  const ModelParams model = model_from(io.cfg);
  const double mass = io.cfg.get_real("bubble_energy", "mass");
  const std::vector<double> eps_list = io.cfg.get_real_list("bubble_energy", "eps_list");
  const double x0 = io.cfg.get_real("bubble_energy", "x0");
  const double y0 = io.cfg.get_real("bubble_energy", "y0");
  const double slope_rel_tol = io.cfg.get_real_or("check", "slope_rel_tol", 0.10);
  const double slope_abs_tol = io.cfg.get_real_or("check", "slope_abs_tol", -1.0);
  io.cfg.ensure_all_consumed();

  const BubbleEnergyResult res = bubble_energy_experiment(model.chi, mass, eps_list, x0, y0, g);

  {
    std::ofstream out(io.out_dir + "/table.csv");
    if (!out) throw IoError("cannot open " + io.out_dir + "/table.csv");
    out << "epsilon,F,f_entropy,f_quadratic,f_cross\n";
    for (const auto& r : res.rows) {
      out << format_g17(r.epsilon) << ',' << format_g17(r.f_total) << ','
          << format_g17(r.f_entropy) << ',' << format_g17(r.f_quadratic) << ','
          << format_g17(r.f_cross) << "\n";
    }
  }

  ManifestInfo mi;
  mi.experiment = "bubble-energy";
  mi.config_text = io.cfg.text();
  mi.resolved = {{"grid", grid_json(g)},
                 {"model", model_json(model)},
                 {"bubble_energy",
                  {{"mass", mass}, {"eps_list", eps_list}, {"x0", x0}, {"y0", y0}}}};
  mi.summary = {{"slope", res.slope},
                {"intercept", res.intercept},
                {"target_slope", res.target_slope},
                {"rel_deviation", res.rel_deviation},
                {"dropped_eps", res.dropped}};
  mi.wall_clock_s = io.wall_clock();
  write_manifest(mi, io.out_dir + "/manifest.json");

  std::cout << "bubble-energy: slope=" << res.slope << " target=" << res.target_slope
            << " rel_deviation=" << res.rel_deviation << "\n";

  if (opt.check) {
    bool ok;
    if (slope_abs_tol >= 0.0) {
      ok = std::abs(res.slope - res.target_slope) <= slope_abs_tol;
    } else {
      ok = res.rel_deviation <= slope_rel_tol;
    }
    if (!ok) {
      std::cerr << "check failed: slope " << res.slope << " vs target " << res.target_slope
                << "\n";
      return 3;
    }
    std::cout << "all checks passed\n";
  }
  return 0;
}

// --- critical mass -------------------------------------------------------

int do_critical_mass(const CliOptions& opt) {
  ExperimentIo io = open_experiment(opt, "critical-mass");
  const Grid g = grid_from(io.cfg);
  const ModelParams model = model_from(io.cfg);
  const StepControl ctrl = ctrl_from(io.cfg);
  const RunSettings settings = settings_from(io.cfg);

  const double m_lo = io.cfg.get_real("critical_mass", "m_lo");
  const double m_hi = io.cfg.get_real("critical_mass", "m_hi");
  const int iterations = static_cast<int>(io.cfg.get_int_or("critical_mass", "iterations", 5));
  BubbleSpec family;
  family.epsilon = io.cfg.get_real_or("critical_mass", "epsilon", 0.05);
  family.x0 = io.cfg.get_real_or("critical_mass", "x0", 0.0);
  family.y0 = io.cfg.get_real_or("critical_mass", "y0", g.ly / 2.0);
  family.chi = model.chi;
  const bool shift = io.cfg.get_bool_or("critical_mass", "shift_nonneg", true);

  const double expected = io.cfg.get_real_or("check", "expected", -1.0);
  const double rel_tol = io.cfg.get_real_or("check", "rel_tol", 0.4);
  io.cfg.ensure_all_consumed();

  // The driver keeps its own audit trail so endpoint trials survive a
  // bracket error; per-trial series are persisted for the same reason.
  std::vector<TrialRecord> audit;
  auto trial = [&](double mass) {
    BubbleSpec spec = family;
    spec.mass = mass;
    auto [U, V] = bubble_pair(spec, g);
    if (shift) shift_to_nonnegative(V);
    RunResult r = run(U, V, model, ctrl, settings);
    TrialRecord rec;
    rec.index = static_cast<int>(audit.size());
    rec.mass = mass;
    rec.outcome = r.outcome;
    rec.growth = r.growth_final;
    rec.t_final = r.final_state.t;
    rec.steps = r.steps;
    rec.motility_underflow = r.motility_underflow;
    audit.push_back(rec);
    char name[32];
    std::snprintf(name, sizeof(name), "trial_%02d", rec.index);
    const std::string dir = io.out_dir + "/" + name;
    fs::create_directories(dir);
    write_series_csv(r.series, dir + "/series.csv");
    return r;
  };

  std::optional<BisectionResult> res;
  std::string bracket_error;
  try {
    res = critical_mass_bisection(m_lo, m_hi, iterations, trial);
  } catch (const BracketError& e) {
    bracket_error = e.what();
  }

  {
    std::ofstream out(io.out_dir + "/trials.csv");
    if (!out) throw IoError("cannot open " + io.out_dir + "/trials.csv");
    out << "index,mass,outcome,growth,t_final,steps,motility_underflow\n";
    for (const auto& t : audit) {
      out << t.index << ',' << format_g17(t.mass) << ',' << outcome_name(t.outcome) << ','
          << format_g17(t.growth) << ',' << format_g17(t.t_final) << ',' << t.steps << ','
          << (t.motility_underflow ? 1 : 0) << "\n";
    }
  }

  ManifestInfo mi;
  mi.experiment = "critical-mass";
  mi.config_text = io.cfg.text();
  mi.resolved = {{"grid", grid_json(g)},
                 {"model", model_json(model)},
                 {"step", ctrl_json(ctrl)},
                 {"run", settings_json(settings)},
                 {"critical_mass",
                  {{"m_lo", m_lo},
                   {"m_hi", m_hi},
                   {"iterations", iterations},
                   {"epsilon", family.epsilon},
                   {"x0", family.x0},
                   {"y0", family.y0},
                   {"shift_nonneg", shift}}}};
  ordered_json jt = ordered_json::array();
  for (const auto& t : audit) {
    jt.push_back({{"index", t.index},
                  {"mass", t.mass},
                  {"outcome", outcome_name(t.outcome)},
                  {"growth", t.growth},
                  {"t_final", t.t_final},
                  {"steps", t.steps},
                  {"motility_underflow", t.motility_underflow}});
  }
  if (res) {
    mi.summary = {{"estimate", res->estimate},
                  {"bracket_lo", res->bracket_lo},
                  {"bracket_hi", res->bracket_hi},
                  {"solver_failures", res->solver_failures},
                  {"trials", jt}};
  } else {
    mi.summary = {{"bracket_error", bracket_error}, {"trials", jt}};
  }
  mi.wall_clock_s = io.wall_clock();
  write_manifest(mi, io.out_dir + "/manifest.json");

  if (!res) {
    std::cerr << bracket_error << "\n";
    return 1;
  }
  std::cout << "critical-mass: estimate=" << res->estimate << " bracket=[" << res->bracket_lo
            << ", " << res->bracket_hi << "]\n";

  if (opt.check && expected > 0.0) {
    if (std::abs(res->estimate - expected) > rel_tol * expected) {
      std::cerr << "check failed: estimate " << res->estimate << " not within "
                << rel_tol * 100 << "% of " << expected << "\n";
      return 3;
    }
    std::cout << "all checks passed\n";
  }
  return 0;
}

// --- dissipation check -----------------------------------------------------

int do_dissipation_check(const CliOptions& opt) {
  ExperimentIo io = open_experiment(opt, "dissipation-check");
  const Grid g = grid_from(io.cfg);
  const ModelParams model = model_from(io.cfg);
  const StepControl base_ctrl = ctrl_from(io.cfg);
  InitData init = init_from(io.cfg, g, model);

  const std::vector<double> dt_list = io.cfg.get_real_list("dissipation", "dt_list");
  const double t_end = io.cfg.get_real("dissipation", "t_end");
  io.cfg.ensure_all_consumed();

  DissipationLadderResult ladder;
  const double mass0 = integrate(init.u0);
  int idx = 0;
  for (double dt : dt_list) {
    StepControl ctrl = base_ctrl;
    ctrl.dt_init = ctrl.dt_min = ctrl.dt_max = dt;
    RunSettings settings;
    settings.t_end = t_end;
    settings.sample_every = 1;  // trapezoid error must stay below splitting error
    RunResult r = run(init.u0, init.v0, model, ctrl, settings);

    DissipationLadderRow row;
    row.dt = dt;
    row.outcome = r.outcome;
    std::vector<EnergySample> es;
    es.reserve(r.series.size());
    for (const auto& s : r.series) es.push_back({s.t, s.f_total, s.e_total});
    row.identity_residual = energy_identity_residual(es);
    row.max_violation = dissipation_inequality_check(r.series, mass0, g.area()).max_violation;
    for (size_t i = 0; i + 1 < r.series.size(); ++i) {
      if (r.series[i + 1].f_total > r.series[i].f_total + 1e-8) {
        row.f_monotone = false;
        break;
      }
    }
    ladder.rows.push_back(row);

    char name[32];
    std::snprintf(name, sizeof(name), "ladder_%02d", idx++);
    const std::string dir = io.out_dir + "/" + name;
    fs::create_directories(dir);
    write_series_csv(r.series, dir + "/series.csv");
  }
  for (size_t i = 0; i + 1 < ladder.rows.size(); ++i) {
    if (!(ladder.rows[i + 1].identity_residual < ladder.rows[i].identity_residual)) {
      ladder.residual_decreasing = false;
    }
  }

  {
    std::ofstream out(io.out_dir + "/ladder.csv");
    if (!out) throw IoError("cannot open " + io.out_dir + "/ladder.csv");
    out << "dt,identity_residual,max_violation,f_monotone,outcome\n";
    for (const auto& r : ladder.rows) {
      out << format_g17(r.dt) << ',' << format_g17(r.identity_residual) << ','
          << format_g17(r.max_violation) << ',' << (r.f_monotone ? 1 : 0) << ','
          << outcome_name(r.outcome) << "\n";
    }
  }

  ManifestInfo mi;
  mi.experiment = "dissipation-check";
  mi.config_text = io.cfg.text();
  mi.resolved = {{"grid", grid_json(g)},
                 {"model", model_json(model)},
                 {"step", ctrl_json(base_ctrl)},
                 {"init", init.desc},
                 {"dissipation", {{"dt_list", dt_list}, {"t_end", t_end}}}};
  ordered_json jrows = ordered_json::array();
  for (const auto& r : ladder.rows) {
    jrows.push_back({{"dt", r.dt},
                     {"identity_residual", r.identity_residual},
                     {"max_violation", r.max_violation},
                     {"f_monotone", r.f_monotone},
                     {"outcome", outcome_name(r.outcome)}});
  }
  mi.summary = {{"rows", jrows}, {"residual_decreasing", ladder.residual_decreasing}};
  mi.wall_clock_s = io.wall_clock();
  write_manifest(mi, io.out_dir + "/manifest.json");

  for (const auto& r : ladder.rows) {
    std::cout << "dissipation-check: dt=" << r.dt << " residual=" << r.identity_residual
              << " violation=" << r.max_violation << " F_monotone=" << (r.f_monotone ? "yes" : "no")
              << "\n";
  }

  if (opt.check) {
    std::vector<std::string> fails;
    if (!ladder.residual_decreasing) {
      fails.push_back("identity residual is not strictly decreasing along the dt ladder");
    }
    for (const auto& r : ladder.rows) {
      if (!r.f_monotone) {
        fails.push_back("F not monotone at dt=" + format_g17(r.dt));
      }
    }
    if (!fails.empty()) {
      for (const auto& f : fails) std::cerr << "check failed: " << f << "\n";
      return 3;
    }
    std::cout << "all checks passed\n";
  }
  return 0;
}

// --- validate-config ------------------------------------------------------

int do_validate(const CliOptions& opt) {
  Config cfg = Config::parse_file(opt.config_path);
  const std::string kind = cfg.get_string("experiment", "kind");
  // Re-dispatch through the builders without running anything: every key is
  // consumed exactly as the real driver would consume it.
  cfg.get_int_or("experiment", "seed", 0);
  cfg.get_string_or("experiment", "out_dir", "");
  const Grid g = grid_from(cfg);
  const ModelParams model = model_from(cfg);
  if (kind == "run") {
    ctrl_from(cfg);
    settings_from(cfg);
    init_from(cfg, g, model);
    cfg.get_string_or("check", "expected_outcome", "");
    cfg.get_real_or("check", "mass_rel_tol", -1.0);
    cfg.get_real_or("check", "linf_rel_dev", -1.0);
    cfg.get_bool_or("check", "f_monotone", false);
    cfg.get_real_or("check", "max_dissipation_violation", -1.0);
  } else if (kind == "steady") {
    SteadyOptions sopt;
    sopt.damping = cfg.get_real_or("steady", "damping", sopt.damping);
    sopt.tol = cfg.get_real_or("steady", "tol", sopt.tol);
    sopt.max_iter = cfg.get_int_or("steady", "max_iter", sopt.max_iter);
    sopt.validate();
    if (cfg.has("steady", "masses")) {
      cfg.get_real_list("steady", "masses");
    } else {
      cfg.get_real("steady", "mass");
    }
    const std::string seed_kind = cfg.get_string_or("steady", "seed_kind", "zero");
    if (seed_kind == "bubble") {
      cfg.get_real("steady", "epsilon");
      cfg.get_real("steady", "x0");
      cfg.get_real("steady", "y0");
    } else if (seed_kind != "zero") {
      throw ConfigError("steady.seed_kind must be 'zero' or 'bubble'");
    }
    cfg.get_bool_or("check", "require_converged", true);
    cfg.get_real_or("check", "residual_max", -1.0);
    cfg.get_real_or("check", "energy_abs_tol", -1.0);
  } else if (kind == "bubble-energy") {
    cfg.get_real("bubble_energy", "mass");
    cfg.get_real_list("bubble_energy", "eps_list");
    cfg.get_real("bubble_energy", "x0");
    cfg.get_real("bubble_energy", "y0");
    cfg.get_real_or("check", "slope_rel_tol", 0.10);
    cfg.get_real_or("check", "slope_abs_tol", -1.0);
  } else if (kind == "critical-mass") {
    ctrl_from(cfg);
    settings_from(cfg);
    cfg.get_real("critical_mass", "m_lo");
    cfg.get_real("critical_mass", "m_hi");
    cfg.get_int_or("critical_mass", "iterations", 5);
    cfg.get_real_or("critical_mass", "epsilon", 0.05);
    cfg.get_real_or("critical_mass", "x0", 0.0);
    cfg.get_real_or("critical_mass", "y0", g.ly / 2.0);
    cfg.get_bool_or("critical_mass", "shift_nonneg", true);
    cfg.get_real_or("check", "expected", -1.0);
    cfg.get_real_or("check", "rel_tol", 0.4);
  } else if (kind == "dissipation-check") {
    ctrl_from(cfg);
    init_from(cfg, g, model);
    cfg.get_real_list("dissipation", "dt_list");
    cfg.get_real("dissipation", "t_end");
  } else {
    throw ConfigError("unknown experiment kind '" + kind + "'");
  }
  cfg.ensure_all_consumed();
  std::cout << "config ok: " << opt.config_path << " (kind " << kind << ")\n";
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------------
// CLI
// ---------------------------------------------------------------------------

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"2D chemotaxis simulator with signal-dependent motility"};
  app.require_subcommand(1);

  struct Sub {
    CLI::App* cmd;
    CliOptions opt;
    int (*fn)(const CliOptions&);
  };
  // deque: CLI11 keeps pointers to the option targets, so elements must not move
  std::deque<Sub> subs;
  auto add = [&](const std::string& name, const std::string& desc,
                 int (*fn)(const CliOptions&), bool with_check) {
    CLI::App* c = app.add_subcommand(name, desc);
    subs.push_back({c, {}, fn});
    Sub& s = subs.back();
    c->add_option("config", s.opt.config_path, "configuration file")->required();
    c->add_option("--out", s.opt.out_override, "override the output directory");
    if (with_check) {
      c->add_flag("--check", s.opt.check, "verify results against the [check] section");
    }
    c->add_flag("--timings", s.opt.timings,
                "record wall-clock in the manifest (breaks byte determinism)");
  };
  add("run", "time integration with diagnostics and outcome classification", &do_run, true);
  add("steady", "stationary solve / steady energy scan", &do_steady, true);
  add("bubble-energy", "energy of the concentrated family against ln(1/eps)",
      &do_bubble_energy, true);
  add("critical-mass", "bisection between bounded and blow-up-type outcomes",
      &do_critical_mass, true);
  add("dissipation-check", "energy identity and dissipation inequality on a dt ladder",
      &do_dissipation_check, true);
  add("validate-config", "parse and validate a configuration file", &do_validate, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  for (auto& s : subs) {
    if (!s.cmd->parsed()) continue;
    try {
      return s.fn(s.opt);
    } catch (const SolverError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    } catch (const ConfigError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    } catch (const BracketError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }
  return 1;
}

}  // namespace ks2d
