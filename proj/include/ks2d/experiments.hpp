#pragma once

// Config-driven experiment drivers and the CLI entry point.
//
// Subcommands: run, steady, bubble-energy, critical-mass, dissipation-check,
// validate-config. Every experiment writes a manifest capturing the fully
// resolved configuration, so any published number is reproducible from the
// manifest alone. Reruns with identical config are byte-identical in
// single-threaded mode (everything here is single-threaded).
//
// Exit codes: 0 success, 1 config error, 2 solver failure, 3 check failure
// (--check compares results against the expectations in the [check] section).

#include <functional>
#include <string>
#include <vector>

#include "ks2d/config.hpp"
#include "ks2d/solver.hpp"
#include "ks2d/steady.hpp"

namespace ks2d {

// --- bubble energy slope -----------------------------------------------

struct BubbleEnergyRow {
  double epsilon = 0.0;
  double f_total = 0.0;
  double f_entropy = 0.0;
  double f_quadratic = 0.0;
  double f_cross = 0.0;
};

struct BubbleEnergyResult {
  std::vector<BubbleEnergyRow> rows;   // resolved epsilons only
  std::vector<double> dropped;         // unresolved epsilons that were filtered
  double slope = 0.0;                  // least-squares fit of F against ln(1/eps)
  double intercept = 0.0;
  double target_slope = 0.0;           // 2 (4 pi / chi - M)
  double rel_deviation = 0.0;          // |slope - target|/|target| (inf when target = 0)
};

// Filters eps values the grid does not resolve; throws ConfigError when fewer
// than 3 remain.
BubbleEnergyResult bubble_energy_experiment(double chi, double mass,
                                            const std::vector<double>& eps_list,
                                            double x0, double y0, const Grid& g);

// --- critical-mass bisection ---------------------------------------------

struct TrialRecord {
  int index = 0;
  double mass = 0.0;
  Outcome outcome = Outcome::Bounded;
  double growth = 1.0;
  double t_final = 0.0;
  long steps = 0;
  bool motility_underflow = false;
};

struct BisectionResult {
  double estimate = 0.0;
  double bracket_lo = 0.0, bracket_hi = 0.0;  // final bracket
  std::vector<TrialRecord> trials;
  int solver_failures = 0;
};

using TrialRunner = std::function<RunResult(double mass)>;

// Classifies both endpoints first and throws BracketError unless they come out
// (Bounded, BlowupSuspected). SolverFailure trials are recorded and skipped;
// the bracket is left unchanged for that iteration.
BisectionResult critical_mass_bisection(double m_lo, double m_hi, int iterations,
                                        const TrialRunner& trial);

// --- dissipation ladder ----------------------------------------------------

struct DissipationLadderRow {
  double dt = 0.0;
  double identity_residual = 0.0;
  double max_violation = 0.0;  // dissipation-inequality check
  bool f_monotone = true;      // F nonincreasing within 1e-8 slack
  Outcome outcome = Outcome::Bounded;
};

struct DissipationLadderResult {
  std::vector<DissipationLadderRow> rows;  // in the order of the dt list
  bool residual_decreasing = true;         // strictly decreasing along the list
};

// --- CLI ---------------------------------------------------------------

int cli_main(int argc, const char* const* argv);

}  // namespace ks2d
