#pragma once

// Stationary problem in the mean-zero variable V:
//
//   -L V + V = M e^{chi V}/int e^{chi V} - M/|Omega|,   integrate(V) = 0,
//   U = M e^{chi V}/int e^{chi V},
//
// solved by damped Picard iteration: V <- (1-theta) V + theta (I - L)^{-1} rhs(V),
// re-centered to mean zero every iteration. Non-convergence is reported as
// data, never as an exception: multiplicity and non-existence near resonant
// masses are genuine features of the problem, not solver bugs.
//
// The physical steady signal is v = V + M/|Omega| (at a steady state the means
// of u and v coincide), and the reported energy is F(U, V + M/|Omega|).

#include <vector>

#include "ks2d/energy.hpp"
#include "ks2d/fields.hpp"

namespace ks2d {

struct SteadyOptions {
  double damping = 0.5;  // theta in (0, 1]
  double tol = 1e-10;    // on l2(-L V + V - rhs(V))
  long max_iter = 100000;

  void validate() const;
};

struct SteadyResult {
  Field V;  // mean zero
  Field U;  // mass M, U = M e^{chi V}/int e^{chi V} by construction
  double residual = 0.0;
  long iterations = 0;
  EnergyReport energy;  // evaluated on (U, V + M/|Omega|)
  bool converged = false;
};

SteadyResult steady_solve(double mass, double chi, const Grid& g,
                          const SteadyOptions& opts = {},
                          const Field* v_init = nullptr);

struct SteadyScanRow {
  double mass = 0.0;
  int seed_index = 0;
  double residual = 0.0;
  double f_total = 0.0;
  long iterations = 0;
  bool converged = false;
};

// One steady_solve per (mass, seed) pair; an empty seed list means a single
// zero seed. Non-converged entries are flagged in the rows, not dropped.
std::vector<SteadyScanRow> steady_energy_scan(const std::vector<double>& masses,
                                              double chi, const Grid& g,
                                              const SteadyOptions& opts,
                                              const std::vector<Field>& seeds);

}  // namespace ks2d
