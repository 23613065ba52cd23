#pragma once

// Lyapunov functional and dissipation rate for the exponential-motility system
//
//   F(u,v) = int u ln u + (chi/2) int (v^2 + |grad v|^2) - chi int u v
//   E(u,v) = chi int v_t^2 + int e^{-chi v} u |grad(ln u - chi v)|^2
//
// with v_t reconstructed from the signal equation right-hand side
// (v_t = L v + u - v) rather than finite-differenced in time, and u ln u
// extended by 0 at u = 0. Along exact solutions dF/dt + E = 0; the discrete
// residual of that identity is what energy_identity_residual measures on a
// sampled trajectory.

#include <vector>

#include "ks2d/fields.hpp"
#include "ks2d/model.hpp"

namespace ks2d {

struct EnergyReport {
  // F and its three summands; f_total = f_entropy + f_quadratic + f_cross
  // holds exactly because f_total is computed as that sum.
  double f_total = 0.0;
  double f_entropy = 0.0;    // int u ln u
  double f_quadratic = 0.0;  // (chi/2) int (v^2 + |grad v|^2)
  double f_cross = 0.0;      // -chi int u v
  // E and its two summands; both are sums of squares, so e_total >= 0.
  double e_total = 0.0;
  double e_vt = 0.0;      // chi int v_t^2
  double e_fisher = 0.0;  // int e^{-chi v} u |grad(ln u - chi v)|^2
};

// F-part only. Requires u >= 0.
EnergyReport lyapunov(const Field& u, const Field& v, double chi);

// E-part only. Requires u > 0 cellwise (throws DomainError otherwise). The
// Fisher term weights each face with the arithmetic mean of e^{-chi v} u on
// the two adjacent cells, which keeps it nonnegative exactly.
EnergyReport dissipation(const Field& u, const Field& v, const ModelParams& params);

// Both parts in one report.
EnergyReport energy_report(const Field& u, const Field& v, const ModelParams& params);

struct EnergySample {
  double t = 0.0;
  double f = 0.0;
  double e = 0.0;
};

// max over consecutive samples of |F(t_{n+1}) - F(t_n) + int E dt| / (|F(t_n)| + 1)
// with int E dt by the trapezoid rule. Requires at least 3 samples.
double energy_identity_residual(const std::vector<EnergySample>& series);

// Closed-form F on the constant pair (m/|Omega|, m/|Omega|).
double constant_state_energy(double mass, double chi, const Grid& g);

}  // namespace ks2d
