#include "ks2d/steady.hpp"

#include <cmath>
#include <utility>

namespace ks2d {

void SteadyOptions::validate() const {
  if (!(damping > 0.0) || !(damping <= 1.0)) {
    throw DomainError("SteadyOptions: damping must be in (0, 1]");
  }
  if (!(tol > 0.0)) throw DomainError("SteadyOptions: tol must be positive");
  if (max_iter < 1) throw DomainError("SteadyOptions: max_iter must be >= 1");
}

namespace {

struct Kahan {
  double sum = 0.0, c = 0.0;
  void add(double x) {
    const double y = x - c;
    const double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
};

// U = M e^{chi V}/int e^{chi V}, evaluated through exp(chi V - max) so large
// tilts never overflow; the shared normalizer keeps integrate(U) = M to
// rounding.
Field tilt_density(const Field& V, double mass, double chi) {
  Field U(V.grid());
  double m = -1e308;
  for (size_t i = 0; i < V.size(); ++i) m = std::max(m, chi * V[i]);
  Kahan z;
  for (size_t i = 0; i < V.size(); ++i) {
    U[i] = std::exp(chi * V[i] - m);
    z.add(U[i]);
  }
  const double norm = mass / (z.sum * V.grid().cell_area());
  for (size_t i = 0; i < U.size(); ++i) U[i] *= norm;
  return U;
}

}  // namespace

SteadyResult steady_solve(double mass, double chi, const Grid& g,
                          const SteadyOptions& opts, const Field* v_init) {
  opts.validate();
  if (!(mass > 0.0)) throw DomainError("steady_solve: mass must be positive");
  if (!(chi > 0.0)) throw DomainError("steady_solve: chi must be positive");

  const double ubar = mass / g.area();
  // Linear solves tighter than the Picard tolerance so the reported residual
  // is dominated by the outer iteration. The floor stays above the CG
  // rounding floor; near a fixed point rhs itself shrinks, so the outer
  // residual is not limited by it.
  const double lin_tol = std::max(1e-12, 0.01 * opts.tol);

  if (v_init && !(v_init->grid() == g)) {
    throw DomainError("steady_solve: v_init lives on a different grid");
  }
  Field V = v_init ? *v_init : Field(g);
  { // center the seed
    const double m = mean(V);
    for (size_t i = 0; i < V.size(); ++i) V[i] -= m;
  }

  SteadyResult res;
  auto rhs_of = [&](const Field& Vk, Field* U_out) {
    Field U = tilt_density(Vk, mass, chi);
    Field rhs(g);
    for (size_t i = 0; i < rhs.size(); ++i) rhs[i] = U[i] - ubar;
    if (U_out) *U_out = std::move(U);
    return rhs;
  };
  auto residual_of = [&](const Field& Vk, const Field& rhs) {
    Field lhs = laplacian_neumann(Vk);
    for (size_t i = 0; i < lhs.size(); ++i) lhs[i] = -lhs[i] + Vk[i] - rhs[i];
    return l2_norm(lhs);
  };

  Field U;
  for (long it = 0; it <= opts.max_iter; ++it) {
    Field rhs = rhs_of(V, &U);
    // rhs has zero mean analytically; a drift here would be a quadrature bug.
    const double drift = std::abs(integrate(rhs));
    if (drift > 1e-12 * std::max(1.0, mass)) {
      throw DomainError("steady_solve: rhs lost its zero mean (quadrature bug?)");
    }
    res.residual = residual_of(V, rhs);
    res.iterations = it;
    if (res.residual <= opts.tol) {
      res.converged = true;
      break;
    }
    if (it == opts.max_iter) break;  // return the best iterate, not an exception

    Field Vn = solve_helmholtz(1.0, rhs, lin_tol, &V);
    for (size_t i = 0; i < V.size(); ++i) {
      V[i] = (1.0 - opts.damping) * V[i] + opts.damping * Vn[i];
    }
    const double m = mean(V);
    for (size_t i = 0; i < V.size(); ++i) V[i] -= m;
  }

  // Physical steady pair: v = V + mean(v), and at a steady state the means of
  // u and v coincide.
  Field v_phys = add_scalar(V, ubar);
  ModelParams params;
  params.chi = chi;
  res.energy = energy_report(U, v_phys, params);
  res.V = std::move(V);
  res.U = std::move(U);
  return res;
}

std::vector<SteadyScanRow> steady_energy_scan(const std::vector<double>& masses,
                                              double chi, const Grid& g,
                                              const SteadyOptions& opts,
                                              const std::vector<Field>& seeds) {
  std::vector<SteadyScanRow> rows;
  const Field zero_seed(g);
  const size_t n_seeds = seeds.empty() ? 1 : seeds.size();
  for (double m : masses) {
    for (size_t s = 0; s < n_seeds; ++s) {
      const Field& seed = seeds.empty() ? zero_seed : seeds[s];
      SteadyResult r = steady_solve(m, chi, g, opts, &seed);
      SteadyScanRow row;
      row.mass = m;
      row.seed_index = static_cast<int>(s);
      row.residual = r.residual;
      row.f_total = r.energy.f_total;
      row.iterations = r.iterations;
      row.converged = r.converged;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace ks2d
