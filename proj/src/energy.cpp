#include "ks2d/energy.hpp"

#include <cmath>

namespace ks2d {

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

// int u ln u with the convention 0 ln 0 = 0.
double entropy_integral(const Field& u) {
  Kahan k;
  for (size_t i = 0; i < u.size(); ++i) {
    const double ui = u[i];
    if (ui > 0.0) k.add(ui * std::log(ui));
  }
  return k.sum * u.grid().cell_area();
}

}  // namespace

EnergyReport lyapunov(const Field& u, const Field& v, double chi) {
  require_same_grid(u, v, "lyapunov");
  if (min_value(u) < 0.0) throw DomainError("lyapunov: u must be nonnegative");
  EnergyReport r;
  r.f_entropy = entropy_integral(u);
  Kahan v2;
  for (size_t i = 0; i < v.size(); ++i) v2.add(v[i] * v[i]);
  r.f_quadratic = 0.5 * chi * (v2.sum * v.grid().cell_area() + grad_sq_integral(v));
  Kahan uv;
  for (size_t i = 0; i < u.size(); ++i) uv.add(u[i] * v[i]);
  r.f_cross = -chi * uv.sum * u.grid().cell_area();
  r.f_total = r.f_entropy + r.f_quadratic + r.f_cross;
  return r;
}

EnergyReport dissipation(const Field& u, const Field& v, const ModelParams& params) {
  require_same_grid(u, v, "dissipation");
  if (!(min_value(u) > 0.0)) throw DomainError("dissipation: u must be positive cellwise");
  const Grid& g = u.grid();
  const double chi = params.chi;
  EnergyReport r;

  // v_t reconstructed from the signal equation right-hand side.
  Field vt = laplacian_neumann(v);
  for (size_t i = 0; i < vt.size(); ++i) vt[i] += u[i] - v[i];
  Kahan kv;
  for (size_t i = 0; i < vt.size(); ++i) kv.add(vt[i] * vt[i]);
  r.e_vt = chi * kv.sum * g.cell_area();

  // Fisher-type term: face-averaged e^{-chi v} u against squared face
  // differences of s = ln u - chi v.
  Field w(g), s(g);
  for (size_t i = 0; i < u.size(); ++i) {
    w[i] = std::exp(-chi * v[i]) * u[i];
    s[i] = std::log(u[i]) - chi * v[i];
  }
  const double ihx = 1.0 / g.hx(), ihy = 1.0 / g.hy();
  Kahan kf;
  for (int iy = 0; iy < g.ny; ++iy) {
    for (int ix = 0; ix + 1 < g.nx; ++ix) {
      const double d = (s(ix + 1, iy) - s(ix, iy)) * ihx;
      kf.add(0.5 * (w(ix + 1, iy) + w(ix, iy)) * d * d);
    }
  }
  for (int iy = 0; iy + 1 < g.ny; ++iy) {
    for (int ix = 0; ix < g.nx; ++ix) {
      const double d = (s(ix, iy + 1) - s(ix, iy)) * ihy;
      kf.add(0.5 * (w(ix, iy + 1) + w(ix, iy)) * d * d);
    }
  }
  r.e_fisher = kf.sum * g.cell_area();
  r.e_total = r.e_vt + r.e_fisher;
  return r;
}

EnergyReport energy_report(const Field& u, const Field& v, const ModelParams& params) {
  EnergyReport r = lyapunov(u, v, params.chi);
  const EnergyReport e = dissipation(u, v, params);
  r.e_vt = e.e_vt;
  r.e_fisher = e.e_fisher;
  r.e_total = e.e_total;
  return r;
}

double energy_identity_residual(const std::vector<EnergySample>& series) {
  if (series.size() < 3) {
    throw DomainError("energy_identity_residual: needs at least 3 samples");
  }
  double worst = 0.0;
  for (size_t i = 0; i + 1 < series.size(); ++i) {
    const EnergySample& a = series[i];
    const EnergySample& b = series[i + 1];
    const double dt = b.t - a.t;
    const double r = std::abs(b.f - a.f + 0.5 * (a.e + b.e) * dt) / (std::abs(a.f) + 1.0);
    worst = std::max(worst, r);
  }
  return worst;
}

double constant_state_energy(double mass, double chi, const Grid& g) {
  const double area = g.area();
  const double c = mass / area;
  return mass * std::log(c) + 0.5 * chi * mass * c - chi * mass * c;
}

}  // namespace ks2d
