#include "ks2d/initdata.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ks2d/io.hpp"

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

bool on_boundary(double x, double y, const Grid& g) {
  const double tol = 1e-12 * std::max(g.lx, g.ly);
  const bool inside_x = x >= -tol && x <= g.lx + tol;
  const bool inside_y = y >= -tol && y <= g.ly + tol;
  if (!inside_x || !inside_y) return false;
  const bool edge_x = std::abs(x) <= tol || std::abs(x - g.lx) <= tol;
  const bool edge_y = std::abs(y) <= tol || std::abs(y - g.ly) <= tol;
  return edge_x || edge_y;
}

}  // namespace

void BubbleSpec::validate(const Grid& g) const {
  if (!(epsilon > 0.0)) throw DomainError("BubbleSpec: epsilon must be positive");
  if (!(mass > 0.0)) throw DomainError("BubbleSpec: mass must be positive");
  if (!(chi > 0.0)) throw DomainError("BubbleSpec: chi must be positive");
  if (!on_boundary(x0, y0, g)) {
    throw DomainError("BubbleSpec: (x0, y0) must lie on the boundary of the rectangle");
  }
}

bool bubble_resolved(const BubbleSpec& spec, const Grid& g) {
  return g.hx() <= spec.epsilon && g.hy() <= spec.epsilon;
}

std::pair<Field, Field> bubble_pair(const BubbleSpec& spec, const Grid& g) {
  spec.validate(g);
  const double e2 = spec.epsilon * spec.epsilon;

  // g(x) = ln(eps^2) - 2 ln(eps^2 + pi r^2); work in logs, never exponentiate
  // the raw profile.
  Field lg(g);
  for (int iy = 0; iy < g.ny; ++iy) {
    for (int ix = 0; ix < g.nx; ++ix) {
      const double dx = g.cx(ix) - spec.x0;
      const double dy = g.cy(iy) - spec.y0;
      lg(ix, iy) = std::log(e2) - 2.0 * std::log(e2 + M_PI * (dx * dx + dy * dy));
    }
  }

  const double lg_mean = mean(lg);
  Field V(g);
  for (size_t i = 0; i < V.size(); ++i) V[i] = (lg[i] - lg_mean) / spec.chi;

  // U = M e^{chi V}/int e^{chi V} = M e^{g}/int e^{g}; normalize through
  // exp(g - max g) so the peak never overflows. The same Kahan sum used for
  // the normalizer makes integrate(U) = M to rounding.
  const double lg_max = max_value(lg);
  Field U(g);
  Kahan z;
  for (size_t i = 0; i < U.size(); ++i) {
    U[i] = std::exp(lg[i] - lg_max);
    z.add(U[i]);
  }
  const double norm = spec.mass / (z.sum * g.cell_area());
  for (size_t i = 0; i < U.size(); ++i) U[i] *= norm;

  return {std::move(U), std::move(V)};
}

double shift_to_nonnegative(Field& v) {
  const double m = min_value(v);
  if (m >= 0.0) return 0.0;
  const double shift = -m;
  for (size_t i = 0; i < v.size(); ++i) v[i] += shift;
  return shift;
}

std::pair<Field, Field> perturbed_constant(double mass, double amp, int kx, int ky,
                                           const Grid& g) {
  if (!(mass > 0.0)) throw DomainError("perturbed_constant: mass must be positive");
  const double base = mass / g.area();
  auto make = [&]() {
    Field f(g);
    for (int iy = 0; iy < g.ny; ++iy) {
      for (int ix = 0; ix < g.nx; ++ix) {
        const double cxv = std::cos(kx * M_PI * g.cx(ix) / g.lx);
        const double cyv = std::cos(ky * M_PI * g.cy(iy) / g.ly);
        f(ix, iy) = std::max(0.0, base * (1.0 + amp * cxv * cyv));
      }
    }
    const double total = integrate(f);
    if (!(total > 0.0)) throw DomainError("perturbed_constant: perturbation wiped out all mass");
    const double c = mass / total;
    for (size_t i = 0; i < f.size(); ++i) f[i] *= c;
    return f;
  };
  return {make(), make()};
}

std::pair<Field, Field> load_fields(const std::string& u_path, const std::string& v_path) {
  auto [u, mu] = read_snapshot(u_path);
  auto [v, mv] = read_snapshot(v_path);
  (void)mu;
  (void)mv;
  if (!u.same_grid(v)) {
    throw DomainError("load_fields: " + u_path + " and " + v_path +
                      " have mismatched grids");
  }
  require_finite(u, "load_fields(u)");
  require_finite(v, "load_fields(v)");
  return {std::move(u), std::move(v)};
}

}  // namespace ks2d
