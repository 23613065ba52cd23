#pragma once

// Initial-data generators.
//
// The boundary-bubble family concentrates mass M at a boundary point x0:
//
//   V_eps = (1/chi) [ g - mean(g) ],  g(x) = ln( eps^2 / (eps^2 + pi |x-x0|^2)^2 )
//   U_eps = M e^{chi V_eps} / int e^{chi V_eps}
//
// so integrate(V_eps) = 0 and integrate(U_eps) = M hold exactly at the
// quadrature level (the mean subtraction and the normalization reuse the same
// quadrature). U_eps is evaluated through exp(g - max g), which never
// overflows. V_eps takes negative values; shift_to_nonnegative produces the
// constant-shifted variant v0 = V + |min V| used when nonnegative initial
// data is required.

#include <string>
#include <utility>

#include "ks2d/fields.hpp"
#include "ks2d/grid.hpp"

namespace ks2d {

struct BubbleSpec {
  double epsilon = 0.1;  // concentration scale
  double x0 = 0.0, y0 = 0.0;  // must lie on the closed boundary of the rectangle
  double mass = 1.0;
  double chi = 1.0;

  // Throws DomainError unless epsilon > 0, mass > 0, chi > 0 and (x0,y0) is
  // on the boundary of g (within a relative tolerance).
  void validate(const Grid& g) const;
};

// True when the grid resolves the concentration scale: hx, hy <= epsilon.
bool bubble_resolved(const BubbleSpec& spec, const Grid& g);

// Returns (U, V). V has exact zero mean, U has exact mass, U > 0, and V is
// maximal at the cell nearest x0.
std::pair<Field, Field> bubble_pair(const BubbleSpec& spec, const Grid& g);

// v0 = V + |min V| when min V < 0, else V unchanged. Returns the shift applied.
double shift_to_nonnegative(Field& v);

// u0 = m/|Omega| * (1 + amp cos(kx pi x / lx) cos(ky pi y / ly)), clipped at 0,
// then renormalized so integrate(u0) = mass exactly; v0 is built the same way.
std::pair<Field, Field> perturbed_constant(double mass, double amp, int kx, int ky,
                                           const Grid& g);

// Reads one snapshot per field (io module format). The two grids must match.
std::pair<Field, Field> load_fields(const std::string& u_path, const std::string& v_path);

}  // namespace ks2d
