#pragma once

// Cell-centered rectangular grid with homogeneous-Neumann (zero-flux) boundary
// semantics. The discrete Laplacian is the 5-point flux form
//
//   (L f)_i = sum over faces of cell i of (f_nbr - f_i)/h^2,
//
// with boundary faces contributing nothing (ghost value = interior value), so
// the area-weighted sum of L f telescopes to zero exactly. Implicit solves are
// matrix-free conjugate gradients with a relative-residual stopping rule; the
// weighted operator is solved through the substitution w = gamma.*x, which
// turns a*x - L(gamma.*x) = rhs into the symmetric positive definite system
// a*w./gamma - L w = rhs with an M-matrix structure (nonnegative inverse,
// column sums equal to a). That structure is what makes the time stepper
// positivity-preserving and exactly mass-conservative up to solver tolerance.

#include <cstddef>
#include <utility>
#include <vector>

#include "ks2d/errors.hpp"

namespace ks2d {

struct Grid {
  int nx = 0, ny = 0;
  double lx = 0.0, ly = 0.0;

  double hx() const { return lx / nx; }
  double hy() const { return ly / ny; }
  double cell_area() const { return hx() * hy(); }
  double area() const { return lx * ly; }
  long cells() const { return static_cast<long>(nx) * ny; }

  // Cell-center coordinates.
  double cx(int ix) const { return (ix + 0.5) * hx(); }
  double cy(int iy) const { return (iy + 0.5) * hy(); }

  bool operator==(const Grid&) const = default;
};

// Validates counts >= 2 and positive side lengths.
Grid build_grid(int nx, int ny, double lx, double ly);

// One real value per cell, row-major with x fastest: index = ix + nx*iy.
class Field {
 public:
  Field() = default;
  explicit Field(const Grid& g, double fill = 0.0)
      : grid_(g), val_(static_cast<size_t>(g.cells()), fill) {}

  const Grid& grid() const { return grid_; }
  size_t size() const { return val_.size(); }

  double operator[](size_t i) const { return val_[i]; }
  double& operator[](size_t i) { return val_[i]; }
  double operator()(int ix, int iy) const { return val_[idx(ix, iy)]; }
  double& operator()(int ix, int iy) { return val_[idx(ix, iy)]; }

  const double* data() const { return val_.data(); }
  double* data() { return val_.data(); }
  const std::vector<double>& values() const { return val_; }
  std::vector<double>& values() { return val_; }

  bool same_grid(const Field& other) const { return grid_ == other.grid_; }

 private:
  size_t idx(int ix, int iy) const {
    return static_cast<size_t>(ix) + static_cast<size_t>(grid_.nx) * iy;
  }
  Grid grid_;
  std::vector<double> val_;
};

void require_same_grid(const Field& a, const Field& b, const char* where);

// 5-point Neumann Laplacian in flux form.
Field laplacian_neumann(const Field& f);

// Laplacian of the cellwise product w = gamma.*u in the same flux form.
// Requires gamma > 0 cellwise and matching grids.
Field weighted_laplacian(const Field& gamma, const Field& u);

struct SolveInfo {
  long iterations = 0;
  double rel_residual = 0.0;
};

inline constexpr double kDefaultSolveTol = 1e-10;

// Solves (a*I - L) x = rhs for a > 0 (SPD) or, for a = 0, the Neumann Poisson
// problem -L x = rhs, which requires integrate(rhs) = 0 within tol and returns
// the zero-mean solution. Throws IncompatibleRhsError / SolverError.
Field solve_helmholtz(double a, const Field& rhs, double tol = kDefaultSolveTol,
                      const Field* initial_guess = nullptr,
                      SolveInfo* info = nullptr);

// Solves a*x - L(gamma.*x) = rhs for a > 0, gamma > 0 cellwise. The system
// matrix has column sums equal to a and nonpositive off-diagonals, so
// x >= 0 whenever rhs >= 0 and a*integrate(x) = integrate(rhs), both up to
// the solver residual.
Field solve_weighted_implicit(double a, const Field& gamma, const Field& rhs,
                              double tol = kDefaultSolveTol,
                              const Field* initial_guess = nullptr,
                              SolveInfo* info = nullptr);

}  // namespace ks2d
