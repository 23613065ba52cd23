#include "ks2d/grid.hpp"

#include <cmath>
#include <cstring>
#include <sstream>
#include <string>

#include "ks2d/fields.hpp"

namespace ks2d {

Grid build_grid(int nx, int ny, double lx, double ly) {
  if (nx < 2 || ny < 2) {
    throw DomainError("build_grid: cell counts must be >= 2, got nx=" +
                      std::to_string(nx) + " ny=" + std::to_string(ny));
  }
  if (!(lx > 0.0) || !(ly > 0.0)) {
    throw DomainError("build_grid: side lengths must be positive, got lx=" +
                      std::to_string(lx) + " ly=" + std::to_string(ly));
  }
  return Grid{nx, ny, lx, ly};
}

void require_same_grid(const Field& a, const Field& b, const char* where) {
  if (!a.same_grid(b)) {
    throw DomainError(std::string(where) + ": fields live on different grids");
  }
}

namespace {

// out = L f in flux form, raw-pointer kernel shared by the public operators
// and the CG matvecs.
void laplacian_into(const Grid& g, const double* f, double* out) {
  const int nx = g.nx, ny = g.ny;
  const double ax = 1.0 / (g.hx() * g.hx());
  const double ay = 1.0 / (g.hy() * g.hy());
  for (int iy = 0; iy < ny; ++iy) {
    const double* row = f + static_cast<size_t>(iy) * nx;
    double* orow = out + static_cast<size_t>(iy) * nx;
    for (int ix = 0; ix < nx; ++ix) {
      const double c = row[ix];
      double s = 0.0;
      if (ix > 0) s += ax * (row[ix - 1] - c);
      if (ix + 1 < nx) s += ax * (row[ix + 1] - c);
      if (iy > 0) s += ay * (row[ix - nx] - c);
      if (iy + 1 < ny) s += ay * (row[ix + nx] - c);
      orow[ix] = s;
    }
  }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

void remove_mean(std::vector<double>& a) {
  double s = 0.0;
  for (double x : a) s += x;
  const double m = s / static_cast<double>(a.size());
  for (double& x : a) x -= m;
}

struct CgProblem {
  // y = A x
  void (*apply)(const void* ctx, const double* x, double* y);
  const void* ctx;
  const std::vector<double>* jacobi_diag;  // nullptr => unpreconditioned
  bool zero_mean;  // project iterates/residuals onto the zero-mean subspace
};

// Preconditioned CG with a relative-residual stopping rule. The recurrence
// residual is cross-checked against the true residual at exit; if rounding
// drifted, iteration resumes from the true residual (at most a few times).
SolveInfo conjugate_gradient(const CgProblem& P, const std::vector<double>& b,
                             std::vector<double>& x, double tol, long max_iter,
                             const char* label) {
  const size_t n = b.size();
  const double nb = norm2(b);
  SolveInfo info;
  if (nb == 0.0) {
    x.assign(n, 0.0);
    return info;
  }
  std::vector<double> r(n), p(n), z(n), Ap(n);

  auto residual_from_x = [&](std::vector<double>& dst) {
    P.apply(P.ctx, x.data(), Ap.data());
    for (size_t i = 0; i < n; ++i) dst[i] = b[i] - Ap[i];
    if (P.zero_mean) remove_mean(dst);
  };

  if (P.zero_mean) remove_mean(x);
  residual_from_x(r);

  long total_it = 0;
  for (int restart = 0; restart < 4; ++restart) {
    if (P.jacobi_diag) {
      for (size_t i = 0; i < n; ++i) z[i] = r[i] / (*P.jacobi_diag)[i];
    } else {
      z = r;
    }
    p = z;
    double rz = dot(r, z);
    double rn = norm2(r);
    while (rn > tol * nb && total_it < max_iter) {
      P.apply(P.ctx, p.data(), Ap.data());
      if (P.zero_mean) remove_mean(Ap);
      const double pAp = dot(p, Ap);
      if (!(pAp > 0.0)) break;  // lost positive-definiteness to rounding
      const double alpha = rz / pAp;
      for (size_t i = 0; i < n; ++i) {
        x[i] += alpha * p[i];
        r[i] -= alpha * Ap[i];
      }
      if (P.zero_mean) remove_mean(r);
      if (P.jacobi_diag) {
        for (size_t i = 0; i < n; ++i) z[i] = r[i] / (*P.jacobi_diag)[i];
      } else {
        z = r;
      }
      const double rz_new = dot(r, z);
      const double beta = rz_new / rz;
      for (size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
      rz = rz_new;
      rn = norm2(r);
      ++total_it;
    }
    // verify against the true residual before accepting
    residual_from_x(r);
    rn = norm2(r);
    info.iterations = total_it;
    info.rel_residual = rn / nb;
    if (rn <= tol * nb) return info;
    if (total_it >= max_iter) break;
  }
  std::ostringstream msg;
  msg << label << ": CG did not converge, relative residual "
      << info.rel_residual << " after " << info.iterations
      << " iterations (tol " << tol << ")";
  throw SolverError(msg.str(), info.rel_residual, info.iterations);
}

struct HelmholtzCtx {
  const Grid* g;
  double a;
};

void helmholtz_apply(const void* ctx, const double* x, double* y) {
  const auto* c = static_cast<const HelmholtzCtx*>(ctx);
  laplacian_into(*c->g, x, y);
  const size_t n = static_cast<size_t>(c->g->cells());
  for (size_t i = 0; i < n; ++i) y[i] = c->a * x[i] - y[i];
}

struct WeightedCtx {
  const Grid* g;
  double a;
  const double* inv_gamma;
};

// w-system of the weighted solve: y = a * w ./ gamma - L w (SPD).
void weighted_apply(const void* ctx, const double* w, double* y) {
  const auto* c = static_cast<const WeightedCtx*>(ctx);
  laplacian_into(*c->g, w, y);
  const size_t n = static_cast<size_t>(c->g->cells());
  for (size_t i = 0; i < n; ++i) y[i] = c->a * w[i] * c->inv_gamma[i] - y[i];
}

long cg_iteration_cap(const Grid& g) {
  // generous: Poisson on n x n needs O(n) iterations
  return 200L * (g.nx + g.ny) + 10000L;
}

}  // namespace

Field laplacian_neumann(const Field& f) {
  Field out(f.grid());
  laplacian_into(f.grid(), f.data(), out.data());
  return out;
}

Field weighted_laplacian(const Field& gamma, const Field& u) {
  require_same_grid(gamma, u, "weighted_laplacian");
  const size_t n = u.size();
  for (size_t i = 0; i < n; ++i) {
    if (!(gamma[i] > 0.0)) {
      throw DomainError("weighted_laplacian: gamma must be positive cellwise");
    }
  }
  Field w(u.grid());
  for (size_t i = 0; i < n; ++i) w[i] = gamma[i] * u[i];
  Field out(u.grid());
  laplacian_into(u.grid(), w.data(), out.data());
  return out;
}

Field solve_helmholtz(double a, const Field& rhs, double tol,
                      const Field* initial_guess, SolveInfo* info) {
  if (a < 0.0) throw DomainError("solve_helmholtz: a must be >= 0");
  if (!(tol > 0.0)) throw DomainError("solve_helmholtz: tol must be positive");
  const Grid& g = rhs.grid();
  if (initial_guess) require_same_grid(rhs, *initial_guess, "solve_helmholtz");

  Field x = initial_guess ? *initial_guess : Field(g);
  std::vector<double> b = rhs.values();

  if (a == 0.0) {
    // Poisson case: the operator annihilates constants, so the data must have
    // (numerically) zero mean; the zero-mean solution is returned.
    const double total = integrate(rhs);
    const double scale = l2_norm(rhs) * std::sqrt(g.area());
    if (std::abs(total) > tol * scale + 1e-300) {
      std::ostringstream msg;
      msg << "solve_helmholtz: a = 0 requires zero-mean rhs, got integral "
          << total << " (tolerance " << tol * scale << ")";
      throw IncompatibleRhsError(msg.str());
    }
    remove_mean(b);
    HelmholtzCtx ctx{&g, 0.0};
    CgProblem P{&helmholtz_apply, &ctx, nullptr, true};
    SolveInfo si = conjugate_gradient(P, b, x.values(), tol, cg_iteration_cap(g),
                                      "solve_helmholtz(poisson)");
    remove_mean(x.values());
    if (info) *info = si;
    return x;
  }

  if (!initial_guess) {
    for (size_t i = 0; i < x.size(); ++i) x[i] = b[i] / a;
  }
  HelmholtzCtx ctx{&g, a};
  CgProblem P{&helmholtz_apply, &ctx, nullptr, false};
  SolveInfo si = conjugate_gradient(P, b, x.values(), tol, cg_iteration_cap(g),
                                    "solve_helmholtz");
  if (info) *info = si;
  return x;
}

Field solve_weighted_implicit(double a, const Field& gamma, const Field& rhs,
                              double tol, const Field* initial_guess,
                              SolveInfo* info) {
  if (!(a > 0.0)) throw DomainError("solve_weighted_implicit: a must be positive");
  if (!(tol > 0.0)) throw DomainError("solve_weighted_implicit: tol must be positive");
  require_same_grid(gamma, rhs, "solve_weighted_implicit");
  if (initial_guess) require_same_grid(rhs, *initial_guess, "solve_weighted_implicit");
  const Grid& g = rhs.grid();
  const size_t n = rhs.size();

  std::vector<double> inv_gamma(n);
  for (size_t i = 0; i < n; ++i) {
    if (!(gamma[i] > 0.0)) {
      throw DomainError("solve_weighted_implicit: gamma must be positive cellwise");
    }
    inv_gamma[i] = 1.0 / gamma[i];
  }

  // Solve for w = gamma .* x; the w-residual equals the x-system residual
  // identically, so the reported tolerance applies to the original system.
  const double face = 2.0 / (g.hx() * g.hx()) + 2.0 / (g.hy() * g.hy());
  std::vector<double> diag(n);
  for (size_t i = 0; i < n; ++i) diag[i] = a * inv_gamma[i] + face;

  Field w(g);
  if (initial_guess) {
    for (size_t i = 0; i < n; ++i) w[i] = gamma[i] * (*initial_guess)[i];
  } else {
    for (size_t i = 0; i < n; ++i) w[i] = gamma[i] * rhs[i] / a;
  }

  WeightedCtx ctx{&g, a, inv_gamma.data()};
  CgProblem P{&weighted_apply, &ctx, &diag, false};
  SolveInfo si = conjugate_gradient(P, rhs.values(), w.values(), tol,
                                    cg_iteration_cap(g), "solve_weighted_implicit");
  if (info) *info = si;

  Field x(g);
  for (size_t i = 0; i < n; ++i) x[i] = w[i] * inv_gamma[i];
  return x;
}

}  // namespace ks2d
