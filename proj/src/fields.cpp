#include "ks2d/fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ks2d {

namespace {

// Kahan-compensated accumulator. Several contracts assert cancellation to
// 1e-13 relative on 10^4..10^5 cells, which plain summation does not leave
// enough headroom for.
struct Kahan {
  double sum = 0.0, c = 0.0;
  void add(double x) {
    const double y = x - c;
    const double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
};

}  // namespace

double integrate(const Field& f) {
  Kahan k;
  for (size_t i = 0; i < f.size(); ++i) k.add(f[i]);
  return k.sum * f.grid().cell_area();
}

double mean(const Field& f) { return integrate(f) / f.grid().area(); }

double l1_norm(const Field& f) {
  Kahan k;
  for (size_t i = 0; i < f.size(); ++i) k.add(std::abs(f[i]));
  return k.sum * f.grid().cell_area();
}

double l2_norm(const Field& f) {
  Kahan k;
  for (size_t i = 0; i < f.size(); ++i) k.add(f[i] * f[i]);
  return std::sqrt(k.sum * f.grid().cell_area());
}

double linf_norm(const Field& f) {
  double m = 0.0;
  for (size_t i = 0; i < f.size(); ++i) m = std::max(m, std::abs(f[i]));
  return m;
}

double min_value(const Field& f) {
  double m = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < f.size(); ++i) m = std::min(m, f[i]);
  return m;
}

double max_value(const Field& f) {
  double m = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < f.size(); ++i) m = std::max(m, f[i]);
  return m;
}

double grad_sq_integral(const Field& f) {
  const Grid& g = f.grid();
  const int nx = g.nx, ny = g.ny;
  const double ihx = 1.0 / g.hx(), ihy = 1.0 / g.hy();
  Kahan k;
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix + 1 < nx; ++ix) {
      const double d = (f(ix + 1, iy) - f(ix, iy)) * ihx;
      k.add(d * d);
    }
  }
  for (int iy = 0; iy + 1 < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const double d = (f(ix, iy + 1) - f(ix, iy)) * ihy;
      k.add(d * d);
    }
  }
  return k.sum * g.cell_area();
}

double hminus1_norm_sq(const Field& f, double tol) {
  Field dev = add_scalar(f, -mean(f));
  // a deviation at rounding level of the field is a constant in disguise
  const double noise = 1e-14 * std::max(1.0, linf_norm(f)) * std::sqrt(f.grid().area());
  if (l2_norm(dev) <= noise) return 0.0;
  Field phi = solve_helmholtz(0.0, dev, tol);
  return grad_sq_integral(phi);
}

double log_exp_integral(const Field& f, double a) {
  const double ca = f.grid().cell_area();
  if (a == 0.0) return std::log(f.grid().area());
  double m = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < f.size(); ++i) m = std::max(m, a * f[i]);
  Kahan k;
  for (size_t i = 0; i < f.size(); ++i) k.add(std::exp(a * f[i] - m));
  return m + std::log(k.sum * ca);
}

double exp_integral(const Field& f, double a) {
  return std::exp(log_exp_integral(f, a));
}

NormReport norm_report(const Field& f, double tol) {
  NormReport r;
  r.l1 = l1_norm(f);
  r.l2 = l2_norm(f);
  r.linf = linf_norm(f);
  r.grad_sq = grad_sq_integral(f);
  r.hminus1 = hminus1_norm_sq(f, tol);
  return r;
}

bool all_finite(const Field& f) {
  for (size_t i = 0; i < f.size(); ++i) {
    if (!std::isfinite(f[i])) return false;
  }
  return true;
}

void require_finite(const Field& f, const char* label) {
  if (!all_finite(f)) {
    throw DomainError(std::string(label) + ": field contains NaN or Inf");
  }
}

Field add(const Field& a, const Field& b) {
  require_same_grid(a, b, "add");
  Field out(a.grid());
  for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Field sub(const Field& a, const Field& b) {
  require_same_grid(a, b, "sub");
  Field out(a.grid());
  for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Field multiply(const Field& a, const Field& b) {
  require_same_grid(a, b, "multiply");
  Field out(a.grid());
  for (size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

Field scale(const Field& f, double c) {
  Field out(f.grid());
  for (size_t i = 0; i < f.size(); ++i) out[i] = c * f[i];
  return out;
}

Field add_scalar(const Field& f, double c) {
  Field out(f.grid());
  for (size_t i = 0; i < f.size(); ++i) out[i] = f[i] + c;
  return out;
}

Field exp_field(const Field& f, double factor) {
  Field out(f.grid());
  for (size_t i = 0; i < f.size(); ++i) out[i] = std::exp(factor * f[i]);
  return out;
}

Field ln_field(const Field& f) {
  Field out(f.grid());
  for (size_t i = 0; i < f.size(); ++i) out[i] = std::log(std::max(f[i], kLnFloor));
  return out;
}

}  // namespace ks2d
