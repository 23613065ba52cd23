#pragma once

// Quadrature, norms, and cellwise algebra over Field values.
//
// Quadrature is midpoint/cellwise throughout (sum of cell values times
// cell_area), consistent with the finite-volume state representation, so the
// conservation statements of the scheme are exact at the quadrature level.
// Sums use compensated (Kahan) accumulation: several contracts in this
// project assert cancellation down to 1e-13 relative.

#include <vector>

#include "ks2d/grid.hpp"

namespace ks2d {

struct NormReport {
  double l1 = 0.0;       // integral of |f|
  double l2 = 0.0;       // sqrt(integral of f^2)
  double linf = 0.0;     // max |f|
  double grad_sq = 0.0;  // integral of |grad f|^2 (face differences)
  double hminus1 = 0.0;  // integral of |grad phi|^2 with -L phi = f - mean(f)
};

double integrate(const Field& f);
double mean(const Field& f);  // integrate(f)/area
double l1_norm(const Field& f);
double l2_norm(const Field& f);
double linf_norm(const Field& f);
double min_value(const Field& f);
double max_value(const Field& f);

// Face-difference quadrature of the squared gradient: each interior face
// contributes ((f_j - f_i)/h)^2 * cell_area. Zero iff f is constant.
double grad_sq_integral(const Field& f);

// H^-1 seminorm squared of f - mean(f): solves the Neumann Poisson problem
// and evaluates grad_sq_integral of the potential. Invariant under adding
// constants to f.
double hminus1_norm_sq(const Field& f, double tol = kDefaultSolveTol);

// log of integral of e^{a f}, evaluated in log-sum-exp form so large maxima
// do not overflow intermediates.
double log_exp_integral(const Field& f, double a);

// integral of e^{a f}; may legitimately overflow to +inf for extreme inputs,
// but the computation itself never loses the exponent.
double exp_integral(const Field& f, double a);

NormReport norm_report(const Field& f, double tol = kDefaultSolveTol);

bool all_finite(const Field& f);
// Throws DomainError naming `label` if any cell is NaN or infinite.
void require_finite(const Field& f, const char* label);

// Cellwise algebra. Pure: inputs are never modified.
Field add(const Field& a, const Field& b);
Field sub(const Field& a, const Field& b);
Field multiply(const Field& a, const Field& b);
Field scale(const Field& f, double c);
Field add_scalar(const Field& f, double c);
Field exp_field(const Field& f, double factor = 1.0);  // e^{factor * f}
// ln with a 1e-300 floor; the scheme keeps u > 0, the floor only guards
// bubble tails at machine zero.
Field ln_field(const Field& f);

inline constexpr double kLnFloor = 1e-300;

}  // namespace ks2d
