#pragma once

// Model parameters and motility laws.
//
//   Exponential: gamma(v) = e^{-chi v}   (primary mode; critical mass 4*pi/chi)
//   Algebraic:   gamma(v) = chi / v^k    (contrast mode; requires v > 0)
//
// sigma >= 0 enables the logistic source sigma*u*(1-u) in the cell equation;
// sigma = 0 is the conservative default.

#include "ks2d/fields.hpp"
#include "ks2d/grid.hpp"

namespace ks2d {

enum class MotilityLaw { Exponential, Algebraic };

struct ModelParams {
  double chi = 1.0;
  MotilityLaw law = MotilityLaw::Exponential;
  double k = 1.0;      // algebraic decay exponent (used only when Algebraic)
  double sigma = 0.0;  // logistic rate; 0 disables the source

  // Throws DomainError unless chi > 0, k > 0, sigma >= 0.
  void validate() const;
};

// Evaluates gamma(v) cellwise. Exponential mode requires v >= 0 nowhere in
// particular (any v is accepted; values above 0 give gamma < 1). Algebraic
// mode requires v > 0 cellwise and throws DomainError otherwise.
Field motility_eval(const ModelParams& params, const Field& v);

}  // namespace ks2d
