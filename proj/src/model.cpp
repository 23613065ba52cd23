#include "ks2d/model.hpp"

#include <cmath>
#include <string>

namespace ks2d {

void ModelParams::validate() const {
  if (!(chi > 0.0)) throw DomainError("ModelParams: chi must be positive");
  if (law == MotilityLaw::Algebraic && !(k > 0.0)) {
    throw DomainError("ModelParams: algebraic decay exponent k must be positive");
  }
  if (sigma < 0.0) throw DomainError("ModelParams: sigma must be nonnegative");
}

Field motility_eval(const ModelParams& params, const Field& v) {
  params.validate();
  Field out(v.grid());
  const size_t n = v.size();
  switch (params.law) {
    case MotilityLaw::Exponential:
      for (size_t i = 0; i < n; ++i) out[i] = std::exp(-params.chi * v[i]);
      break;
    case MotilityLaw::Algebraic:
      for (size_t i = 0; i < n; ++i) {
        if (!(v[i] > 0.0)) {
          throw DomainError("motility_eval: algebraic law requires v > 0 cellwise");
        }
        out[i] = params.chi / std::pow(v[i], params.k);
      }
      break;
  }
  return out;
}

}  // namespace ks2d
