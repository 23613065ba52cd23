#include <doctest.h>

#include <cmath>
#include <random>

#include "ks2d/model.hpp"

using namespace ks2d;

TEST_CASE("exponential motility values") {
  Grid g = build_grid(4, 4, 1.0, 1.0);
  ModelParams p;  // chi = 1, exponential
  CHECK(motility_eval(p, Field(g, 0.0))[0] == doctest::Approx(1.0));
  CHECK(motility_eval(p, Field(g, std::log(2.0)))[0] == doctest::Approx(0.5));
}

TEST_CASE("algebraic motility values") {
  Grid g = build_grid(4, 4, 1.0, 1.0);
  ModelParams p;
  p.law = MotilityLaw::Algebraic;
  p.k = 1.0;
  CHECK(motility_eval(p, Field(g, 2.0))[0] == doctest::Approx(0.5));
  p.k = 2.0;
  CHECK(motility_eval(p, Field(g, 2.0))[0] == doctest::Approx(0.25));
}

TEST_CASE("algebraic motility rejects nonpositive v") {
  Grid g = build_grid(4, 4, 1.0, 1.0);
  ModelParams p;
  p.law = MotilityLaw::Algebraic;
  Field v(g, 1.0);
  v[3] = 0.0;
  CHECK_THROWS_AS(motility_eval(p, v), DomainError);
}

TEST_CASE("motility is positive and monotone decreasing in v") {
  Grid g = build_grid(8, 8, 1.0, 1.0);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> d(0.01, 5.0);
  for (auto law : {MotilityLaw::Exponential, MotilityLaw::Algebraic}) {
    ModelParams p;
    p.law = law;
    p.chi = 1.3;
    p.k = 1.5;
    for (int trial = 0; trial < 20; ++trial) {
      Field v1(g), v2(g);
      for (size_t i = 0; i < v1.size(); ++i) {
        v2[i] = d(rng);
        v1[i] = v2[i] + d(rng);  // v1 >= v2 cellwise
      }
      Field g1 = motility_eval(p, v1);
      Field g2 = motility_eval(p, v2);
      for (size_t i = 0; i < g1.size(); ++i) {
        CHECK(g1[i] > 0.0);
        CHECK(g1[i] <= g2[i]);
      }
    }
  }
}

TEST_CASE("parameter validation") {
  ModelParams p;
  p.chi = 0.0;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p.chi = 1.0;
  p.sigma = -0.5;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p.sigma = 0.0;
  p.law = MotilityLaw::Algebraic;
  p.k = 0.0;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p.k = 1.0;
  CHECK_NOTHROW(p.validate());
}
