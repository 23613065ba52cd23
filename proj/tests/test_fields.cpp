#include <doctest.h>

#include <cmath>
#include <random>

#include "ks2d/fields.hpp"
#include "ks2d/grid.hpp"

using namespace ks2d;

TEST_CASE("integrate on constants") {
  Grid g = build_grid(8, 8, 1.0, 1.0);
  CHECK(integrate(Field(g, 1.0)) == doctest::Approx(1.0).epsilon(1e-15));
  Grid g2 = build_grid(10, 6, 2.0, 3.0);
  CHECK(integrate(Field(g2, 0.7)) == doctest::Approx(0.7 * 6.0).epsilon(1e-15));
}

TEST_CASE("integrate is linear") {
  Grid g = build_grid(16, 16, 1.0, 1.0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Field a(g), b(g);
  for (size_t i = 0; i < a.size(); ++i) {
    a[i] = d(rng);
    b[i] = d(rng);
  }
  const double lhs = integrate(add(scale(a, 2.0), b));
  const double rhs = 2.0 * integrate(a) + integrate(b);
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));
}

TEST_CASE("grad_sq_integral") {
  SUBCASE("constants have zero gradient") {
    Grid g = build_grid(12, 9, 2.0, 1.0);
    CHECK(grad_sq_integral(Field(g, 5.0)) == 0.0);
  }
  SUBCASE("cosine oracle pi^2/2 with second-order error") {
    auto value = [](int n) {
      Grid g = build_grid(n, n, 1.0, 1.0);
      Field f(g);
      for (int iy = 0; iy < g.ny; ++iy) {
        for (int ix = 0; ix < g.nx; ++ix) f(ix, iy) = std::cos(M_PI * g.cx(ix));
      }
      return grad_sq_integral(f);
    };
    const double exact = M_PI * M_PI / 2.0;
    const double e32 = std::abs(value(32) - exact);
    const double e64 = std::abs(value(64) - exact);
    CHECK(e32 <= 5e-3);
    CHECK(e32 / e64 == doctest::Approx(4.0).epsilon(0.25));
  }
  SUBCASE("quadratic homogeneity") {
    Grid g = build_grid(16, 16, 1.0, 1.0);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    Field f(g);
    for (size_t i = 0; i < f.size(); ++i) f[i] = d(rng);
    CHECK(grad_sq_integral(scale(f, 3.0)) ==
          doctest::Approx(9.0 * grad_sq_integral(f)).epsilon(1e-13));
  }
}

TEST_CASE("hminus1_norm_sq") {
  Grid g = build_grid(48, 48, 1.0, 1.0);
  SUBCASE("constants give zero") {
    CHECK(hminus1_norm_sq(Field(g, 2.0), 1e-11) == 0.0);
  }
  SUBCASE("eigenfunction oracle 1/(2 pi^2)") {
    Field f(g);
    for (int iy = 0; iy < g.ny; ++iy) {
      for (int ix = 0; ix < g.nx; ++ix) f(ix, iy) = std::cos(M_PI * g.cx(ix));
    }
    const double exact = 1.0 / (2.0 * M_PI * M_PI);
    CHECK(hminus1_norm_sq(f, 1e-12) == doctest::Approx(exact).epsilon(2e-3));
  }
  SUBCASE("invariant under adding constants") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    Field f(g);
    for (size_t i = 0; i < f.size(); ++i) f[i] = d(rng);
    const double a = hminus1_norm_sq(f, 1e-12);
    const double b = hminus1_norm_sq(add_scalar(f, 5.0), 1e-12);
    CHECK(a == doctest::Approx(b).epsilon(1e-8));
  }
  SUBCASE("sharp discrete Poincare bound") {
    // the ratio hminus1/l2(f - mean)^2 is maximized by the lowest nonzero
    // Neumann mode, with discrete eigenvalue 2(1-cos(pi h))/h^2
    const double h = g.hx();
    const double lam1 = 2.0 * (1.0 - std::cos(M_PI * h)) / (h * h);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
      Field f(g);
      for (size_t i = 0; i < f.size(); ++i) f[i] = d(rng);
      Field dev = add_scalar(f, -mean(f));
      const double num = hminus1_norm_sq(f, 1e-12);
      const double den = l2_norm(dev) * l2_norm(dev);
      CHECK(num <= (1.0 + 1e-6) * den / lam1);
    }
  }
}

TEST_CASE("exp_integral") {
  Grid g = build_grid(8, 8, 1.0, 1.0);
  SUBCASE("zero field gives the area") {
    CHECK(exp_integral(Field(g), 3.0) == doctest::Approx(1.0).epsilon(1e-14));
    Grid g2 = build_grid(8, 8, 2.0, 1.5);
    CHECK(exp_integral(Field(g2), -1.0) == doctest::Approx(3.0).epsilon(1e-14));
  }
  SUBCASE("unit field with a = ln 2 doubles the area") {
    CHECK(exp_integral(Field(g, 1.0), std::log(2.0)) == doctest::Approx(2.0).epsilon(1e-14));
  }
  SUBCASE("a = 0 gives the area regardless of f") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> d(-50.0, 50.0);
    Field f(g);
    for (size_t i = 0; i < f.size(); ++i) f[i] = d(rng);
    CHECK(exp_integral(f, 0.0) == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("large maxima do not overflow the log form") {
    Field f(g);
    f[0] = 800.0;
    const double lg = log_exp_integral(f, 1.0);
    CHECK(std::isfinite(lg));
    // dominated by the single huge cell: log(e^800 * ca) = 800 + log(ca)
    CHECK(lg == doctest::Approx(800.0 + std::log(g.cell_area())).epsilon(1e-6));
  }
  SUBCASE("Jensen lower bound") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> d(-2.0, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
      Field f(g);
      for (size_t i = 0; i < f.size(); ++i) f[i] = d(rng);
      const double a = d(rng);
      CHECK(exp_integral(f, a) >= g.area() * std::exp(a * mean(f)) * (1.0 - 1e-12));
    }
  }
}

TEST_CASE("norms and inequalities") {
  Grid g = build_grid(16, 16, 1.0, 1.0);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(0.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    Field f(g);
    for (size_t i = 0; i < f.size(); ++i) f[i] = d(rng);
    CHECK(linf_norm(f) >= l1_norm(f) / g.area() - 1e-14);
    CHECK(l1_norm(f) >= 0.0);
    CHECK(l2_norm(f) >= 0.0);
  }
}

TEST_CASE("norm_report bundles the diagnostics consistently") {
  Grid g = build_grid(32, 32, 1.0, 1.0);
  SUBCASE("constant field") {
    NormReport r = norm_report(Field(g, 2.0), 1e-11);
    CHECK(r.l1 == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(r.l2 == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(r.linf == 2.0);
    CHECK(r.grad_sq == 0.0);
    CHECK(r.hminus1 == 0.0);  // zero iff constant
  }
  SUBCASE("non-constant field has positive hminus1") {
    Field f(g);
    for (int iy = 0; iy < g.ny; ++iy) {
      for (int ix = 0; ix < g.nx; ++ix) f(ix, iy) = std::cos(M_PI * g.cx(ix));
    }
    NormReport r = norm_report(f, 1e-11);
    CHECK(r.hminus1 > 0.0);
    CHECK(r.grad_sq > 0.0);
    CHECK(r.linf <= 1.0);
  }
}

TEST_CASE("cellwise algebra and guards") {
  Grid g = build_grid(4, 4, 1.0, 1.0);
  Field f(g, 2.0);
  CHECK(multiply(f, f)[0] == 4.0);
  CHECK(add_scalar(f, -2.0)[3] == 0.0);
  CHECK(exp_field(Field(g), 1.0)[0] == 1.0);

  SUBCASE("ln floor keeps zeros finite") {
    Field z(g, 0.0);
    Field l = ln_field(z);
    CHECK(std::isfinite(l[0]));
    CHECK(l[0] == doctest::Approx(std::log(1e-300)));
  }
  SUBCASE("finite-value fault detection") {
    Field bad(g, 1.0);
    bad[7] = std::nan("");
    CHECK_FALSE(all_finite(bad));
    CHECK_THROWS_AS(require_finite(bad, "test"), DomainError);
    CHECK(all_finite(f));
  }
}
