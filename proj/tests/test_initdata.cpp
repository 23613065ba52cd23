#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "ks2d/fields.hpp"
#include "ks2d/initdata.hpp"
#include "ks2d/io.hpp"

using namespace ks2d;

TEST_CASE("bubble pair invariants") {
  Grid g = build_grid(64, 64, 1.0, 1.0);
  const double chi = 1.0;
  for (double eps : {0.2, 0.1, 0.05}) {
    BubbleSpec spec{eps, 0.0, 0.5, 4.0 * M_PI, chi};
    auto [U, V] = bubble_pair(spec, g);

    // exact zero mean / exact mass, at the shared-quadrature level
    CHECK(std::abs(integrate(V)) <= 1e-13 * l2_norm(V) * std::sqrt(g.area()));
    CHECK(std::abs(integrate(U) - spec.mass) <= 1e-13 * spec.mass);
    CHECK(min_value(U) > 0.0);

    // V peaks at the cell nearest x0
    size_t argmax = 0;
    for (size_t i = 0; i < V.size(); ++i) {
      if (V[i] > V[argmax]) argmax = i;
    }
    const int ix = static_cast<int>(argmax) % g.nx;
    const int iy = static_cast<int>(argmax) / g.nx;
    CHECK(ix == 0);
    CHECK((iy == g.ny / 2 - 1 || iy == g.ny / 2));

    // radially nonincreasing in |x - x0|
    std::vector<std::pair<double, double>> by_r;
    for (int jy = 0; jy < g.ny; ++jy) {
      for (int jx = 0; jx < g.nx; ++jx) {
        const double dx = g.cx(jx) - spec.x0;
        const double dy = g.cy(jy) - spec.y0;
        by_r.push_back({dx * dx + dy * dy, V(jx, jy)});
      }
    }
    std::sort(by_r.begin(), by_r.end());
    for (size_t i = 0; i + 1 < by_r.size(); ++i) {
      CHECK(by_r[i + 1].second <= by_r[i].second + 1e-12);
    }

    // admissible data: bounded values and bounded discrete gradients
    CHECK(std::isfinite(linf_norm(U)));
    CHECK(std::isfinite(grad_sq_integral(V)));
  }
}

TEST_CASE("bubble spec validation") {
  Grid g = build_grid(16, 16, 1.0, 1.0);
  CHECK_THROWS_AS(bubble_pair({0.1, 0.5, 0.5, 1.0, 1.0}, g), DomainError);  // interior
  CHECK_THROWS_AS(bubble_pair({0.1, 1.5, 0.0, 1.0, 1.0}, g), DomainError);  // outside
  CHECK_THROWS_AS(bubble_pair({-0.1, 0.0, 0.5, 1.0, 1.0}, g), DomainError);
  CHECK_THROWS_AS(bubble_pair({0.1, 0.0, 0.5, -1.0, 1.0}, g), DomainError);
  CHECK_NOTHROW(bubble_pair({0.1, 0.0, 0.0, 1.0, 1.0}, g));  // corner is on the boundary
  CHECK_NOTHROW(bubble_pair({0.1, 1.0, 0.25, 1.0, 1.0}, g));
}

TEST_CASE("bubble resolution predicate") {
  Grid g = build_grid(16, 16, 1.0, 1.0);  // h = 1/16
  CHECK(bubble_resolved({0.1, 0.0, 0.5, 1.0, 1.0}, g));
  CHECK_FALSE(bubble_resolved({0.01, 0.0, 0.5, 1.0, 1.0}, g));
}

TEST_CASE("linf of the bubble grows along a resolved shrinking eps sequence") {
  Grid g = build_grid(128, 128, 1.0, 1.0);
  double prev = 0.0;
  for (double eps : {0.2, 0.1, 0.05, 0.025}) {
    auto [U, V] = bubble_pair({eps, 0.0, 0.5, 1.0, 1.0}, g);
    const double peak = linf_norm(U);
    CHECK(peak > prev);
    prev = peak;
  }
}

TEST_CASE("shift to nonnegative") {
  Grid g = build_grid(32, 32, 1.0, 1.0);
  auto [U, V] = bubble_pair({0.1, 0.0, 0.5, 1.0, 1.0}, g);
  CHECK(min_value(V) < 0.0);  // mean-zero profile dips negative
  Field v = V;
  const double shift = shift_to_nonnegative(v);
  CHECK(shift == doctest::Approx(-min_value(V)));
  CHECK(min_value(v) >= 0.0);
  // already-nonnegative fields are untouched
  Field w(g, 0.3);
  CHECK(shift_to_nonnegative(w) == 0.0);
}

TEST_CASE("perturbed constant data") {
  Grid g = build_grid(32, 32, 1.0, 1.0);
  SUBCASE("amp 0 gives exact constants") {
    auto [u0, v0] = perturbed_constant(2.0, 0.0, 1, 1, g);
    CHECK(linf_norm(sub(u0, Field(g, 2.0))) <= 1e-14);
    CHECK(linf_norm(sub(v0, Field(g, 2.0))) <= 1e-14);
  }
  SUBCASE("mass is exact for any amplitude") {
    for (double amp : {0.1, 0.5, 0.9}) {
      auto [u0, v0] = perturbed_constant(3.7, amp, 2, 1, g);
      CHECK(std::abs(integrate(u0) - 3.7) <= 1e-13 * 3.7);
      CHECK(min_value(u0) >= 0.0);
      CHECK(min_value(v0) >= 0.0);
    }
  }
  SUBCASE("amp 0.5 mode (1,0) bottoms out near half the mean") {
    const double mass = 2.0;
    auto [u0, v0] = perturbed_constant(mass, 0.5, 1, 0, g);
    CHECK(min_value(u0) == doctest::Approx(0.5 * mass).epsilon(0.02));
    CHECK(min_value(u0) > 0.0);
  }
  SUBCASE("nonpositive mass is rejected") {
    CHECK_THROWS_AS(perturbed_constant(0.0, 0.1, 1, 1, g), DomainError);
  }
}

TEST_CASE("load_fields round trip and error paths") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "ks2d_initdata_test";
  fs::create_directories(dir);
  Grid g = build_grid(8, 6, 1.0, 1.0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(0.0, 2.0);
  Field u(g), v(g);
  for (size_t i = 0; i < u.size(); ++i) {
    u[i] = d(rng);
    v[i] = d(rng);
  }
  const std::string up = (dir / "u.snap").string();
  const std::string vp = (dir / "v.snap").string();
  write_snapshot(u, {0.5}, up);
  write_snapshot(v, {0.5}, vp);

  auto [u2, v2] = load_fields(up, vp);
  for (size_t i = 0; i < u.size(); ++i) {
    CHECK(u2[i] == u[i]);
    CHECK(v2[i] == v[i]);
  }

  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_fields((dir / "nope.snap").string(), vp), IoError);
  }
  SUBCASE("grid mismatch") {
    Grid g2 = build_grid(8, 8, 1.0, 1.0);
    const std::string wp = (dir / "w.snap").string();
    write_snapshot(Field(g2, 1.0), {0.0}, wp);
    CHECK_THROWS_AS(load_fields(up, wp), DomainError);
  }
  fs::remove_all(dir);
}
