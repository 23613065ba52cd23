#include <doctest.h>

#include "ks2d/config.hpp"

using namespace ks2d;

namespace {

const char* kGood = R"(# a comment
[experiment]
kind = run          # trailing comment
out_dir = out/x

[grid]
nx = 64
ny = 64
lx = 1.0
ly = 1.0

[lists]
eps = 0.2, 0.1, 0.05
flag = true
)";

}  // namespace

TEST_CASE("parse and typed getters") {
  Config cfg = Config::parse_string(kGood, "good.cfg");
  CHECK(cfg.get_string("experiment", "kind") == "run");
  CHECK(cfg.get_int("grid", "nx") == 64);
  CHECK(cfg.get_real("grid", "lx") == 1.0);
  CHECK(cfg.get_bool_or("lists", "flag", false));
  auto eps = cfg.get_real_list("lists", "eps");
  REQUIRE(eps.size() == 3);
  CHECK(eps[1] == 0.1);
  CHECK(cfg.has("grid", "ny"));
  CHECK_FALSE(cfg.has("grid", "nz"));
  CHECK(cfg.has_section("lists"));
}

TEST_CASE("unconsumed keys are errors") {
  Config cfg = Config::parse_string(kGood, "good.cfg");
  cfg.get_string("experiment", "kind");
  CHECK_THROWS_AS(cfg.ensure_all_consumed(), ConfigError);
  try {
    cfg.ensure_all_consumed();
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("grid.nx") != std::string::npos);
  }
}

TEST_CASE("fully consumed config passes") {
  Config cfg = Config::parse_string(kGood, "good.cfg");
  cfg.get_string("experiment", "kind");
  cfg.get_string("experiment", "out_dir");
  cfg.get_int("grid", "nx");
  cfg.get_int("grid", "ny");
  cfg.get_real("grid", "lx");
  cfg.get_real("grid", "ly");
  cfg.get_real_list("lists", "eps");
  cfg.get_bool_or("lists", "flag", false);
  CHECK_NOTHROW(cfg.ensure_all_consumed());
}

TEST_CASE("parse errors") {
  CHECK_THROWS_AS(Config::parse_string("key = 1\n"), ConfigError);        // outside section
  CHECK_THROWS_AS(Config::parse_string("[s]\nnot a pair\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse_string("[s\nk = 1\n"), ConfigError);      // unterminated
  CHECK_THROWS_AS(Config::parse_string("[s]\nk = 1\nk = 2\n"), ConfigError);  // duplicate
  CHECK_THROWS_AS(Config::parse_string("[]\n"), ConfigError);             // empty name
}

TEST_CASE("value errors") {
  Config cfg = Config::parse_string("[s]\nx = banana\nn = 1.5\nb = maybe\nl = 1,,2\n");
  CHECK_THROWS_AS(cfg.get_real("s", "x"), ConfigError);
  CHECK_THROWS_AS(cfg.get_int("s", "n"), ConfigError);
  CHECK_THROWS_AS(cfg.get_bool_or("s", "b", true), ConfigError);
  CHECK_THROWS_AS(cfg.get_real_list("s", "l"), ConfigError);
  CHECK_THROWS_AS(cfg.get_real("s", "missing"), ConfigError);
}

TEST_CASE("defaults for missing keys") {
  Config cfg = Config::parse_string("[s]\n");
  CHECK(cfg.get_real_or("s", "x", 2.5) == 2.5);
  CHECK(cfg.get_int_or("s", "n", 7) == 7);
  CHECK(cfg.get_string_or("s", "k", "d") == "d");
  CHECK(cfg.get_bool_or("t", "b", true));
  CHECK_NOTHROW(cfg.ensure_all_consumed());
}

TEST_CASE("missing file") {
  CHECK_THROWS_AS(Config::parse_file("/nonexistent/path.cfg"), ConfigError);
}
