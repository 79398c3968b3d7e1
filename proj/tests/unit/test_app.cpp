#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <vector>

#include "doctest.h"
#include "orbitpde/config.hpp"
#include "orbitpde/errors.hpp"
#include "orbitpde/expression.hpp"
#include "orbitpde/report.hpp"

using namespace orbitpde;

namespace {

double eval(const std::string& text, std::vector<double> values = {}, std::vector<std::string> names = {}) {
  return Expression::parse(text, names).evaluate(values);
}

const char* kRotational = R"j({
  // comment lines are accepted
  "name": "cat",
  "flux": {"builtin": "minimal_surface"},
  "geometry": {"kind": "rotational", "r_in": 1.5, "r_out": 3},
  "boundary": {"expression": "arccosh(r)", "exact": "arccosh(r)"},
  "solver": {"scheme": "picard", "grid": {"n1": 32}}
})j";

}  // namespace

TEST_CASE("expression precedence and associativity") {
  CHECK(eval("1 + 2 * 3") == doctest::Approx(7));
  CHECK(eval("2 ^ 3 ^ 2") == doctest::Approx(512));
  CHECK(eval("-2 ^ 2") == doctest::Approx(-4));
  CHECK(eval("(1 + 2) * 3 - 4 / 8") == doctest::Approx(8.5));
  CHECK(eval("2 * -3") == doctest::Approx(-6));
  CHECK(eval("1e-3 * 2.5E2") == doctest::Approx(0.25));
}

TEST_CASE("expression functions and variables") {
  CHECK(eval("sin(pi / 2) + cos(0)") == doctest::Approx(2));
  CHECK(eval("arccosh(cosh(1.25))") == doctest::Approx(1.25));
  CHECK(eval("ln(exp(3)) + sqrt(16) + abs(-1)") == doctest::Approx(8));
  CHECK(eval("tanh(0) + sinh(0)") == doctest::Approx(0));
  CHECK(eval("min(3, 1, 2) + max(4, 5)") == doctest::Approx(6));
  CHECK(eval("x * y + x", {2, 5}, {"x", "y"}) == doctest::Approx(12));
}

TEST_CASE("expression errors name the position") {
  for (const char* bad : {"1 +", "r +* 2", "(1", "foo(1)", "sqrt(1, 2)", "min(1)", "z", "1 2", ""})
    CHECK_THROWS_AS(eval(bad, {0}, {"x"}), ConfigError);
  try {
    eval("1 + * 2");
    FAIL("expected a parse error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("4") != std::string::npos);
  }
}

TEST_CASE("bound expressions see the chart variables") {
  const auto polar = flat_polar_chart(0.0, 1.0);
  const auto f = bind_expression("x + 2 * y + r - theta", polar);
  Vec p(2);
  p << 0.5, 0.3;
  CHECK(f(p) == doctest::Approx(0.5 * std::cos(0.3) + std::sin(0.3) + 0.5 - 0.3));
  CHECK_THROWS_AS(bind_expression("rho", polar), ConfigError);
}

TEST_CASE("config parses a rotational problem") {
  const ProblemConfig c = parse_config(kRotational, "/tmp/x/cat.json");
  CHECK(c.name == "cat");
  REQUIRE(c.profile);
  CHECK(c.profile->name() == "minimal_surface");
  REQUIRE(c.geometry);
  CHECK(c.geometry->kind == "rotational");
  CHECK(c.settings.scheme == Scheme::Picard);
  CHECK(c.settings.n1 == 32);
  CHECK(c.settings.n2 == 1);
  CHECK(c.exact == "arccosh(r)");
  CHECK(c.output("_field.csv").filename() == "cat_field.csv");
}

TEST_CASE("config rejects bad input") {
  auto with = [](const std::string& extra) {
    return std::string(R"({"name": "t", "flux": {"builtin": "p_laplace", "p": 3})") + extra + "}";
  };
  CHECK_NOTHROW(parse_config(with("")));
  CHECK_THROWS_AS(parse_config(with(R"(, "typo": 1)")), ConfigError);
  CHECK_THROWS_AS(parse_config(with(R"(, "boundary": {"exact": "1"})")), ConfigError);
  CHECK(parse_config(R"({"flux": {"builtin": "p_laplace", "p": 3}})", "dir/stem.json").name == "stem");
  CHECK_THROWS_AS(parse_config(with(R"(, "solver": {"grid": {"n1": 4}})")), ConfigError);
  CHECK_THROWS_AS(parse_config(with(R"(, "solver": {"grid": {"n1": 5000}})")), ConfigError);
  CHECK_THROWS_AS(parse_config(with(R"(, "solver": {"tolerance": "small"})")), ConfigError);
  CHECK_THROWS_AS(parse_config(with(R"(, "solver": {"scheme": "multigrid"})")), ConfigError);
  CHECK_THROWS_AS(parse_config(with(R"(, "geometry": {"kind": "helicoidal", "lambda": 1})")), ConfigError);
  CHECK_THROWS_AS(parse_config(with(R"(, "geometry": {"kind": "custom", "table_file": "missing.json"})")),
                  ConfigError);
  CHECK_THROWS_AS(parse_config("{ not json"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"name": "t", "flux": {"builtin": "p_laplace", "p": 0.5}})"), ProfileInvalid);
  CHECK_THROWS_AS(parse_config(R"({"name": "t", "flux": {"table": [[0.1, 0.1], [1, 1], [2, 0.5], [4, 3]]}})"),
                  ProfileInvalid);
}

TEST_CASE("config accepts every solver form name") {
  for (const char* form : {"auto", "divergence", "non_divergence"}) {
    const std::string text = std::string(R"({"name": "t", "flux": {"builtin": "minimal_surface"},
      "geometry": {"kind": "flat", "domain": {"shape": "disk", "radius": 1}},
      "solver": {"form": ")") + form + R"("}})";
    CHECK_NOTHROW(parse_config(text));
  }
}

TEST_CASE("doubles format at 17 significant digits") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1.0) == "1");
  CHECK(std::strtod(format_double(M_PI).c_str(), nullptr) == M_PI);
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(format_double(-std::numeric_limits<double>::infinity()) == "-inf");
}

TEST_CASE("json dump is sorted and maps non-finite to null") {
  Json j{{"b", 0.1}, {"a", std::numeric_limits<double>::infinity()}, {"c", {1, 2}}, {"d", "s"}};
  const std::string s = dump_json(j);
  CHECK(s == "{\n  \"a\": null,\n  \"b\": 0.10000000000000001,\n  \"c\": [\n    1,\n    2\n  ],\n  \"d\": \"s\"\n}\n");
  CHECK(Json::parse(s)["b"].get<double>() == 0.1);
}

TEST_CASE("field csv round trips and rejects other grids") {
  const auto chart = std::make_shared<const QuotientChart>(flat_polar_chart(0.0, 1.0));
  const auto grid = std::make_shared<const Grid>(chart, 8, 16);
  SolutionField field{grid, std::vector<double>(grid->size())};
  for (int k = 0; k < grid->size(); ++k) field.values[k] = std::sin(0.37 * k) / 3.0;
  const auto dir = std::filesystem::temp_directory_path() / "orbitpde_test_app";
  const auto path = dir / "field.csv";
  write_file(path, field_table(field).str());
  CHECK(read_field_csv(path, *grid) == field.values);
  const Grid other(chart, 16, 16);
  CHECK_THROWS_AS(read_field_csv(path, other), ConfigError);
  CHECK_THROWS_AS(read_field_csv(dir / "absent.csv", *grid), ConfigError);
  std::filesystem::remove_all(dir);
}
