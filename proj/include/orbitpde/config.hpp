#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "orbitpde/flux.hpp"
#include "orbitpde/geometry.hpp"
#include "orbitpde/solver.hpp"

namespace orbitpde {

/// Geometry block resolved to a chart.
struct GeometryConfig {
  std::string kind;   // flat, rotational, helicoidal, hyperbolic, custom
  std::string shape;  // disk, annulus, rectangle, ball, interval, table
  std::shared_ptr<const QuotientChart> chart;
  double lambda = 0.0;
  int n = 0;
  double r_in = 0.0, r_out = 0.0;  // radial extent (rho for hyperbolic)
};

struct BarrierConfig {
  std::vector<double> c;  // hyperbolic barrier levels
  int nodes = 50;
  double s_max = 4.0;
  double delta = 0.0;   // requested strip width, 0 = automatic
  double offset = 0.5;  // hyperbolic strip shift D in s = asinh(...)
};

struct CurveConfig {
  std::string shape = "circle";  // circle or ellipse
  double radius = 1.0;
  double a = 1.0, b = 1.0;
  int samples = 256;
};

struct ProblemConfig {
  std::filesystem::path source;
  std::string name;  // output prefix

  std::optional<FluxProfile> profile;
  std::optional<GeometryConfig> geometry;
  std::string boundary = "0";
  std::string exact;  // optional closed-form solution
  SolveSettings settings;
  BarrierConfig barrier;
  std::optional<CurveConfig> curve;
  bool comparison_ladder = true;

  std::filesystem::path output_dir = ".";
  std::filesystem::path field;  // saved solution CSV for `verify`

  DomainSpec domain() const;
  std::filesystem::path output(const std::string& suffix) const;
};

/// Reads a JSON problem file (comments allowed). Unknown keys, missing
/// required keys, wrong types, grid sizes outside [8, 4096], malformed
/// expressions and missing referenced files throw ConfigError; invalid flux
/// profiles throw ProfileInvalid.
ProblemConfig load_config(const std::filesystem::path& path);
ProblemConfig parse_config(const std::string& text, const std::filesystem::path& source = "config.json");

}  // namespace orbitpde
