#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace orbitpde {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

enum class EdgeTag { Boundary, Periodic, Axis };
enum class ChartKind { Flat, Rotational, Helicoidal, Hyperbolic, Custom };
enum class AmbientKind { None, Euclidean, HalfSpace };

std::string to_string(ChartKind kind);

struct ChartAxis {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  EdgeTag lo_tag = EdgeTag::Boundary;
  EdgeTag hi_tag = EdgeTag::Boundary;
};

/// A logically rectangular chart of a region of the orbit space M/G.
///
/// `metric` is the quotient metric in chart components, `drift` the field J
/// (projected mean curvature of the orbits). When `weight` is set it is the
/// orbit volume V and J = -grad ln V. `lift(x, t)` maps a chart point and a
/// group parameter to ambient coordinates; `project` is its left inverse on
/// the ambient side (ambient point -> chart point).
///
/// Polar charts put an Axis tag on the low end of axis 0 and make axis 1
/// periodic; the chart functions must then be even in the radial coordinate.
struct QuotientChart {
  ChartKind kind = ChartKind::Flat;
  int dim = 2;
  std::vector<ChartAxis> axes;

  std::function<Mat(const Vec&)> metric;
  std::function<Vec(const Vec&)> drift;
  std::function<double(const Vec&)> weight;

  AmbientKind ambient = AmbientKind::None;
  int ambient_dim = 0;
  std::function<Vec(const Vec&, double)> lift;
  std::function<Vec(const Vec&)> project;

  /// Named scalar variables available to boundary-data expressions at a chart
  /// point (always includes the axis names, plus x/y where meaningful).
  std::function<std::vector<std::pair<std::string, double>>(const Vec&)> variables;

  double lambda = 0.0;  // helicoidal pitch parameter
  int n = 0;            // ambient dimension of the hyperbolic example

  bool has_weight() const { return static_cast<bool>(weight); }
  bool has_lift() const { return static_cast<bool>(lift); }
  bool polar() const;

  /// Ambient metric at ambient point q (identity or half-space conformal).
  Mat ambient_metric(const Vec& q) const;

  /// sqrt(det metric).
  double volume_density(const Vec& x) const;

  /// Christoffel symbols Gamma^k_ij by centered differences of `metric`;
  /// entry [k](i, j).
  std::vector<Mat> christoffel(const Vec& x) const;
};

/// Flat rectangle [x0,x1] x [y0,y1] with Dirichlet data on all four sides.
QuotientChart flat_rectangle_chart(double x0, double x1, double y0, double y1);

/// Flat polar chart of the disk r < R (r_in = 0) or the annulus r_in < r < R,
/// with J = 0.
QuotientChart flat_polar_chart(double r_in, double r_out);

/// Radial quotient of R^2 by rotations: metric dr^2, V = r, J = -1/r.
/// r_in = 0 puts an axis at the origin.
QuotientChart rotational_chart(double inner_radius, double outer_radius);

/// Slice z = 0 of R^3 under the helicoidal group h_t(x,y,z) =
/// (x cos lt + y sin lt, -x sin lt + y cos lt, z + t), in polar coordinates
/// (r, theta). r_in = 0 gives a disk.
QuotientChart helicoidal_chart(double lambda, double r_in, double r_out);

/// Cartesian components at (x, y) of the helicoidal quotient metric:
/// identity minus <v,X>^2/|X|^2 for the Killing field X = (l y, -l x, 1).
Eigen::Matrix2d helicoidal_slice_metric(double lambda, double x, double y);

/// Cartesian components of J = -grad ln V with V = sqrt(1 + l^2 r^2).
Eigen::Vector2d helicoidal_slice_drift(double lambda, double x, double y);

/// Geodesic polar chart (rho, sigma_1..sigma_{n-2}) of the geodesic ball of
/// radius `geodesic_radius` about (0,...,0,1) in the unit hemisphere S of the
/// half-space model of H^n, which models H^n / {x -> e^t x}.
/// The drift is obtained from the orbit mean curvature field and pushed into
/// the chart; V = cosh rho.
QuotientChart hyperbolic_chart(int n, double geodesic_radius);

/// Mean curvature vector of the dilation orbits at a point x of the unit
/// hemisphere, in half-space coordinates: H_k = -x_n^2 x_k (k < n),
/// H_n = x_n sum_{i<n} x_i^2.
Vec hyperbolic_orbit_mean_curvature(const Vec& x);

/// Point of S for hyperbolic chart coordinates.
Vec hyperbolic_chart_point(const Vec& chart_point);

/// Chart with metric and drift tabulated on a lattice and interpolated
/// bilinearly. Weight is optional. `metric_table[k]` holds the upper
/// triangle (g11, g12, g22) at lattice node k (x-fastest), or (g11) in 1D.
struct CustomChartTable {
  std::vector<ChartAxis> axes;
  std::vector<int> nodes;  // lattice points per axis
  std::vector<std::vector<double>> metric;
  std::vector<std::vector<double>> drift;
  std::vector<double> weight;  // empty: no weight
};
QuotientChart custom_chart(const CustomChartTable& table);

// ---------------------------------------------------------------------------

/// Sample of a planar curve in arc-length parametrization.
struct CurveSample {
  double x = 0.0, y = 0.0;
  double dx = 0.0, dy = 0.0;  // unit tangent
  double kappa = 0.0;         // signed curvature, positive when turning left
};

/// Samples of a closed parametrized curve c(theta), theta in [0, 2pi), with
/// derivatives by the supplied functions, converted to unit speed.
std::vector<CurveSample> sample_parametric_curve(const std::function<Eigen::Vector2d(double)>& c,
                                                 const std::function<Eigen::Vector2d(double)>& dc,
                                                 const std::function<Eigen::Vector2d(double)>& d2c,
                                                 int samples);

std::vector<CurveSample> circle_samples(double radius, int samples);
std::vector<CurveSample> ellipse_samples(double a, double b, int samples);

struct MeanConvexitySample {
  double x = 0.0, y = 0.0;
  double value = 0.0;       // kappa (l^2 r^2 + 1) + l^2 (y x' - x y')
  bool holds = false;       // value >= 0
  double sufficient_margin = 0.0;  // kappa - l^2 r / (l^2 r^2 + 1)
  bool sufficient = false;
};

struct MeanConvexityVerdict {
  std::vector<MeanConvexitySample> samples;
  bool holds = true;       // every sample satisfies the inequality
  bool sufficient = true;  // every sample satisfies the sufficient condition
  int violations = 0;
};

/// Mean convexity of the helicoidal cylinder over a closed planar curve,
/// traversed counterclockwise. Throws PreconditionError if a sample tangent
/// is not unit length within 1e-6.
MeanConvexityVerdict helicoidal_mean_convexity(double lambda, const std::vector<CurveSample>& curve);

// ---------------------------------------------------------------------------

/// Chart, Dirichlet data and optional analytic curvature of inner parallels.
struct DomainSpec {
  std::shared_ptr<const QuotientChart> chart;
  std::function<double(const Vec&)> boundary_data;
  /// H of the inner parallel at distance d from the boundary, at the foot
  /// point x (non-normalized mean curvature with respect to the interior
  /// normal).
  std::function<double(const Vec&, double)> boundary_curvature;
};

}  // namespace orbitpde
