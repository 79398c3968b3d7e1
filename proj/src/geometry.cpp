#include "orbitpde/geometry.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "orbitpde/errors.hpp"

namespace orbitpde {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  return a < 0.0 ? a + kTwoPi : a;
}

void require_radii(double r_in, double r_out, const char* who) {
  if (!(r_in >= 0.0) || !(r_out > r_in) || !std::isfinite(r_out)) {
    std::ostringstream os;
    os << who << ": need 0 <= r_in < r_out, got [" << r_in << ", " << r_out << "]";
    throw PreconditionError(os.str());
  }
}

std::vector<ChartAxis> polar_axes(double r_in, double r_out, const std::string& radial, const std::string& angular) {
  ChartAxis r{radial, r_in, r_out, r_in == 0.0 ? EdgeTag::Axis : EdgeTag::Boundary, EdgeTag::Boundary};
  ChartAxis t{angular, 0.0, kTwoPi, EdgeTag::Periodic, EdgeTag::Periodic};
  return {r, t};
}

std::function<std::vector<std::pair<std::string, double>>(const Vec&)> polar_variables() {
  return [](const Vec& p) {
    return std::vector<std::pair<std::string, double>>{
        {"r", p(0)}, {"theta", p(1)}, {"x", p(0) * std::cos(p(1))}, {"y", p(0) * std::sin(p(1))}};
  };
}

}  // namespace

std::string to_string(ChartKind kind) {
  switch (kind) {
    case ChartKind::Flat:
      return "flat";
    case ChartKind::Rotational:
      return "rotational";
    case ChartKind::Helicoidal:
      return "helicoidal";
    case ChartKind::Hyperbolic:
      return "hyperbolic";
    case ChartKind::Custom:
      return "custom";
  }
  return "?";
}

bool QuotientChart::polar() const {
  return dim == 2 && axes[0].lo_tag == EdgeTag::Axis && axes[1].lo_tag == EdgeTag::Periodic;
}

Mat QuotientChart::ambient_metric(const Vec& q) const {
  Mat g = Mat::Identity(q.size(), q.size());
  if (ambient == AmbientKind::HalfSpace) g /= q(q.size() - 1) * q(q.size() - 1);
  return g;
}

double QuotientChart::volume_density(const Vec& x) const { return std::sqrt(metric(x).determinant()); }

std::vector<Mat> QuotientChart::christoffel(const Vec& x) const {
  const Mat ginv = metric(x).inverse();
  std::vector<Mat> dg(dim);
  for (int l = 0; l < dim; ++l) {
    const double h = 1e-5 * std::max(1.0, std::abs(x(l)));
    Vec xp = x, xm = x;
    xp(l) += h;
    xm(l) -= h;
    dg[l] = (metric(xp) - metric(xm)) / (2.0 * h);
  }
  std::vector<Mat> gamma(dim, Mat::Zero(dim, dim));
  for (int k = 0; k < dim; ++k)
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        double acc = 0.0;
        for (int l = 0; l < dim; ++l) acc += ginv(k, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
        gamma[k](i, j) = 0.5 * acc;
      }
  return gamma;
}

// ---------------------------------------------------------------------------

QuotientChart flat_rectangle_chart(double x0, double x1, double y0, double y1) {
  if (!(x1 > x0) || !(y1 > y0)) throw PreconditionError("flat_rectangle_chart: empty rectangle");
  QuotientChart c;
  c.kind = ChartKind::Flat;
  c.dim = 2;
  c.axes = {{"x", x0, x1, EdgeTag::Boundary, EdgeTag::Boundary}, {"y", y0, y1, EdgeTag::Boundary, EdgeTag::Boundary}};
  c.metric = [](const Vec&) { return Mat::Identity(2, 2); };
  c.drift = [](const Vec&) { return Vec::Zero(2); };
  c.weight = [](const Vec&) { return 1.0; };
  c.variables = [](const Vec& p) {
    return std::vector<std::pair<std::string, double>>{{"x", p(0)}, {"y", p(1)}};
  };
  return c;
}

QuotientChart flat_polar_chart(double r_in, double r_out) {
  require_radii(r_in, r_out, "flat_polar_chart");
  QuotientChart c;
  c.kind = ChartKind::Flat;
  c.dim = 2;
  c.axes = polar_axes(r_in, r_out, "r", "theta");
  c.metric = [](const Vec& p) {
    Mat g = Mat::Zero(2, 2);
    g(0, 0) = 1.0;
    g(1, 1) = p(0) * p(0);
    return g;
  };
  c.drift = [](const Vec&) { return Vec::Zero(2); };
  c.weight = [](const Vec&) { return 1.0; };
  c.variables = polar_variables();
  return c;
}

QuotientChart rotational_chart(double inner_radius, double outer_radius) {
  require_radii(inner_radius, outer_radius, "rotational_chart");
  QuotientChart c;
  c.kind = ChartKind::Rotational;
  c.dim = 1;
  c.axes = {{"r", inner_radius, outer_radius, inner_radius == 0.0 ? EdgeTag::Axis : EdgeTag::Boundary,
             EdgeTag::Boundary}};
  c.metric = [](const Vec&) { return Mat::Identity(1, 1); };
  c.drift = [](const Vec& p) {
    Vec j(1);
    j(0) = -1.0 / p(0);
    return j;
  };
  // Orbit length 2 pi r; the constant factor drops out of every operator.
  c.weight = [](const Vec& p) { return kTwoPi * std::abs(p(0)); };
  c.ambient = AmbientKind::Euclidean;
  c.ambient_dim = 2;
  c.lift = [](const Vec& p, double t) {
    Vec q(2);
    q << p(0) * std::cos(t), p(0) * std::sin(t);
    return q;
  };
  c.project = [](const Vec& q) {
    Vec p(1);
    p(0) = std::hypot(q(0), q(1));
    return p;
  };
  c.variables = [](const Vec& p) { return std::vector<std::pair<std::string, double>>{{"r", p(0)}}; };
  return c;
}

Eigen::Matrix2d helicoidal_slice_metric(double lambda, double x, double y) {
  // Horizontal projection of X = (l y, -l x, 1) restricted to the slice.
  const Eigen::Vector2d xh(lambda * y, -lambda * x);
  const double norm2 = 1.0 + lambda * lambda * (x * x + y * y);
  return Eigen::Matrix2d::Identity() - xh * xh.transpose() / norm2;
}

Eigen::Vector2d helicoidal_slice_drift(double lambda, double x, double y) {
  const double l2 = lambda * lambda;
  const double q = 1.0 + l2 * (x * x + y * y);
  // -grad ln V with grad taken in the quotient metric; the metric is the
  // identity on the radial direction, which is where d ln V points.
  return -l2 / q * Eigen::Vector2d(x, y);
}

QuotientChart helicoidal_chart(double lambda, double r_in, double r_out) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw PreconditionError("helicoidal_chart: lambda must be >= 0");
  require_radii(r_in, r_out, "helicoidal_chart");
  QuotientChart c;
  c.kind = ChartKind::Helicoidal;
  c.dim = 2;
  c.lambda = lambda;
  c.axes = polar_axes(r_in, r_out, "r", "theta");
  const double l2 = lambda * lambda;
  c.metric = [l2](const Vec& p) {
    const double r2 = p(0) * p(0);
    Mat g = Mat::Zero(2, 2);
    g(0, 0) = 1.0;
    g(1, 1) = r2 / (1.0 + l2 * r2);
    return g;
  };
  c.weight = [l2](const Vec& p) { return std::sqrt(1.0 + l2 * p(0) * p(0)); };
  c.drift = [l2](const Vec& p) {
    Vec j = Vec::Zero(2);
    j(0) = -l2 * p(0) / (1.0 + l2 * p(0) * p(0));
    return j;
  };
  c.ambient = AmbientKind::Euclidean;
  c.ambient_dim = 3;
  c.lift = [lambda](const Vec& p, double t) {
    const double x = p(0) * std::cos(p(1)), y = p(0) * std::sin(p(1));
    const double ca = std::cos(lambda * t), sa = std::sin(lambda * t);
    Vec q(3);
    q << x * ca + y * sa, -x * sa + y * ca, t;
    return q;
  };
  c.project = [lambda](const Vec& q) {
    const double ca = std::cos(lambda * q(2)), sa = std::sin(lambda * q(2));
    const double x = q(0) * ca - q(1) * sa, y = q(0) * sa + q(1) * ca;
    Vec p(2);
    p << std::hypot(x, y), wrap_angle(std::atan2(y, x));
    return p;
  };
  c.variables = polar_variables();
  return c;
}

// ---------------------------------------------------------------------------
// Hyperbolic example. Chart coordinates (rho, sigma_1..sigma_{n-2}); the
// point of S is (tanh rho * omega(sigma), sech rho) with omega the standard
// hyperspherical parametrization of the unit sphere in R^{n-1}.

namespace {

// omega(sigma) in R^m, m = sigma.size() + 1, and its Jacobian.
void sphere_point(const Vec& sigma, Vec& omega, Mat& jac) {
  const int k = static_cast<int>(sigma.size());
  const int m = k + 1;
  omega.resize(m);
  jac = Mat::Zero(m, k);
  for (int i = 0; i < m; ++i) {
    // omega_i = prod_{j<i} sin(sigma_j) * (i < k ? cos(sigma_i) : 1)
    auto factor = [&](int j, int deriv_at) {
      if (j < i) return j == deriv_at ? std::cos(sigma(j)) : std::sin(sigma(j));
      // j == i, i < k
      return j == deriv_at ? -std::sin(sigma(j)) : std::cos(sigma(j));
    };
    const int last = i < k ? i : i - 1;
    double val = 1.0;
    for (int j = 0; j <= last; ++j) val *= factor(j, -1);
    omega(i) = val;
    for (int d = 0; d <= last; ++d) {
      double dv = 1.0;
      for (int j = 0; j <= last; ++j) dv *= factor(j, d);
      jac(i, d) = dv;
    }
  }
}

}  // namespace

Vec hyperbolic_chart_point(const Vec& chart_point) {
  const int k = static_cast<int>(chart_point.size()) - 1;
  Vec omega;
  Mat jac;
  sphere_point(chart_point.tail(k), omega, jac);
  const double rho = chart_point(0);
  Vec x(k + 2);
  x.head(k + 1) = std::tanh(rho) * omega;
  x(k + 1) = 1.0 / std::cosh(rho);
  return x;
}

Vec hyperbolic_orbit_mean_curvature(const Vec& x) {
  const int n = static_cast<int>(x.size());
  const double xn = x(n - 1);
  Vec h(n);
  double sum = 0.0;
  for (int i = 0; i < n - 1; ++i) {
    h(i) = -xn * xn * x(i);
    sum += x(i) * x(i);
  }
  h(n - 1) = xn * sum;
  return h;
}

QuotientChart hyperbolic_chart(int n, double geodesic_radius) {
  if (n < 3) throw PreconditionError("hyperbolic_chart: n must be >= 3 (use the radial path for a 1D quotient)");
  if (!(geodesic_radius > 0.0) || !std::isfinite(geodesic_radius))
    throw PreconditionError("hyperbolic_chart: radius must be > 0");
  QuotientChart c;
  c.kind = ChartKind::Hyperbolic;
  c.n = n;
  c.dim = n - 1;
  c.axes.push_back({"rho", 0.0, geodesic_radius, EdgeTag::Axis, EdgeTag::Boundary});
  for (int k = 1; k <= n - 2; ++k) {
    const std::string name = n == 3 ? "sigma" : "sigma" + std::to_string(k);
    if (k < n - 2)
      c.axes.push_back({name, 0.0, std::numbers::pi, EdgeTag::Boundary, EdgeTag::Boundary});
    else
      c.axes.push_back({name, 0.0, kTwoPi, EdgeTag::Periodic, EdgeTag::Periodic});
  }
  const int dim = c.dim;
  c.metric = [dim](const Vec& p) {
    Mat g = Mat::Zero(dim, dim);
    g(0, 0) = 1.0;
    const double sh = std::sinh(p(0));
    double f = sh * sh;
    for (int k = 1; k < dim; ++k) {
      g(k, k) = f;
      f *= std::sin(p(k)) * std::sin(p(k));
    }
    return g;
  };
  c.weight = [](const Vec& p) { return std::cosh(p(0)); };
  // J from the orbit mean curvature: J = G^{-1} Dphi^T (I / x_n^2) H.
  c.drift = [dim, metric = c.metric](const Vec& p) {
    const double rho = p(0);
    Vec omega;
    Mat jac;
    sphere_point(p.tail(dim - 1), omega, jac);
    const int m = dim;  // ambient dimension minus one
    Mat dphi = Mat::Zero(m + 1, dim);
    const double th = std::tanh(rho), sech = 1.0 / std::cosh(rho);
    dphi.col(0).head(m) = sech * sech * omega;
    dphi(m, 0) = -sech * th;
    for (int k = 1; k < dim; ++k) dphi.col(k).head(m) = th * jac.col(k - 1);
    Vec x(m + 1);
    x.head(m) = th * omega;
    x(m) = sech;
    const Vec h = hyperbolic_orbit_mean_curvature(x);
    const Vec cov = dphi.transpose() * h / (sech * sech);
    return Vec(metric(p).ldlt().solve(cov));
  };
  c.ambient = AmbientKind::HalfSpace;
  c.ambient_dim = n;
  c.lift = [](const Vec& p, double t) { return Vec(std::exp(t) * hyperbolic_chart_point(p)); };
  c.project = [dim](const Vec& q) {
    const Vec x = q / q.norm();
    const int m = dim;
    const Vec xp = x.head(m);
    const double r = xp.norm();
    Vec p(dim);
    p(0) = std::atanh(std::min(r, 1.0 - 1e-16));
    // Recover hyperspherical angles from omega = xp / r.
    for (int k = 0; k + 1 < dim; ++k) {
      if (k + 2 < dim) {
        p(k + 1) = std::atan2(xp.tail(m - k - 1).norm(), xp(k));
      } else {
        p(k + 1) = wrap_angle(std::atan2(xp(m - 1), xp(m - 2)));
      }
    }
    return p;
  };
  c.variables = [dim](const Vec& p) {
    std::vector<std::pair<std::string, double>> out{{"rho", p(0)}};
    if (dim == 2) {
      out.emplace_back("sigma", p(1));
    } else {
      for (int k = 1; k < dim; ++k) out.emplace_back("sigma" + std::to_string(k), p(k));
    }
    const Vec x = hyperbolic_chart_point(p);
    out.emplace_back("x", x(0));
    out.emplace_back("y", x(1));
    out.emplace_back("xn", x(x.size() - 1));
    return out;
  };
  return c;
}

// ---------------------------------------------------------------------------

namespace {

class Lattice {
 public:
  Lattice(std::vector<ChartAxis> axes, std::vector<int> nodes) : axes_(std::move(axes)), nodes_(std::move(nodes)) {}

  // Multilinear interpolation of per-node vectors.
  std::vector<double> interpolate(const std::vector<std::vector<double>>& values, const Vec& p) const {
    const int d = static_cast<int>(axes_.size());
    std::vector<int> base(d);
    std::vector<double> frac(d);
    for (int a = 0; a < d; ++a) {
      const bool periodic = axes_[a].lo_tag == EdgeTag::Periodic;
      const int n = nodes_[a];
      const double len = axes_[a].hi - axes_[a].lo;
      const double h = periodic ? len / n : len / (n - 1);
      double u = (p(a) - axes_[a].lo) / h;
      if (periodic) {
        u = std::fmod(u, static_cast<double>(n));
        if (u < 0) u += n;
        base[a] = std::min(static_cast<int>(std::floor(u)), n - 1);
      } else {
        base[a] = std::clamp(static_cast<int>(std::floor(u)), 0, n - 2);
      }
      frac[a] = u - base[a];
    }
    const std::size_t width = values.front().size();
    std::vector<double> out(width, 0.0);
    for (int corner = 0; corner < (1 << d); ++corner) {
      double w = 1.0;
      int idx = 0, stride = 1;
      for (int a = 0; a < d; ++a) {
        const int bit = (corner >> a) & 1;
        w *= bit ? frac[a] : 1.0 - frac[a];
        int i = base[a] + bit;
        if (axes_[a].lo_tag == EdgeTag::Periodic) i %= nodes_[a];
        idx += i * stride;
        stride *= nodes_[a];
      }
      for (std::size_t c = 0; c < width; ++c) out[c] += w * values[idx][c];
    }
    return out;
  }

 private:
  std::vector<ChartAxis> axes_;
  std::vector<int> nodes_;
};

}  // namespace

QuotientChart custom_chart(const CustomChartTable& table) {
  const int dim = static_cast<int>(table.axes.size());
  if (dim < 1 || dim > 2) throw PreconditionError("custom_chart: dimension must be 1 or 2");
  if (static_cast<int>(table.nodes.size()) != dim) throw PreconditionError("custom_chart: nodes per axis missing");
  std::size_t total = 1;
  for (int a = 0; a < dim; ++a) {
    if (table.nodes[a] < 2) throw PreconditionError("custom_chart: need >= 2 lattice points per axis");
    total *= static_cast<std::size_t>(table.nodes[a]);
  }
  const std::size_t mw = dim == 1 ? 1 : 3;
  if (table.metric.size() != total || table.drift.size() != total)
    throw PreconditionError("custom_chart: metric/drift table size does not match the lattice");
  for (const auto& row : table.metric)
    if (row.size() != mw) throw PreconditionError("custom_chart: metric rows need dim*(dim+1)/2 entries");
  for (const auto& row : table.drift)
    if (row.size() != static_cast<std::size_t>(dim)) throw PreconditionError("custom_chart: drift rows need dim entries");
  if (!table.weight.empty() && table.weight.size() != total)
    throw PreconditionError("custom_chart: weight table size does not match the lattice");

  auto lattice = std::make_shared<Lattice>(table.axes, table.nodes);
  auto metric = std::make_shared<std::vector<std::vector<double>>>(table.metric);
  auto drift = std::make_shared<std::vector<std::vector<double>>>(table.drift);

  QuotientChart c;
  c.kind = ChartKind::Custom;
  c.dim = dim;
  c.axes = table.axes;
  c.metric = [lattice, metric, dim](const Vec& p) {
    const auto v = lattice->interpolate(*metric, p);
    Mat g(dim, dim);
    if (dim == 1) {
      g(0, 0) = v[0];
    } else {
      g << v[0], v[1], v[1], v[2];
    }
    return g;
  };
  c.drift = [lattice, drift, dim](const Vec& p) {
    const auto v = lattice->interpolate(*drift, p);
    Vec j(dim);
    for (int a = 0; a < dim; ++a) j(a) = v[a];
    return j;
  };
  if (!table.weight.empty()) {
    auto weight = std::make_shared<std::vector<std::vector<double>>>();
    for (double w : table.weight) weight->push_back({w});
    c.weight = [lattice, weight](const Vec& p) { return lattice->interpolate(*weight, p)[0]; };
  }
  c.variables = [names = table.axes](const Vec& p) {
    std::vector<std::pair<std::string, double>> out;
    for (std::size_t a = 0; a < names.size(); ++a) out.emplace_back(names[a].name, p(static_cast<int>(a)));
    return out;
  };
  return c;
}

// ---------------------------------------------------------------------------

std::vector<CurveSample> sample_parametric_curve(const std::function<Eigen::Vector2d(double)>& c,
                                                 const std::function<Eigen::Vector2d(double)>& dc,
                                                 const std::function<Eigen::Vector2d(double)>& d2c,
                                                 int samples) {
  if (samples < 1) throw PreconditionError("sample_parametric_curve: need at least one sample");
  std::vector<CurveSample> out;
  out.reserve(samples);
  for (int k = 0; k < samples; ++k) {
    const double t = kTwoPi * k / samples;
    const Eigen::Vector2d p = c(t), v = dc(t), acc = d2c(t);
    const double speed = v.norm();
    if (!(speed > 0.0)) throw PreconditionError("sample_parametric_curve: degenerate parametrization");
    CurveSample s;
    s.x = p(0);
    s.y = p(1);
    s.dx = v(0) / speed;
    s.dy = v(1) / speed;
    s.kappa = (v(0) * acc(1) - v(1) * acc(0)) / (speed * speed * speed);
    out.push_back(s);
  }
  return out;
}

std::vector<CurveSample> circle_samples(double radius, int samples) {
  return ellipse_samples(radius, radius, samples);
}

std::vector<CurveSample> ellipse_samples(double a, double b, int samples) {
  if (!(a > 0.0) || !(b > 0.0)) throw PreconditionError("ellipse_samples: semi-axes must be > 0");
  return sample_parametric_curve([=](double t) { return Eigen::Vector2d(a * std::cos(t), b * std::sin(t)); },
                                 [=](double t) { return Eigen::Vector2d(-a * std::sin(t), b * std::cos(t)); },
                                 [=](double t) { return Eigen::Vector2d(-a * std::cos(t), -b * std::sin(t)); },
                                 samples);
}

MeanConvexityVerdict helicoidal_mean_convexity(double lambda, const std::vector<CurveSample>& curve) {
  MeanConvexityVerdict out;
  const double l2 = lambda * lambda;
  for (const auto& c : curve) {
    if (std::abs(std::hypot(c.dx, c.dy) - 1.0) > 1e-6)
      throw PreconditionError("helicoidal_mean_convexity: curve samples must be arc-length parametrized");
    const double r2 = c.x * c.x + c.y * c.y;
    MeanConvexitySample s;
    s.x = c.x;
    s.y = c.y;
    s.value = c.kappa * (l2 * r2 + 1.0) + l2 * (c.y * c.dx - c.x * c.dy);
    s.holds = s.value >= 0.0;
    s.sufficient_margin = c.kappa - l2 * std::sqrt(r2) / (l2 * r2 + 1.0);
    s.sufficient = s.sufficient_margin >= 0.0;
    out.holds = out.holds && s.holds;
    out.sufficient = out.sufficient && s.sufficient;
    if (!s.holds) ++out.violations;
    out.samples.push_back(s);
  }
  return out;
}

}  // namespace orbitpde
