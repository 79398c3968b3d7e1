#include "orbitpde/grid.hpp"

#include <cmath>
#include <sstream>

#include "orbitpde/errors.hpp"

namespace orbitpde {

namespace {

// 3-point Gauss-Legendre on [0, 1].
constexpr std::array<double, 3> kGaussX{0.1127016653792583, 0.5, 0.8872983346207417};
constexpr std::array<double, 3> kGaussW{0.2777777777777778, 0.4444444444444444, 0.2777777777777778};

GridAxis make_axis(const ChartAxis& a, int n) {
  GridAxis g;
  g.lo = a.lo;
  g.hi = a.hi;
  g.lo_tag = a.lo_tag;
  g.hi_tag = a.hi_tag;
  g.n = n;
  const double len = a.hi - a.lo;
  g.x.resize(n);
  if (a.lo_tag == EdgeTag::Periodic) {
    g.h = len / n;
    for (int i = 0; i < n; ++i) g.x[i] = a.lo + i * g.h;
  } else if (a.lo_tag == EdgeTag::Axis) {
    g.h = len / (n - 0.5);
    for (int i = 0; i < n; ++i) g.x[i] = a.lo + (i + 0.5) * g.h;
    g.x[n - 1] = a.hi;
  } else {
    g.h = len / (n - 1);
    for (int i = 0; i < n; ++i) g.x[i] = a.lo + i * g.h;
    g.x[n - 1] = a.hi;
  }
  return g;
}

}  // namespace

Grid::Grid(std::shared_ptr<const QuotientChart> chart, int n1, int n2) : chart_(std::move(chart)) {
  if (!chart_) throw PreconditionError("Grid: null chart");
  dim_ = chart_->dim;
  if (dim_ < 1 || dim_ > 2) {
    std::ostringstream os;
    os << "Grid: grid solves support quotient dimension 1 or 2, chart has " << dim_;
    throw PreconditionError(os.str());
  }
  const std::array<int, 2> n{n1, n2};
  for (int a = 0; a < dim_; ++a) {
    const auto& ca = chart_->axes[a];
    if (n[a] < 4) throw PreconditionError("Grid: need at least 4 nodes per axis");
    if (ca.hi_tag == EdgeTag::Axis) throw PreconditionError("Grid: axis edges must be on the low end");
    if (ca.lo_tag == EdgeTag::Axis && a != 0) throw PreconditionError("Grid: only axis 0 may have an axis edge");
    if ((ca.lo_tag == EdgeTag::Periodic) != (ca.hi_tag == EdgeTag::Periodic))
      throw PreconditionError("Grid: periodic tags must come in pairs");
    axes_[a] = make_axis(ca, n[a]);
  }
  if (dim_ == 2 && axes_[0].lo_tag == EdgeTag::Axis) {
    if (axes_[1].lo_tag != EdgeTag::Periodic) throw PreconditionError("Grid: an axis edge needs a periodic angle");
    if (n2 % 2 != 0) throw PreconditionError("Grid: polar grids need an even number of angular nodes");
  }
  if (dim_ == 1) {
    axes_[1] = GridAxis{};
    axes_[1].n = 1;
    axes_[1].x = {0.0};
  }

  const int total = size();
  boundary_.assign(total, false);
  unknown_index_.assign(total, -1);
  for (int k = 0; k < total; ++k) {
    const auto [i, j] = ij(k);
    bool b = false;
    if (axes_[0].lo_tag == EdgeTag::Boundary && i == 0) b = true;
    if (axes_[0].hi_tag == EdgeTag::Boundary && i == n1 - 1) b = true;
    if (dim_ == 2) {
      if (axes_[1].lo_tag == EdgeTag::Boundary && j == 0) b = true;
      if (axes_[1].hi_tag == EdgeTag::Boundary && j == n2 - 1) b = true;
    }
    boundary_[k] = b;
    if (!b) {
      unknown_index_[k] = static_cast<int>(unknowns_.size());
      unknowns_.push_back(k);
    }
  }

  build_node_geometry();
  if (chart_->has_weight()) build_elements();
}

Vec Grid::point(int k) const {
  const auto [i, j] = ij(k);
  return point(i, j);
}

Vec Grid::point(int i, int j) const {
  Vec p(dim_);
  const auto& a0 = axes_[0];
  p(0) = (i >= 0 && i < a0.n) ? a0.x[i]
                               : (a0.lo_tag == EdgeTag::Axis ? a0.lo + (i + 0.5) * a0.h : a0.lo + i * a0.h);
  if (dim_ == 2) {
    const auto& a1 = axes_[1];
    p(1) = (j >= 0 && j < a1.n) ? a1.x[j] : a1.lo + j * a1.h;
  }
  return p;
}

int Grid::resolve(int i, int j) const {
  const int m1 = n1(), m2 = n2();
  if (dim_ == 2 && axes_[1].lo_tag == EdgeTag::Periodic) j = ((j % m2) + m2) % m2;
  if (i < 0 && axes_[0].lo_tag == EdgeTag::Axis) {
    i = -1 - i;
    if (dim_ == 2) j = (j + m2 / 2) % m2;
  }
  if (axes_[0].lo_tag == EdgeTag::Periodic) i = ((i % m1) + m1) % m1;
  if (i < 0 || i >= m1 || j < 0 || j >= m2) return -1;
  return index(i, j);
}

int Grid::neighbor(int k, int di, int dj) const {
  const auto [i, j] = ij(k);
  return resolve(i + di, j + dj);
}

double Grid::spacing() const {
  double h = axes_[0].h;
  if (dim_ == 2) h = std::min(h, axes_[1].h);
  return h;
}

double Grid::weighted_density(const Vec& x) const {
  return chart_->weight(x) * chart_->volume_density(x);
}

void Grid::build_node_geometry() {
  const int total = size();
  node_geom_.resize(total);
  const bool weighted = chart_->has_weight();
  for (int k = 0; k < total; ++k) {
    const Vec x = point(k);
    NodeGeometry& g = node_geom_[k];
    const Mat gm = chart_->metric(x);
    const Mat gi = gm.inverse();
    const Vec j = chart_->drift(x);
    const auto gam = chart_->christoffel(x);
    g.ginv.setIdentity();
    g.drift.setZero();
    for (int a = 0; a < dim_; ++a) {
      g.drift(a) = j(a);
      for (int b = 0; b < dim_; ++b) g.ginv(a, b) = gi(a, b);
    }
    for (int c = 0; c < dim_; ++c) {
      g.gamma[c].setZero();
      for (int a = 0; a < dim_; ++a)
        for (int b = 0; b < dim_; ++b) g.gamma[c](a, b) = gam[c](a, b);
    }
    const Eigen::SelfAdjointEigenSolver<Mat> eig(gm);
    if (!(eig.eigenvalues().minCoeff() > 1e-12)) {
      std::ostringstream os;
      os << "Grid: metric is not positive definite at node " << k;
      throw PreconditionError(os.str());
    }

    // Dual cell: [x_i - h/2, x_i + h/2] clipped to the chart box, per axis.
    const auto [i, jj] = ij(k);
    std::array<double, 2> lo{}, hi{};
    for (int a = 0; a < dim_; ++a) {
      const auto& ax = axes_[a];
      const double c = a == 0 ? ax.x[i] : ax.x[jj];
      lo[a] = c - 0.5 * ax.h;
      hi[a] = c + 0.5 * ax.h;
      if (ax.lo_tag != EdgeTag::Periodic) {
        lo[a] = std::max(lo[a], ax.lo);
        hi[a] = std::min(hi[a], ax.hi);
      }
    }
    double mass = 0.0;
    if (dim_ == 1) {
      for (int q = 0; q < 3; ++q) {
        Vec p(1);
        p(0) = lo[0] + kGaussX[q] * (hi[0] - lo[0]);
        mass += kGaussW[q] * (weighted ? weighted_density(p) : chart_->volume_density(p));
      }
      mass *= hi[0] - lo[0];
    } else {
      for (int q = 0; q < 3; ++q)
        for (int r = 0; r < 3; ++r) {
          Vec p(2);
          p << lo[0] + kGaussX[q] * (hi[0] - lo[0]), lo[1] + kGaussX[r] * (hi[1] - lo[1]);
          mass += kGaussW[q] * kGaussW[r] * (weighted ? weighted_density(p) : chart_->volume_density(p));
        }
      mass *= (hi[0] - lo[0]) * (hi[1] - lo[1]);
    }
    g.mass = mass;
  }
}

void Grid::build_elements() {
  const auto& a0 = axes_[0];
  if (dim_ == 1) {
    for (int i = 0; i + 1 < a0.n; ++i) {
      Element e;
      e.c = index(i);
      e.ix = index(i + 1);
      e.sx = 1.0 / (a0.x[i + 1] - a0.x[i]);
      Vec mid(1);
      mid(0) = 0.5 * (a0.x[i] + a0.x[i + 1]);
      e.ginv(0, 0) = 1.0 / chart_->metric(mid)(0, 0);
      double w = 0.0;
      for (int q = 0; q < 3; ++q) {
        Vec p(1);
        p(0) = a0.x[i] + kGaussX[q] * (a0.x[i + 1] - a0.x[i]);
        w += kGaussW[q] * weighted_density(p);
      }
      e.w = w * (a0.x[i + 1] - a0.x[i]);
      elements_.push_back(e);
    }
    return;
  }

  const auto& a1 = axes_[1];
  const bool periodic1 = a1.lo_tag == EdgeTag::Periodic;
  const int cells1 = periodic1 ? a1.n : a1.n - 1;
  const int cells0 = a0.lo_tag == EdgeTag::Periodic ? a0.n : a0.n - 1;
  auto density = [&](int node) { return weighted_density(point(node)); };

  for (int j = 0; j < cells1; ++j)
    for (int i = 0; i < cells0; ++i) {
      const double hx = a0.h, hy = a1.h;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          Element e;
          e.c = resolve(i + a, j + b);
          e.ix = resolve(i + 1 - a, j + b);
          e.iy = resolve(i + a, j + 1 - b);
          e.sx = (a == 0 ? 1.0 : -1.0) / hx;
          e.sy = (b == 0 ? 1.0 : -1.0) / hy;
          e.ginv = node_geom_[e.c].ginv;
          e.w = 0.25 * hx * hy * density(e.c);
          elements_.push_back(e);
        }
    }

  if (a0.lo_tag == EdgeTag::Axis) {
    // Sliver sectors between the axis and the first ring. The radial
    // difference runs through the axis to the antipodal node.
    const double r0 = a0.x[0];
    const int half = a1.n / 2;
    for (int j = 0; j < a1.n; ++j) {
      for (int b = 0; b < 2; ++b) {
        const int jc = (j + b) % a1.n;
        const int jo = (j + 1 - b) % a1.n;
        Element e;
        e.c = index(0, jc);
        e.ix = index(0, (jc + half) % a1.n);
        e.iy = index(0, jo);
        e.sx = -1.0 / (2.0 * r0);
        e.sy = (b == 0 ? 1.0 : -1.0) / a1.h;
        e.ginv = node_geom_[e.c].ginv;
        double w0 = 0.0;
        for (int q = 0; q < 3; ++q) {
          Vec p(2);
          p << kGaussX[q] * r0, a1.x[jc];
          w0 += kGaussW[q] * weighted_density(p);
        }
        e.w = 0.5 * a1.h * w0 * r0;
        elements_.push_back(e);
      }
    }
  }
}

// ---------------------------------------------------------------------------

Eigen::Vector2d SolutionField::gradient(int k) const {
  const Grid& g = *grid;
  Eigen::Vector2d d = Eigen::Vector2d::Zero();
  const auto [i, j] = g.ij(k);
  for (int a = 0; a < g.dim(); ++a) {
    const double h = g.axis(a).h;
    const int di = a == 0 ? 1 : 0, dj = a == 0 ? 0 : 1;
    const int kp = g.resolve(i + di, j + dj), km = g.resolve(i - di, j - dj);
    if (kp >= 0 && km >= 0) {
      d(a) = (values[kp] - values[km]) / (2.0 * h);
    } else if (kp >= 0) {
      const int kpp = g.resolve(i + 2 * di, j + 2 * dj);
      d(a) = (-3.0 * values[k] + 4.0 * values[kp] - values[kpp]) / (2.0 * h);
    } else {
      const int kmm = g.resolve(i - 2 * di, j - 2 * dj);
      d(a) = (3.0 * values[k] - 4.0 * values[km] + values[kmm]) / (2.0 * h);
    }
  }
  return d;
}

double SolutionField::gradient_norm(int k) const {
  const Eigen::Vector2d d = gradient(k);
  return std::sqrt(std::max(0.0, d.dot(grid->geometry(k).ginv * d)));
}

double SolutionField::interpolate(const Vec& p) const {
  const Grid& g = *grid;
  std::array<std::array<int, 4>, 2> idx{};
  std::array<std::array<double, 4>, 2> wts{};
  for (int a = 0; a < 2; ++a) {
    if (a >= g.dim()) {
      idx[a] = {0, 0, 0, 0};
      wts[a] = {1.0, 0.0, 0.0, 0.0};
      continue;
    }
    const auto& ax = g.axis(a);
    const double origin = ax.lo_tag == EdgeTag::Axis ? ax.lo + 0.5 * ax.h : ax.lo;
    const double u = (p(a) - origin) / ax.h;
    int start = static_cast<int>(std::floor(u)) - 1;
    if (ax.lo_tag == EdgeTag::Boundary) start = std::clamp(start, 0, ax.n - 4);
    if (ax.lo_tag == EdgeTag::Axis) start = std::min(start, ax.n - 4);
    if (ax.hi_tag == EdgeTag::Boundary && u > ax.n - 1 + 1e-9) throw PreconditionError("interpolate: point outside grid");
    if (ax.lo_tag == EdgeTag::Boundary && u < -1e-9) throw PreconditionError("interpolate: point outside grid");
    const double t = u - start;
    for (int m = 0; m < 4; ++m) {
      double w = 1.0;
      for (int l = 0; l < 4; ++l)
        if (l != m) w *= (t - l) / static_cast<double>(m - l);
      idx[a][m] = start + m;
      wts[a][m] = w;
    }
  }
  double acc = 0.0;
  for (int m = 0; m < 4; ++m)
    for (int l = 0; l < 4; ++l) {
      const double w = wts[0][m] * wts[1][l];
      if (w == 0.0) continue;
      const int node = g.resolve(idx[0][m], idx[1][l]);
      if (node < 0) throw PreconditionError("interpolate: stencil leaves the grid");
      acc += w * values[node];
    }
  return acc;
}

SolutionField make_field(std::shared_ptr<const Grid> grid, const std::function<double(const Vec&)>& f) {
  SolutionField out;
  out.values.resize(grid->size());
  for (int k = 0; k < grid->size(); ++k) out.values[k] = f(grid->point(k));
  out.grid = std::move(grid);
  return out;
}

// ---------------------------------------------------------------------------

double orbit_parameter(const QuotientChart& chart, const Vec& q) {
  switch (chart.kind) {
    case ChartKind::Helicoidal:
      return q(2);
    case ChartKind::Rotational:
      return std::atan2(q(1), q(0));
    case ChartKind::Hyperbolic:
      return std::log(q.norm());
    default:
      throw PreconditionError("orbit_parameter: chart has no lift");
  }
}

AmbientSampler::AmbientSampler(const SolutionField& field, double tube_half_width)
    : field_(&field), tube_(tube_half_width) {}

bool AmbientSampler::contains(const Vec& q) const {
  const QuotientChart& c = field_->grid->chart();
  if (c.ambient == AmbientKind::HalfSpace && !(q(q.size() - 1) > 0.0)) return false;
  if (c.kind != ChartKind::Rotational && std::abs(orbit_parameter(c, q)) > tube_) return false;
  const Vec p = c.project(q);
  for (int a = 0; a < c.dim; ++a) {
    const auto& ax = c.axes[a];
    if (ax.lo_tag == EdgeTag::Periodic) continue;
    const double tol = 1e-12 * std::max(1.0, std::abs(ax.hi - ax.lo));
    if (p(a) < ax.lo - tol || p(a) > ax.hi + tol) return false;
  }
  return true;
}

double AmbientSampler::value(const Vec& q) const {
  if (!contains(q)) throw PreconditionError("AmbientSampler: query outside the lifted tube");
  return field_->interpolate(field_->grid->chart().project(q));
}

Vec AmbientSampler::gradient(const Vec& q, double h) const {
  Vec g(q.size());
  for (int i = 0; i < q.size(); ++i) {
    Vec qp = q, qm = q;
    qp(i) += h;
    qm(i) -= h;
    g(i) = (value(qp) - value(qm)) / (2.0 * h);
  }
  return g;
}

double AmbientSampler::gradient_norm(const Vec& q, double h) const {
  const Vec g = gradient(q, h);
  const Mat metric = field_->grid->chart().ambient_metric(q);
  return std::sqrt(g.dot(metric.inverse() * g));
}

AmbientSampler lift_field(const QuotientChart& chart, const SolutionField& v, double tube_half_width) {
  if (!chart.has_lift()) throw PreconditionError("lift_field: chart has no lift");
  if (&v.grid->chart() != &chart && v.grid->chart().kind != chart.kind)
    throw PreconditionError("lift_field: field lives on a different chart");
  return AmbientSampler(v, tube_half_width);
}

}  // namespace orbitpde
