#pragma once

#include <Eigen/Dense>
#include <array>
#include <limits>
#include <memory>
#include <vector>

#include "orbitpde/geometry.hpp"

namespace orbitpde {

/// Node placement along one chart axis.
///  - Boundary at both ends: n nodes including both ends.
///  - Axis at the low end: nodes at lo + (i + 1/2) h with h = L / (n - 1/2),
///    so the last node lies on the boundary and the axis sits half a cell
///    below the first node.
///  - Periodic: n nodes lo + i h with h = L / n.
struct GridAxis {
  double lo = 0.0, hi = 1.0, h = 1.0;
  EdgeTag lo_tag = EdgeTag::Boundary, hi_tag = EdgeTag::Boundary;
  int n = 0;
  std::vector<double> x;
};

/// Tensor-product grid on a chart of dimension 1 or 2, with the geometric
/// data every discrete operator needs evaluated once at construction.
class Grid {
 public:
  /// One of the corner-triangle elements of the variational discretization:
  /// the gradient is D = ((v[ix] - v[c]) sx, (v[iy] - v[c]) sy).
  struct Element {
    int c = -1, ix = -1, iy = -1;
    double sx = 0.0, sy = 0.0;
    Eigen::Matrix2d ginv = Eigen::Matrix2d::Identity();
    double w = 0.0;
  };

  struct NodeGeometry {
    Eigen::Matrix2d ginv = Eigen::Matrix2d::Identity();
    Eigen::Vector2d drift = Eigen::Vector2d::Zero();
    std::array<Eigen::Matrix2d, 2> gamma{Eigen::Matrix2d::Zero(), Eigen::Matrix2d::Zero()};
    double mass = 0.0;  // integral of V sqrt(g) over the dual cell
  };

  Grid(std::shared_ptr<const QuotientChart> chart, int n1, int n2 = 1);

  const QuotientChart& chart() const { return *chart_; }
  std::shared_ptr<const QuotientChart> chart_ptr() const { return chart_; }
  int dim() const { return dim_; }
  const GridAxis& axis(int a) const { return axes_[a]; }
  int n1() const { return axes_[0].n; }
  int n2() const { return dim_ == 2 ? axes_[1].n : 1; }
  int size() const { return n1() * n2(); }
  int index(int i, int j = 0) const { return i + n1() * j; }
  std::array<int, 2> ij(int k) const { return {k % n1(), k / n1()}; }
  Vec point(int k) const;
  /// Chart point for fractional-free index pairs that may lie on ghost rows.
  Vec point(int i, int j) const;

  bool is_boundary(int k) const { return boundary_[k]; }
  /// Node at fractional-free index (i, j) after periodic wrap and reflection
  /// through the axis; -1 outside the grid.
  int resolve(int i, int j) const;
  int neighbor(int k, int di, int dj) const;

  const std::vector<int>& unknowns() const { return unknowns_; }
  /// Position of node k in `unknowns()`, -1 for Dirichlet nodes.
  int unknown_index(int k) const { return unknown_index_[k]; }

  const NodeGeometry& geometry(int k) const { return node_geom_[k]; }
  const std::vector<Element>& elements() const { return elements_; }
  bool variational() const { return !elements_.empty(); }

  /// Smallest spacing over the axes.
  double spacing() const;

 private:
  void build_elements();
  void build_node_geometry();
  double weighted_density(const Vec& x) const;

  std::shared_ptr<const QuotientChart> chart_;
  int dim_;
  std::array<GridAxis, 2> axes_;
  std::vector<bool> boundary_;
  std::vector<int> unknowns_;
  std::vector<int> unknown_index_;
  std::vector<NodeGeometry> node_geom_;
  std::vector<Element> elements_;
};

/// Grid-sampled scalar field with convergence metadata.
struct SolutionField {
  std::shared_ptr<const Grid> grid;
  std::vector<double> values;
  double residual_norm = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  bool converged = false;

  /// Coordinate gradient (covector) at node k: centered where both
  /// neighbors exist, second-order one-sided otherwise.
  Eigen::Vector2d gradient(int k) const;
  /// |grad v| in the chart metric.
  double gradient_norm(int k) const;
  /// Piecewise cubic (4-point Lagrange per axis) interpolation.
  double interpolate(const Vec& p) const;
};

SolutionField make_field(std::shared_ptr<const Grid> grid, const std::function<double(const Vec&)>& f);

/// u = v o pi on the ambient tube lift(chart box x [-T, T]).
class AmbientSampler {
 public:
  AmbientSampler(const SolutionField& field, double tube_half_width);

  double value(const Vec& q) const;
  /// Coordinate gradient by centered differences with step h.
  Vec gradient(const Vec& q, double h) const;
  /// |grad u| in the ambient metric.
  double gradient_norm(const Vec& q, double h) const;
  bool contains(const Vec& q) const;

 private:
  const SolutionField* field_;
  double tube_;
};

AmbientSampler lift_field(const QuotientChart& chart, const SolutionField& v, double tube_half_width = 1.0);

/// Group parameter t of an ambient point q = lift(x, t).
double orbit_parameter(const QuotientChart& chart, const Vec& q);

}  // namespace orbitpde
