#pragma once

// Rectangular charts, tensor-valued grid fields and the finite-difference /
// quadrature kernels that every other module is built on.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace statbonnet {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  bool operator==(const Interval&) const = default;
};

using MultiIndex = std::vector<int>;

/// Minimum number of points per axis (width of the 4th-order stencils).
inline constexpr int kMinPointsPerAxis = 5;

/// A uniform rectangular grid over a box of coordinates.
///
/// Points are enumerated in row-major order: axis 0 varies slowest.
class Chart {
 public:
  Chart(std::vector<Interval> ranges, std::vector<int> counts);

  /// Same range and point count on every axis.
  static Chart uniform(int dim, Interval range, int count);

  int dim() const noexcept { return static_cast<int>(ranges_.size()); }
  const std::vector<Interval>& ranges() const noexcept { return ranges_; }
  const std::vector<int>& counts() const noexcept { return counts_; }
  int count(int axis) const { return counts_.at(axis); }
  double lo(int axis) const { return ranges_.at(axis).lo; }
  double hi(int axis) const { return ranges_.at(axis).hi; }
  double spacing(int axis) const { return spacing_.at(axis); }
  std::size_t stride(int axis) const { return strides_.at(axis); }
  std::size_t size() const noexcept { return size_; }

  std::size_t flat(const MultiIndex& index) const;
  MultiIndex multi(std::size_t flat) const;
  int index_along(std::size_t flat, int axis) const {
    return static_cast<int>((flat / strides_[axis]) % static_cast<std::size_t>(counts_[axis]));
  }
  double coordinate(int axis, int index) const { return ranges_[axis].lo + index * spacing_[axis]; }
  std::vector<double> point(std::size_t flat) const;
  void point(std::size_t flat, std::span<double> out) const;

  /// Middle grid point (floor of count/2 on every axis).
  MultiIndex center() const;
  /// Euclidean length of the box diagonal.
  double diameter() const;
  bool contains(const MultiIndex& index) const;

  bool operator==(const Chart& other) const {
    return ranges_ == other.ranges_ && counts_ == other.counts_;
  }

 private:
  std::vector<Interval> ranges_;
  std::vector<int> counts_;
  std::vector<double> spacing_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

/// Real tensor components sampled at every point of a chart.
///
/// `value_shape` lists the component dimensions ([] scalar, [n] covector,
/// [n,n] matrix, ...); components are stored row-major after the point index.
class Field {
 public:
  Field(Chart chart, std::vector<int> value_shape);

  using PointFunction = std::function<void(std::span<const double> x, std::span<double> out)>;

  /// Evaluates `fn` at the coordinates of every grid point.
  static Field sample(const Chart& chart, std::vector<int> value_shape, const PointFunction& fn);

  const Chart& chart() const noexcept { return chart_; }
  const std::vector<int>& value_shape() const noexcept { return shape_; }
  std::size_t components() const noexcept { return ncomp_; }
  std::size_t points() const noexcept { return chart_.size(); }

  std::span<double> at(std::size_t point) { return {data_.data() + point * ncomp_, ncomp_}; }
  std::span<const double> at(std::size_t point) const { return {data_.data() + point * ncomp_, ncomp_}; }
  double& operator()(std::size_t point, std::size_t comp) { return data_[point * ncomp_ + comp]; }
  double operator()(std::size_t point, std::size_t comp) const { return data_[point * ncomp_ + comp]; }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  /// Row-major component offset of a multi-index into the value shape.
  std::size_t offset(std::initializer_list<int> index) const;

  double max_abs() const;
  double rms() const;
  /// Throws NumericalFailure naming `op` if any entry is NaN or infinite.
  void require_finite(std::string_view op) const;
  bool same_layout(const Field& other) const {
    return chart_ == other.chart_ && shape_ == other.shape_;
  }

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double scale);

 private:
  Chart chart_;
  std::vector<int> shape_;
  std::size_t ncomp_ = 1;
  std::vector<double> data_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double scale, Field a);

/// Max of |a - b| over all entries; layouts must agree.
double max_abs_difference(const Field& a, const Field& b);

/// Componentwise partial derivative along `axis`: centered 5-point 4th-order
/// stencil in the interior, one-sided closures on the two layers nearest each
/// boundary (6-point 5th order, or 5-point 4th order on a 5-point axis).
/// Exact on polynomials of degree <= 4.
Field partial(const Field& field, int axis);

/// d_i d_j of every component. Mixed derivatives are partial(partial(., j), i);
/// pure second derivatives use direct stencils, 4th order in the interior
/// with higher-order one-sided closures, so the order holds up to the boundary.
Field second_partial(const Field& field, int axis_i, int axis_j);

struct LatticeStep {
  int axis = 0;
  int direction = 1;  // +1 or -1
};

struct LatticePath {
  MultiIndex base;
  std::vector<LatticeStep> steps;

  /// Path traversed backwards (starts where this one ends).
  LatticePath reversed(const Chart& chart) const;
};

/// Integral of a one-form (value shape [n] or [N, n]) along a lattice path;
/// returns one value per leading component. Each unit step uses a 4th-order
/// (cubic) quadrature of the pulled-back component along the step axis.
/// Steps are accumulated per edge with net multiplicity so that a path and
/// its reversal give exactly opposite results.
std::vector<double> path_integrate(const Field& one_form, const LatticePath& path);

/// Integral of component `comp` of a scalar line density over the grid cell
/// [index, index+1] along `axis` starting at point `lower`.
double cell_integral(const Field& field, std::size_t lower, int axis, std::size_t comp);

/// Visits every grid point once along the canonical staircase rooted at
/// `base`: all steps along axis_order[0] through the base, then along
/// axis_order[1] from every point reached so far, and so on.
/// `step(from, to, axis, direction)` is invoked after `from` is reached.
void for_each_staircase_step(const Chart& chart, const MultiIndex& base, std::span<const int> axis_order,
                             const std::function<void(std::size_t, std::size_t, int, int)>& step);

/// Identity axis order 0, 1, ..., dim-1.
std::vector<int> default_axis_order(int dim);

/// Potential F of a (nearly) closed one-form with F(base) = 0, integrated
/// along the staircase path for `axis_order` (default: 0, 1, ...). Value
/// shape [] for a [n] form, [N] for a [N, n] form.
Field potential_from_closed_form(const Field& one_form, const MultiIndex& base,
                                 std::span<const int> axis_order = {});

/// Max |F_forward - F_reversed| between the staircase potentials for the
/// default axis order and its reverse. Zero up to quadrature error for closed
/// forms; measures enclosed curl otherwise.
double path_dependence(const Field& one_form, const MultiIndex& base);

/// max over grid, index pairs and leading components of |d_i w_j - d_j w_i|.
double closedness_residual(const Field& one_form);

/// Local tensor-product Lagrange interpolation of a field at arbitrary
/// coordinates inside its chart.
class LagrangeInterpolator {
 public:
  /// `points_per_axis` nodes per axis (4 = cubic, 6 = quintic).
  explicit LagrangeInterpolator(const Field& field, int points_per_axis = 6);

  /// Writes all components at coordinates `x`; false if `x` is outside the chart.
  bool evaluate(std::span<const double> x, std::span<double> out) const;

 private:
  Field field_;
  int order_;
};

/// log2(coarse / fine): measured order for a halved grid spacing.
double measured_order(double coarse_error, double fine_error);

}  // namespace statbonnet
