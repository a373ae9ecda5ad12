#include "statbonnet/grid.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>

#include "statbonnet/errors.hpp"

namespace statbonnet {

// ---------------------------------------------------------------------------
// Chart

Chart::Chart(std::vector<Interval> ranges, std::vector<int> counts)
    : ranges_(std::move(ranges)), counts_(std::move(counts)) {
  if (ranges_.empty()) throw InvalidArgument("chart: dimension must be positive");
  if (ranges_.size() != counts_.size()) throw InvalidArgument("chart: ranges and counts differ in length");
  const int n = dim();
  spacing_.resize(n);
  strides_.resize(n);
  for (int a = 0; a < n; ++a) {
    if (counts_[a] < kMinPointsPerAxis) {
      throw InvalidArgument("chart: axis " + std::to_string(a) + " has " + std::to_string(counts_[a]) +
                            " points, at least " + std::to_string(kMinPointsPerAxis) + " required");
    }
    const double width = ranges_[a].hi - ranges_[a].lo;
    if (!(width > 0.0) || !std::isfinite(width)) {
      throw InvalidArgument("chart: axis " + std::to_string(a) + " has non-positive spacing");
    }
    spacing_[a] = width / (counts_[a] - 1);
  }
  std::size_t stride = 1;
  for (int a = n - 1; a >= 0; --a) {
    strides_[a] = stride;
    stride *= static_cast<std::size_t>(counts_[a]);
  }
  size_ = stride;
}

Chart Chart::uniform(int dim, Interval range, int count) {
  if (dim <= 0) throw InvalidArgument("chart: dimension must be positive");
  return Chart(std::vector<Interval>(dim, range), std::vector<int>(dim, count));
}

std::size_t Chart::flat(const MultiIndex& index) const {
  if (!contains(index)) throw InvalidArgument("chart: multi-index outside the chart");
  std::size_t out = 0;
  for (int a = 0; a < dim(); ++a) out += strides_[a] * static_cast<std::size_t>(index[a]);
  return out;
}

MultiIndex Chart::multi(std::size_t flat) const {
  MultiIndex out(dim());
  for (int a = 0; a < dim(); ++a) out[a] = index_along(flat, a);
  return out;
}

std::vector<double> Chart::point(std::size_t flat) const {
  std::vector<double> out(dim());
  point(flat, out);
  return out;
}

void Chart::point(std::size_t flat, std::span<double> out) const {
  for (int a = 0; a < dim(); ++a) out[a] = coordinate(a, index_along(flat, a));
}

MultiIndex Chart::center() const {
  MultiIndex out(dim());
  for (int a = 0; a < dim(); ++a) out[a] = counts_[a] / 2;
  return out;
}

double Chart::diameter() const {
  double sum = 0.0;
  for (const auto& r : ranges_) sum += (r.hi - r.lo) * (r.hi - r.lo);
  return std::sqrt(sum);
}

bool Chart::contains(const MultiIndex& index) const {
  if (static_cast<int>(index.size()) != dim()) return false;
  for (int a = 0; a < dim(); ++a) {
    if (index[a] < 0 || index[a] >= counts_[a]) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Field

Field::Field(Chart chart, std::vector<int> value_shape) : chart_(std::move(chart)), shape_(std::move(value_shape)) {
  ncomp_ = 1;
  for (int d : shape_) {
    if (d < 0) throw InvalidArgument("field: negative component dimension");
    ncomp_ *= static_cast<std::size_t>(d);
  }
  data_.assign(chart_.size() * ncomp_, 0.0);
}

Field Field::sample(const Chart& chart, std::vector<int> value_shape, const PointFunction& fn) {
  Field out(chart, std::move(value_shape));
  std::vector<double> x(chart.dim());
  for (std::size_t p = 0; p < chart.size(); ++p) {
    chart.point(p, x);
    fn(x, out.at(p));
  }
  out.require_finite("sample");
  return out;
}

std::size_t Field::offset(std::initializer_list<int> index) const {
  if (index.size() != shape_.size()) throw InvalidArgument("field: component rank mismatch");
  std::size_t out = 0;
  std::size_t a = 0;
  for (int i : index) {
    if (i < 0 || i >= shape_[a]) throw InvalidArgument("field: component index out of range");
    out = out * static_cast<std::size_t>(shape_[a]) + static_cast<std::size_t>(i);
    ++a;
  }
  return out;
}

double Field::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

double Field::rms() const {
  if (data_.empty()) return 0.0;
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s / static_cast<double>(data_.size()));
}

void Field::require_finite(std::string_view op) const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      const std::size_t p = ncomp_ == 0 ? 0 : i / ncomp_;
      throw NumericalFailure(std::string(op) + ": non-finite value at grid point " + std::to_string(p), p);
    }
  }
}

Field& Field::operator+=(const Field& other) {
  if (!same_layout(other)) throw ShapeMismatch("field +=: layouts differ");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  if (!same_layout(other)) throw ShapeMismatch("field -=: layouts differ");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
  return *this;
}

Field& Field::operator*=(double scale) {
  for (double& v : data_) v *= scale;
  return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double scale, Field a) { return a *= scale; }

double max_abs_difference(const Field& a, const Field& b) {
  if (!a.same_layout(b)) throw ShapeMismatch("max_abs_difference: layouts differ");
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

// ---------------------------------------------------------------------------
// Finite differences

namespace {

struct Stencil {
  int first_offset;
  int width;
  std::array<double, 6> weights;
};

// Weights over 60 h. The centred stencil is 4th order; with at least six
// points the two edge layers use 5th-order one-sided stencils so the
// boundary error stays below the interior one.
constexpr Stencil kCentered{-2, 5, {5.0, -40.0, 0.0, 40.0, -5.0, 0.0}};
constexpr Stencil kLeftEdge5{0, 5, {-125.0, 240.0, -180.0, 80.0, -15.0, 0.0}};
constexpr Stencil kLeftNear5{-1, 5, {-15.0, -50.0, 90.0, -30.0, 5.0, 0.0}};
constexpr Stencil kRightNear5{-3, 5, {-5.0, 30.0, -90.0, 50.0, 15.0, 0.0}};
constexpr Stencil kRightEdge5{-4, 5, {15.0, -80.0, 180.0, -240.0, 125.0, 0.0}};
constexpr Stencil kLeftEdge6{0, 6, {-137.0, 300.0, -300.0, 200.0, -75.0, 12.0}};
constexpr Stencil kLeftNear6{-1, 6, {-12.0, -65.0, 120.0, -60.0, 20.0, -3.0}};
constexpr Stencil kRightNear6{-4, 6, {3.0, -20.0, 60.0, -120.0, 65.0, 12.0}};
constexpr Stencil kRightEdge6{-5, 6, {-12.0, 75.0, -200.0, 300.0, -300.0, 137.0}};

const Stencil& derivative_stencil(int k, int m) {
  const bool wide = m >= 6;
  if (k == 0) return wide ? kLeftEdge6 : kLeftEdge5;
  if (k == 1) return wide ? kLeftNear6 : kLeftNear5;
  if (k == m - 2) return wide ? kRightNear6 : kRightNear5;
  if (k == m - 1) return wide ? kRightEdge6 : kRightEdge5;
  return kCentered;
}

void check_axis(const Field& field, int axis, const char* op) {
  if (axis < 0 || axis >= field.chart().dim()) {
    throw InvalidArgument(std::string(op) + ": axis " + std::to_string(axis) + " out of range for a " +
                          std::to_string(field.chart().dim()) + "-dimensional chart");
  }
  if (field.chart().count(axis) < kMinPointsPerAxis) {
    throw InvalidArgument(std::string(op) + ": axis has fewer than 5 points");
  }
}

}  // namespace

Field partial(const Field& field, int axis) {
  check_axis(field, axis, "partial");
  const Chart& chart = field.chart();
  const int m = chart.count(axis);
  const std::size_t stride = chart.stride(axis);
  const std::size_t nc = field.components();
  const double scale = 1.0 / (60.0 * chart.spacing(axis));
  Field out(chart, field.value_shape());
  const auto& in = field.data();
  auto& res = out.data();
  for (std::size_t start = 0; start < chart.size(); ++start) {
    if (chart.index_along(start, axis) != 0) continue;
    for (int k = 0; k < m; ++k) {
      const Stencil& st = derivative_stencil(k, m);
      const std::size_t p = start + stride * static_cast<std::size_t>(k);
      for (std::size_t c = 0; c < nc; ++c) {
        double acc = 0.0;
        for (int w = 0; w < st.width; ++w) {
          const std::size_t q = start + stride * static_cast<std::size_t>(k + st.first_offset + w);
          acc += st.weights[w] * in[q * nc + c];
        }
        res[p * nc + c] = acc * scale;
      }
    }
  }
  out.require_finite("partial");
  return out;
}

namespace {

// Weights over 180 h^2. Centred rows are 4th order. One-sided closures:
// with at least eight points the edge row uses an 8-point 6th-order stencil
// and the next row a 7-point 5th-order one; six or seven points fall back to
// 6-point 4th-order closures.
struct SecondStencil {
  int first_offset;
  int width;
  std::array<double, 8> weights;
};

constexpr SecondStencil kSecondCentered{-2, 5, {-15.0, 240.0, -450.0, 240.0, -15.0}};
constexpr SecondStencil kSecondLeftEdge6{0, 6, {675.0, -2310.0, 3210.0, -2340.0, 915.0, -150.0}};
constexpr SecondStencil kSecondLeftNear6{-1, 6, {150.0, -225.0, -60.0, 210.0, -90.0, 15.0}};
constexpr SecondStencil kSecondLeftEdge8{0, 8, {938.0, -4014.0, 7911.0, -9490.0, 7380.0, -3618.0, 1019.0, -126.0}};
constexpr SecondStencil kSecondLeftNear7{-1, 7, {137.0, -147.0, -255.0, 470.0, -285.0, 93.0, -13.0}};

// Right-side closures are the left ones reflected.
constexpr SecondStencil reflect(const SecondStencil& s) {
  SecondStencil r{-(s.first_offset + s.width - 1), s.width, {}};
  for (int w = 0; w < s.width; ++w) r.weights[w] = s.weights[s.width - 1 - w];
  return r;
}

constexpr SecondStencil kSecondRightEdge6 = reflect(kSecondLeftEdge6);
constexpr SecondStencil kSecondRightNear6 = reflect(kSecondLeftNear6);
constexpr SecondStencil kSecondRightEdge8 = reflect(kSecondLeftEdge8);
constexpr SecondStencil kSecondRightNear7 = reflect(kSecondLeftNear7);

const SecondStencil& second_stencil(int k, int m) {
  const bool wide = m >= 8;
  if (k == 0) return wide ? kSecondLeftEdge8 : kSecondLeftEdge6;
  if (k == 1) return wide ? kSecondLeftNear7 : kSecondLeftNear6;
  if (k == m - 2) return wide ? kSecondRightNear7 : kSecondRightNear6;
  if (k == m - 1) return wide ? kSecondRightEdge8 : kSecondRightEdge6;
  return kSecondCentered;
}

}  // namespace

Field second_partial(const Field& field, int axis_i, int axis_j) {
  check_axis(field, axis_i, "second_partial");
  check_axis(field, axis_j, "second_partial");
  const Chart& chart = field.chart();
  // Mixed derivatives compose cleanly: the error of the inner derivative is
  // smooth along the other axis. Along a single axis the composed boundary
  // closures drop to 3rd order, so a direct stencil is used when it fits.
  if (axis_i != axis_j || chart.count(axis_i) < 6) return partial(partial(field, axis_j), axis_i);
  const int axis = axis_i;
  const int m = chart.count(axis);
  const std::size_t stride = chart.stride(axis);
  const std::size_t nc = field.components();
  const double h = chart.spacing(axis);
  const double scale = 1.0 / (180.0 * h * h);
  Field out(chart, field.value_shape());
  const auto& in = field.data();
  auto& res = out.data();
  for (std::size_t start = 0; start < chart.size(); ++start) {
    if (chart.index_along(start, axis) != 0) continue;
    for (int k = 0; k < m; ++k) {
      const SecondStencil& st = second_stencil(k, m);
      const std::size_t p = start + stride * static_cast<std::size_t>(k);
      for (std::size_t c = 0; c < nc; ++c) {
        double acc = 0.0;
        for (int w = 0; w < st.width; ++w) {
          const std::size_t q = start + stride * static_cast<std::size_t>(k + st.first_offset + w);
          acc += st.weights[w] * in[q * nc + c];
        }
        res[p * nc + c] = acc * scale;
      }
    }
  }
  out.require_finite("second_partial");
  return out;
}

// ---------------------------------------------------------------------------
// Quadrature and paths

double cell_integral(const Field& field, std::size_t lower, int axis, std::size_t comp) {
  const Chart& chart = field.chart();
  const int m = chart.count(axis);
  const int k = chart.index_along(lower, axis);
  if (k < 0 || k > m - 2) throw InvalidArgument("cell_integral: cell leaves the chart");
  const std::size_t s = chart.stride(axis);
  const std::size_t nc = field.components();
  const auto& d = field.data();
  auto f = [&](int offset) {
    return d[(lower + static_cast<std::size_t>(static_cast<long>(s) * offset)) * nc + comp];
  };
  const double h = chart.spacing(axis);
  double acc;
  if (k == 0) {
    acc = 9.0 * f(0) + 19.0 * f(1) - 5.0 * f(2) + f(3);
  } else if (k == m - 2) {
    acc = f(-2) - 5.0 * f(-1) + 19.0 * f(0) + 9.0 * f(1);
  } else {
    acc = -f(-1) + 13.0 * f(0) + 13.0 * f(1) - f(2);
  }
  return acc * h / 24.0;
}

namespace {

// Number of leading components and the axis count of a one-form field.
std::pair<int, int> form_layout(const Field& one_form, const char* op) {
  const auto& shape = one_form.value_shape();
  const int n = one_form.chart().dim();
  if (shape.size() == 1 && shape[0] == n) return {1, n};
  if (shape.size() == 2 && shape[1] == n) return {shape[0], n};
  throw ShapeMismatch(std::string(op) + ": expected a one-form with value shape [n] or [N, n]");
}

}  // namespace

LatticePath LatticePath::reversed(const Chart& chart) const {
  MultiIndex end = base;
  for (const auto& s : steps) end[s.axis] += s.direction;
  if (!chart.contains(end)) throw InvalidArgument("lattice path leaves the chart");
  LatticePath out{end, {}};
  out.steps.reserve(steps.size());
  for (auto it = steps.rbegin(); it != steps.rend(); ++it) out.steps.push_back({it->axis, -it->direction});
  return out;
}

std::vector<double> path_integrate(const Field& one_form, const LatticePath& path) {
  const auto [leading, n] = form_layout(one_form, "path_integrate");
  const Chart& chart = one_form.chart();
  if (!chart.contains(path.base)) throw InvalidArgument("path_integrate: path base outside the chart");

  // Net multiplicity per oriented edge (axis, lower point); the ordered map
  // fixes the summation order independently of traversal direction.
  std::map<std::pair<int, std::size_t>, long> edges;
  MultiIndex at = path.base;
  for (const auto& step : path.steps) {
    if (step.axis < 0 || step.axis >= n || (step.direction != 1 && step.direction != -1)) {
      throw InvalidArgument("path_integrate: malformed lattice step");
    }
    MultiIndex next = at;
    next[step.axis] += step.direction;
    if (!chart.contains(next)) throw InvalidArgument("path_integrate: path leaves the chart");
    const MultiIndex& lower = step.direction > 0 ? at : next;
    edges[{step.axis, chart.flat(lower)}] += step.direction;
    at = std::move(next);
  }

  std::vector<double> out(leading, 0.0);
  for (const auto& [edge, count] : edges) {
    if (count == 0) continue;
    for (int c = 0; c < leading; ++c) {
      const std::size_t comp = static_cast<std::size_t>(c * n + edge.first);
      out[c] += static_cast<double>(count) * cell_integral(one_form, edge.second, edge.first, comp);
    }
  }
  return out;
}

std::vector<int> default_axis_order(int dim) {
  std::vector<int> order(dim);
  std::iota(order.begin(), order.end(), 0);
  return order;
}

void for_each_staircase_step(const Chart& chart, const MultiIndex& base, std::span<const int> axis_order,
                             const std::function<void(std::size_t, std::size_t, int, int)>& step) {
  if (!chart.contains(base)) throw InvalidArgument("staircase: base outside the chart");
  std::vector<int> order(axis_order.begin(), axis_order.end());
  if (order.empty()) order = default_axis_order(chart.dim());
  {
    auto sorted = order;
    std::sort(sorted.begin(), sorted.end());
    if (sorted != default_axis_order(chart.dim())) throw InvalidArgument("staircase: axis order is not a permutation");
  }
  const int n = chart.dim();
  for (int stage = 0; stage < n; ++stage) {
    const int axis = order[stage];
    const std::size_t stride = chart.stride(axis);
    const int m = chart.count(axis);
    for (std::size_t p = 0; p < chart.size(); ++p) {
      bool reached = true;
      for (int later = stage; later < n && reached; ++later) {
        const int a = order[later];
        reached = chart.index_along(p, a) == base[a];
      }
      if (!reached) continue;
      const int k0 = base[axis];
      for (int k = k0; k < m - 1; ++k) {
        const std::size_t from = p + stride * static_cast<std::size_t>(k - k0);
        step(from, from + stride, axis, +1);
      }
      for (int k = k0; k > 0; --k) {
        const std::size_t from = p - stride * static_cast<std::size_t>(k0 - k);
        step(from, from - stride, axis, -1);
      }
    }
  }
}

Field potential_from_closed_form(const Field& one_form, const MultiIndex& base, std::span<const int> axis_order) {
  const auto [leading, n] = form_layout(one_form, "potential_from_closed_form");
  const bool scalar = one_form.value_shape().size() == 1;
  Field out(one_form.chart(), scalar ? std::vector<int>{} : std::vector<int>{leading});
  for_each_staircase_step(one_form.chart(), base, axis_order,
                          [&](std::size_t from, std::size_t to, int axis, int direction) {
                            const std::size_t lower = direction > 0 ? from : to;
                            for (int c = 0; c < leading; ++c) {
                              const double w = cell_integral(one_form, lower, axis, static_cast<std::size_t>(c * n + axis));
                              out(to, c) = out(from, c) + direction * w;
                            }
                          });
  out.require_finite("potential_from_closed_form");
  return out;
}

double path_dependence(const Field& one_form, const MultiIndex& base) {
  auto order = default_axis_order(one_form.chart().dim());
  const Field forward = potential_from_closed_form(one_form, base, order);
  std::reverse(order.begin(), order.end());
  const Field backward = potential_from_closed_form(one_form, base, order);
  return max_abs_difference(forward, backward);
}

double closedness_residual(const Field& one_form) {
  const auto [leading, n] = form_layout(one_form, "closedness_residual");
  std::vector<Field> derivs;
  derivs.reserve(n);
  for (int a = 0; a < n; ++a) derivs.push_back(partial(one_form, a));
  double worst = 0.0;
  for (std::size_t p = 0; p < one_form.points(); ++p) {
    for (int c = 0; c < leading; ++c) {
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          const double curl = derivs[i](p, c * n + j) - derivs[j](p, c * n + i);
          worst = std::max(worst, std::abs(curl));
        }
      }
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Interpolation

LagrangeInterpolator::LagrangeInterpolator(const Field& field, int points_per_axis)
    : field_(field), order_(points_per_axis) {
  if (order_ < 2 || order_ > kMinPointsPerAxis + 1) throw InvalidArgument("interpolator: unsupported order");
  for (int c : field_.chart().counts()) {
    if (c < order_) throw InvalidArgument("interpolator: axis shorter than the interpolation stencil");
  }
}

bool LagrangeInterpolator::evaluate(std::span<const double> x, std::span<double> out) const {
  const Chart& chart = field_.chart();
  const int n = chart.dim();
  std::vector<int> first(n);
  std::vector<std::vector<double>> weights(n, std::vector<double>(order_));
  for (int a = 0; a < n; ++a) {
    const double t = (x[a] - chart.lo(a)) / chart.spacing(a);
    const int m = chart.count(a);
    if (!(t >= -1e-9 && t <= (m - 1) + 1e-9)) return false;
    int s = static_cast<int>(std::floor(t)) - (order_ / 2 - 1);
    s = std::clamp(s, 0, m - order_);
    first[a] = s;
    for (int i = 0; i < order_; ++i) {
      double w = 1.0;
      for (int j = 0; j < order_; ++j) {
        if (j != i) w *= (t - (s + j)) / static_cast<double>(i - j);
      }
      weights[a][i] = w;
    }
  }
  std::fill(out.begin(), out.end(), 0.0);
  const std::size_t nc = field_.components();
  std::vector<int> offs(n, 0);
  std::size_t total = 1;
  for (int a = 0; a < n; ++a) total *= static_cast<std::size_t>(order_);
  for (std::size_t node = 0; node < total; ++node) {
    std::size_t rem = node;
    double w = 1.0;
    std::size_t flat = 0;
    for (int a = n - 1; a >= 0; --a) {
      const int o = static_cast<int>(rem % order_);
      rem /= order_;
      w *= weights[a][o];
      flat += chart.stride(a) * static_cast<std::size_t>(first[a] + o);
    }
    const auto vals = field_.at(flat);
    for (std::size_t c = 0; c < nc; ++c) out[c] += w * vals[c];
  }
  return true;
}

double measured_order(double coarse_error, double fine_error) {
  return std::log2(coarse_error / fine_error);
}

}  // namespace statbonnet
