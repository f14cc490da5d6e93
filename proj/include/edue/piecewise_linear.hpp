#pragma once

#include <span>
#include <vector>

namespace edue {

/// Continuous piecewise-linear function given by breakpoints with strictly
/// increasing abscissae, extended linearly beyond the first and last breakpoint
/// with fixed slopes. Cumulative vehicle curves use slope 0 on both sides;
/// exit-time maps use slope 1.
class PiecewiseLinear {
 public:
  PiecewiseLinear(std::vector<double> x, std::vector<double> y, double slope_left = 0.0,
                  double slope_right = 0.0);

  double operator()(double t) const;

  std::span<const double> x() const { return x_; }
  std::span<const double> y() const { return y_; }
  std::size_t size() const { return x_.size(); }
  double front_x() const { return x_.front(); }
  double back_x() const { return x_.back(); }
  double back_y() const { return y_.back(); }
  double slope_left() const { return slope_left_; }
  double slope_right() const { return slope_right_; }

  PiecewiseLinear shifted(double dx) const;

  friend bool operator==(const PiecewiseLinear&, const PiecewiseLinear&) = default;

 private:
  std::vector<double> x_;
  std::vector<double> y_;
  double slope_left_;
  double slope_right_;
};

/// Appends breakpoints while keeping abscissae strictly increasing. A point whose
/// abscissa does not exceed the last one (within `tol`) replaces the last
/// ordinate by the larger of the two, which is the right merge for
/// nondecreasing curves.
class BreakpointBuilder {
 public:
  explicit BreakpointBuilder(double tol = 0.0) : tol_(tol) {}
  void push(double x, double y);
  bool empty() const { return x_.empty(); }
  double last_x() const { return x_.back(); }
  double last_y() const { return y_.back(); }
  PiecewiseLinear build(double slope_left = 0.0, double slope_right = 0.0) &&;

 private:
  double tol_;
  std::vector<double> x_;
  std::vector<double> y_;
};

/// Pointwise sum of curves with slope-0 extensions, on the union of breakpoints.
PiecewiseLinear sum(std::span<const PiecewiseLinear> curves);

}  // namespace edue
