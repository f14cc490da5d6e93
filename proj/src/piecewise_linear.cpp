#include "edue/piecewise_linear.hpp"

#include <algorithm>
#include <cmath>

#include "edue/error.hpp"

namespace edue {

PiecewiseLinear::PiecewiseLinear(std::vector<double> x, std::vector<double> y, double slope_left,
                                 double slope_right)
    : x_(std::move(x)), y_(std::move(y)), slope_left_(slope_left), slope_right_(slope_right) {
  if (x_.empty() || x_.size() != y_.size()) {
    throw StructuralError("piecewise-linear curve needs matching, nonempty breakpoint arrays");
  }
  for (std::size_t i = 1; i < x_.size(); ++i) {
    if (!(x_[i] > x_[i - 1])) {
      throw StructuralError("piecewise-linear breakpoints must be strictly increasing");
    }
  }
}

double PiecewiseLinear::operator()(double t) const {
  if (t <= x_.front()) return y_.front() + slope_left_ * (t - x_.front());
  if (t >= x_.back()) return y_.back() + slope_right_ * (t - x_.back());
  const auto it = std::upper_bound(x_.begin(), x_.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - x_.begin());
  const double x0 = x_[i - 1], x1 = x_[i];
  const double w = (t - x0) / (x1 - x0);
  return y_[i - 1] + w * (y_[i] - y_[i - 1]);
}

PiecewiseLinear PiecewiseLinear::shifted(double dx) const {
  PiecewiseLinear out = *this;
  for (double& v : out.x_) v += dx;
  return out;
}

void BreakpointBuilder::push(double x, double y) {
  if (!x_.empty() && x <= x_.back() + tol_) {
    y_.back() = std::max(y_.back(), y);
    return;
  }
  x_.push_back(x);
  y_.push_back(y);
}

PiecewiseLinear BreakpointBuilder::build(double slope_left, double slope_right) && {
  return PiecewiseLinear(std::move(x_), std::move(y_), slope_left, slope_right);
}

PiecewiseLinear sum(std::span<const PiecewiseLinear> curves) {
  if (curves.empty()) return PiecewiseLinear({0.0}, {0.0});
  std::vector<double> xs;
  for (const auto& c : curves) xs.insert(xs.end(), c.x().begin(), c.x().end());
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::vector<double> ys(xs.size(), 0.0);
  for (const auto& c : curves) {
    for (std::size_t i = 0; i < xs.size(); ++i) ys[i] += c(xs[i]);
  }
  return PiecewiseLinear(std::move(xs), std::move(ys));
}

}  // namespace edue
