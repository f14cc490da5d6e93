#include "edue/demand.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "edue/error.hpp"

namespace edue {

InverseDemand::InverseDemand(std::vector<DemandCurve> curves) : curves_(std::move(curves)) {
  for (const DemandCurve& c : curves_) {
    auto fail = [&](const std::string& why) {
      throw DomainError("inverse demand for OD '" + c.od + "': " + why);
    };
    if (!(c.intercept > 0.0) || !std::isfinite(c.intercept)) fail("intercept must be positive");
    if (!(c.slope >= 0.0) || !std::isfinite(c.slope)) fail("slope must be nonnegative");
    if (!(c.cap > 0.0) || !std::isfinite(c.cap)) fail("demand cap must be positive");
    if (!(c.intercept - c.slope * c.cap > 0.0)) fail("Theta must stay positive up to the cap");
  }
}

DemandCurve InverseDemand::make_curve(std::string od, double intercept, double slope,
                                      std::optional<double> cap) {
  if (!cap) {
    if (!(slope > 0.0)) {
      throw DomainError("inverse demand for OD '" + od + "': zero slope requires an explicit cap");
    }
    cap = 0.95 * intercept / slope;
  }
  return {std::move(od), intercept, slope, *cap};
}

std::vector<double> InverseDemand::caps() const {
  std::vector<double> out;
  for (const auto& c : curves_) out.push_back(c.cap);
  return out;
}

double InverseDemand::theta(std::size_t w, double q) const {
  const DemandCurve& c = curves_.at(w);
  if (!(q >= 0.0) || q > c.cap * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "demand " << q << " for OD '" << c.od << "' outside [0, " << c.cap << "]";
    throw DomainError(msg.str());
  }
  return c.intercept - c.slope * q;
}

std::vector<double> InverseDemand::theta(std::span<const double> q) const {
  if (q.size() != curves_.size()) throw DomainError("theta: demand vector has wrong length");
  std::vector<double> out(q.size());
  for (std::size_t w = 0; w < q.size(); ++w) out[w] = theta(w, q[w]);
  return out;
}

std::vector<double> InverseDemand::theta_inverse(std::span<const double> v) const {
  if (v.size() != curves_.size()) throw DomainError("theta_inverse: cost vector has wrong length");
  std::vector<double> out(v.size());
  for (std::size_t w = 0; w < v.size(); ++w) {
    const DemandCurve& c = curves_[w];
    if (c.slope == 0.0) {
      if (v[w] != c.intercept) {
        throw DomainError("inverse demand for OD '" + c.od + "' is not invertible (zero slope)");
      }
      out[w] = 0.0;
      continue;
    }
    out[w] = std::clamp((c.intercept - v[w]) / c.slope, 0.0, c.cap);
  }
  return out;
}

}  // namespace edue
