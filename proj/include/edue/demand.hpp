#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace edue {

/// Linear inverse demand of one OD pair: Theta(Q) = intercept - slope * Q on
/// [0, cap].
struct DemandCurve {
  std::string od;
  double intercept = 0.0;  // hours
  double slope = 0.0;      // hours per vehicle
  double cap = 0.0;        // vehicles
};

/// Per-OD inverse demand functions Theta_w and their inverses F_w.
class InverseDemand {
 public:
  InverseDemand() = default;
  /// Validates every curve: intercept > 0, slope >= 0, cap > 0, and Theta
  /// strictly positive on [0, cap]. Throws DomainError naming the OD.
  explicit InverseDemand(std::vector<DemandCurve> curves);

  /// Curve with the default cap 0.95 * intercept / slope. A zero slope needs an
  /// explicit cap.
  static DemandCurve make_curve(std::string od, double intercept, double slope,
                                std::optional<double> cap = std::nullopt);

  std::size_t size() const { return curves_.size(); }
  const DemandCurve& curve(std::size_t w) const { return curves_.at(w); }
  std::vector<double> caps() const;

  /// Componentwise Theta_w(Q_w). Throws DomainError for Q_w outside [0, cap].
  std::vector<double> theta(std::span<const double> q) const;
  double theta(std::size_t w, double q) const;

  /// F_w(v) = (intercept - v) / slope clamped to [0, cap]. Throws DomainError
  /// ("not invertible") for a zero slope unless v equals the intercept.
  std::vector<double> theta_inverse(std::span<const double> v) const;

 private:
  std::vector<DemandCurve> curves_;
};

}  // namespace edue
