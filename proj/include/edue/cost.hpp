#pragma once

#include <cstddef>
#include <vector>

#include "edue/dnl.hpp"
#include "edue/error.hpp"
#include "edue/grid.hpp"
#include "edue/network.hpp"

namespace edue {

class A1Violation : public Error {
 public:
  A1Violation(const std::string& what, double slope) : Error(what), slope_(slope) {}
  double slope() const { return slope_; }

 private:
  double slope_;
};

/// Two-slope schedule-delay penalty of the deviation x = arrival - T_A:
/// early * (-x) for x < 0 and late * x for x >= 0.
class SchedulePenalty {
 public:
  SchedulePenalty() = default;
  SchedulePenalty(double early, double late);

  double early() const { return early_; }
  double late() const { return late_; }
  double operator()(double deviation) const {
    return deviation < 0.0 ? -early_ * deviation : late_ * deviation;
  }

 private:
  double early_ = 0.0;
  double late_ = 0.0;
};

/// Largest Delta with f(x2) - f(x1) >= Delta (x2 - x1) for all x2 > x1, which
/// is -early for this family. Throws A1Violation unless Delta > -1.
double check_a1(const SchedulePenalty& penalty);

/// Travel delay plus schedule delay for one departure: (arrival - departure) +
/// f(arrival - T_A).
double effective_delay_at(double departure, double arrival, const SchedulePenalty& penalty,
                          double desired_arrival);

/// Cell averages of the effective delay from arrival times at the cell ends.
/// Throws Error if any value is not strictly positive, which can only come
/// from a broken loading.
std::vector<Profile> effective_delay(const BoundaryExitTimes& arrivals, const TimeGrid& grid,
                                     const SchedulePenalty& penalty, double desired_arrival);

/// Image of the extended-space mapping: per-path cell costs and per-OD prices.
/// `theta` holds +Theta_w(Q) in elastic mode; in fixed-demand mode it holds
/// the OD minimum cost v_w, which plays the same role in reduced costs.
struct CostField {
  std::vector<Profile> path_costs;
  std::vector<double> theta;
};

/// Discrete v_w: minimum over the OD's paths of the smallest cell cost.
/// Throws StructuralError when the OD has no paths.
double min_travel_cost(const CostField& costs, const Network& network, std::size_t od);

}  // namespace edue
