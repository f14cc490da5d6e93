#include "edue/cost.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace edue {

SchedulePenalty::SchedulePenalty(double early, double late) : early_(early), late_(late) {
  if (!(early >= 0.0) || !(late >= 0.0) || !std::isfinite(early) || !std::isfinite(late)) {
    throw DomainError("schedule penalty slopes must be finite and nonnegative");
  }
}

double check_a1(const SchedulePenalty& penalty) {
  const double delta = penalty.early() == 0.0 ? 0.0 : -penalty.early();
  if (!(delta > -1.0)) {
    std::ostringstream msg;
    msg << "A1 violated: early slope " << penalty.early() << " gives Delta = " << delta
        << ", need Delta > -1";
    throw A1Violation(msg.str(), penalty.early());
  }
  return delta;
}

double effective_delay_at(double departure, double arrival, const SchedulePenalty& penalty,
                          double desired_arrival) {
  return (arrival - departure) + penalty(arrival - desired_arrival);
}

std::vector<Profile> effective_delay(const BoundaryExitTimes& arrivals, const TimeGrid& grid,
                                     const SchedulePenalty& penalty, double desired_arrival) {
  std::vector<Profile> out;
  out.reserve(arrivals.times.size());
  for (std::size_t p = 0; p < arrivals.times.size(); ++p) {
    const auto& tau = arrivals.times[p];
    if (tau.size() != static_cast<std::size_t>(grid.cells()) + 1) {
      throw StructuralError("effective_delay: arrival times do not match the grid");
    }
    std::vector<double> v(grid.cells());
    for (int j = 0; j < grid.cells(); ++j) {
      const double left = effective_delay_at(grid.boundary(j), tau[j], penalty, desired_arrival);
      const double right =
          effective_delay_at(grid.boundary(j + 1), tau[j + 1], penalty, desired_arrival);
      v[j] = 0.5 * (left + right);
      if (!(v[j] > 0.0)) {
        std::ostringstream msg;
        msg << "effective delay " << v[j] << " on path " << p << " cell " << j
            << " is not positive; loading produced an arrival before departure";
        throw Error(msg.str());
      }
    }
    out.emplace_back(grid, std::move(v));
  }
  return out;
}

double min_travel_cost(const CostField& costs, const Network& network, std::size_t od) {
  const auto& ps = network.paths_of(od);
  if (ps.empty()) throw StructuralError("OD '" + network.ods().at(od).id + "' has no paths");
  double v = std::numeric_limits<double>::infinity();
  for (std::size_t p : ps) v = std::min(v, essential_infimum(costs.path_costs.at(p)));
  return v;
}

}  // namespace edue
