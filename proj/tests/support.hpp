#pragma once

// Instance builders shared by the tests. Times in minutes, flows in veh/min.

#include <string>
#include <vector>

#include "edue/solver.hpp"

namespace edue::test {

inline Network single_link(double fft, double capacity, double desired_arrival) {
  Network net;
  net.add_node("A");
  net.add_node("B");
  net.add_link("ab", "A", "B", fft, capacity);
  net.add_od("AB", "A", "B");
  net.add_path("p", "AB", {"ab"});
  net.set_desired_arrival(desired_arrival);
  return net;
}

inline Network parallel_links(double fft, double capacity, double desired_arrival) {
  Network net;
  net.add_node("A");
  net.add_node("B");
  net.add_link("north", "A", "B", fft, capacity);
  net.add_link("south", "A", "B", fft, capacity);
  net.add_od("AB", "A", "B");
  net.add_path("pn", "AB", {"north"});
  net.add_path("ps", "AB", {"south"});
  net.set_desired_arrival(desired_arrival);
  return net;
}

inline InverseDemand linear_demand(double theta0, double theta1, int ods = 1) {
  std::vector<DemandCurve> curves;
  for (int w = 0; w < ods; ++w) {
    curves.push_back(InverseDemand::make_curve("od" + std::to_string(w), theta0, theta1, {}));
  }
  return InverseDemand(std::move(curves));
}

/// tau = 5, M = 1, T_A = 60, beta = 0.5, gamma = 2, Theta = 60 - 0.5 Q.
inline Instance bottleneck(double t0, double tf) {
  Instance inst;
  inst.network = single_link(5.0, 1.0, 60.0);
  inst.t0 = t0;
  inst.tf = tf;
  inst.penalty = SchedulePenalty(0.5, 2.0);
  inst.demand = linear_demand(60.0, 0.5);
  return inst;
}

/// Capacity far above any demand: tau = 10, T_A = 70 on [0, 120].
inline Instance uncongested(double theta0 = 60.0, double theta1 = 0.5) {
  Instance inst;
  inst.network = single_link(10.0, 1e6, 70.0);
  inst.t0 = 0.0;
  inst.tf = 120.0;
  inst.penalty = SchedulePenalty(0.5, 2.0);
  inst.demand = linear_demand(theta0, theta1);
  return inst;
}

inline Profile constant(const TimeGrid& g, double v) {
  return Profile(g, std::vector<double>(g.cells(), v));
}

}  // namespace edue::test
