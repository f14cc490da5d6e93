#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "edue/cost.hpp"
#include "edue/grid.hpp"
#include "edue/network.hpp"

namespace edue {

/// Equilibrium conditions of one OD pair, evaluated cell by cell.
struct OdResidual {
  double v = 0.0;           // smallest cost over used cells (all cells when none is used)
  double theta = 0.0;       // price the OD is checked against
  double demand = 0.0;      // Q_w
  double r1 = 0.0;          // sum h dt * max(0, cost - theta) over used cells, vehicle-hours
  double r2 = 0.0;          // max(0, theta - min cost), hours
  double demand_gap = 0.0;  // |v - theta|, hours
  std::size_t used_cells = 0;
};

struct ResidualReport {
  std::vector<OdResidual> od;

  /// r1 / (Q * theta), worst OD. Zero for an OD without demand.
  double max_r1_rel() const;
  /// r2 / theta, worst OD.
  double max_r2_rel() const;
  /// |v - theta| / theta, worst OD.
  double max_demand_gap_rel() const;
  /// r1 <= eps * Q * theta and r2 <= eps * theta for every OD.
  bool is_equilibrium(double eps) const;
};

/// Default used-cell threshold: 1e-6 of the largest cell flow.
double default_flow_threshold(const ExtendedPoint& x);

/// Checks the elastic-demand equilibrium conditions: used cells cost exactly
/// theta, no cell costs less. With fixed-demand costs (theta = v_w) the same
/// numbers are the fixed-demand conditions.
ResidualReport due_residuals(const Network& network, const ExtendedPoint& x,
                             const CostField& costs,
                             std::optional<double> flow_threshold = std::nullopt);

/// Left-hand side of the variational inequality at `star` against `probe`:
/// sum_p \int cost_p (h_probe - h_star) dt - sum_w theta_w (Q_probe - Q_star).
/// Throws StructuralError on mismatched shapes.
double vi_lhs(const ExtendedPoint& star, const ExtendedPoint& probe, const CostField& costs);

}  // namespace edue
