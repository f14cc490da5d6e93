#pragma once

#include <cstddef>

#include "edue/grid.hpp"
#include "edue/solver.hpp"

namespace edue {

struct OracleOptions {
  int resolution = 11;                 // coarse lattice points per dimension
  int refinement_rounds = 10;          // each shrinks the lattice spacing by 10 (at least 4 run)
  double certify_rel = 1e-8;           // certified when gap <= certify_rel * problem scale
  std::size_t coarse_budget = 300000;  // cap on coarse lattice size
  std::size_t local_budget = 20000;    // cap on one local lattice around the incumbent
  std::size_t max_support_dims = 12;   // enumerate every support up to this dimension
};

struct OracleResult {
  ExtendedPoint point;
  double gap = 0.0;
  double scale = 0.0;  // sum_w Theta_w(0) * U_w (elastic) or v_w * Q_w at the start (fixed)
  bool certified = false;
  int rounds = 0;
  std::size_t evaluations = 0;
};

/// Size limits of instances the exhaustive search accepts: at most 2 OD pairs,
/// 3 paths, 6 cells, and |P| * cells + |W| <= 20.
bool is_tiny(const Instance& instance, const TimeGrid& grid);

/// Equilibrium by direct minimization of the gap function over a lattice of
/// path flows bounded per cell by min(3 M^max / (Delta + 1), U_w / dt), then
/// repeated local lattice searches around the incumbent with spacing shrunk
/// tenfold per round. Fixed-demand points are rescaled onto the demand
/// constraint. Lattice points cannot follow the narrow valleys of the nonsmooth
/// gap, so the search ends by solving "reduced cost = 0 on the support" with
/// Newton's method for candidate supports and keeping the lowest-gap point.
/// Throws StructuralError for non-tiny instances.
OracleResult brute_force_equilibrium(const Instance& instance, const TimeGrid& grid,
                                     const OracleOptions& options = {});

/// Root of Theta(Q) = v_min on [0, cap] by bisection, the closed-form
/// equilibrium demand of a single OD whose cheapest cell cost v_min does not
/// depend on flow.
double bisect_equilibrium_demand(const DemandCurve& curve, double v_min);

}  // namespace edue
