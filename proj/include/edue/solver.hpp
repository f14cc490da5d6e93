#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "edue/cost.hpp"
#include "edue/demand.hpp"
#include "edue/dnl.hpp"
#include "edue/grid.hpp"
#include "edue/network.hpp"
#include "edue/verify.hpp"

namespace edue {

enum class DemandMode { Elastic, Fixed };

/// Everything that defines an equilibrium problem except the discretization.
struct Instance {
  Network network;
  double t0 = 0.0;
  double tf = 1.0;
  SchedulePenalty penalty;
  InverseDemand demand;               // used in elastic mode
  DemandMode mode = DemandMode::Elastic;
  std::vector<double> fixed_demand;   // used in fixed mode

  /// Upper bound on each OD's demand: the inverse-demand cap, or the fixed demand.
  std::vector<double> demand_bounds() const;
  TimeGrid grid(int cells) const { return TimeGrid(t0, tf, cells); }
};

/// Projection: X <- step(X, F(X)). Extragradient: Xbar <- step(X, F(X)), then
/// X <- step(X, F(Xbar)). Both use the same fixed step size; their fixed points
/// coincide. Plain projection can cycle on congested instances.
enum class Scheme { Projection, Extragradient };

struct SolverConfig {
  int cells = 64;
  Scheme scheme = Scheme::Extragradient;
  double alpha = 1.0;
  int max_iters = 1000;
  double gap_tol = 1e-9;
  /// Halve alpha after this many iterations without a new best gap; 0 disables.
  /// A step that leaves the flows bitwise unchanged with the gap still open
  /// halves alpha regardless.
  int halving_stall = 0;
  /// Used-cell threshold for residuals; default is relative to the largest cell flow.
  std::optional<double> flow_threshold;
  std::optional<ExtendedPoint> warm_start;
  /// Reserved; no stochastic component. Recorded in reports.
  unsigned seed = 0;
};

struct IterationRecord {
  int iter = 0;
  double gap = 0.0;
  double max_r1 = 0.0;  // relative, see ResidualReport::max_r1_rel
  double max_r2 = 0.0;  // relative, see ResidualReport::max_r2_rel
  double alpha = 0.0;
};

struct SolveReport {
  TimeGrid grid{0.0, 1.0, 1};
  ExtendedPoint point;
  CostField costs;
  std::vector<IterationRecord> history;
  ResidualReport residuals;
  double initial_gap = 0.0;
  double final_gap = 0.0;
  int iterations = 0;
  bool converged = false;
  double lemma2_bound = 0.0;
  double max_cell_flow = 0.0;
  bool lemma2_ok = false;
  std::vector<bool> cap_active;
  bool feasible = false;
  double wall_seconds = 0.0;
};

/// Loading failed mid-solve; carries the last iterate that loaded successfully.
class SolveAborted : public Error {
 public:
  SolveAborted(const std::string& what, ExtendedPoint last)
      : Error(what), last_(std::move(last)) {}
  const ExtendedPoint& last_iterate() const { return last_; }

 private:
  ExtendedPoint last_;
};

/// Point-queue model whose horizon extension covers any demand the solver may
/// visit: sum of demand bounds (doubled in fixed mode) over the smallest
/// capacity plus all free-flow times.
PointQueueModel default_delay_model(const Instance& instance);

/// (h, Q) -> (cell costs, OD prices). Prices are Theta(Q) in elastic mode and
/// the OD minimum cost in fixed mode.
CostField f_map(const Instance& instance, const ExtendedPoint& x, const DelayModel& model);
CostField f_map(const Instance& instance, const ExtendedPoint& x);

/// cost_{p,j} - price of the path's OD.
double reduced_cost(const CostField& costs, const Network& network, std::size_t path,
                    std::size_t cell);

/// One projection step. Elastic mode works in the reduced parametrization
/// (Q induced by h): h+ = max(0, h - alpha * reduced cost), then Q+ from
/// conservation, rescaling an OD's flows down to its cap if Q+ exceeds it.
/// Substituting Q(h) into the extended inequality leaves exactly this operator
/// on the nonnegative cone. Fixed mode projects h - alpha * cost onto
/// {h >= 0, \int sum_p h_p = Q_w} per OD.
ExtendedPoint fixed_point_step(const Instance& instance, const ExtendedPoint& x,
                               const CostField& costs, double alpha);

/// sup over feasible Y of <F(X), X - Y>, in closed form:
/// sum_w [ sum h dt * reduced cost - min(0, c_w) * U_w ], c_w the smallest
/// reduced cost of OD w and U_w its demand bound. Clamped at zero per OD.
double compute_gap(const Instance& instance, const ExtendedPoint& x, const CostField& costs);

/// Maximizer of the gap: all of U_w on the cheapest cell when c_w < 0, nothing
/// otherwise (fixed mode always loads the fixed demand there). Ties go to the
/// lowest path index, then the earliest cell.
ExtendedPoint best_response(const Instance& instance, const ExtendedPoint& x,
                            const CostField& costs);

/// 3 * max capacity / (Delta + 1), bounding equilibrium cell flows.
double lemma2_bound(const Network& network, const SchedulePenalty& penalty);

/// Point with the given path flows and the demand they induce: the
/// conservation integral (clamped to the cap against rounding) in elastic mode,
/// the fixed demand in fixed mode.
ExtendedPoint make_point(const Instance& instance, std::vector<Profile> h);

/// Zero flow in elastic mode; demand spread evenly over the OD's paths and
/// cells in fixed mode.
ExtendedPoint initial_point(const Instance& instance, const TimeGrid& grid);

/// Iterates fixed_point_step until the gap reaches config.gap_tol or the
/// iteration budget runs out. Non-convergence is reported, not thrown.
///
/// Fixed mode runs rounds of elastic subproblems with the linear price
/// lambda_w - rho_w (Q - Qbar_w), updating lambda_w between rounds (method of
/// multipliers). History rows are subproblem iterations there, so their gap is
/// the subproblem's; final_gap and residuals refer to the fixed-demand problem.
SolveReport solve(const Instance& instance, const SolverConfig& config);
SolveReport solve(const Instance& instance, const SolverConfig& config, const DelayModel& model);

}  // namespace edue
