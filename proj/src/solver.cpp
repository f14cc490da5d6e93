#include "edue/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>

namespace edue {

namespace {

// Euclidean projection of y onto {x >= 0, sum x = total}.
std::vector<double> project_simplex(const std::vector<double>& y, double total) {
  std::vector<double> sorted = y;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double prefix = 0.0;
  double shift = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    prefix += sorted[k];
    const double candidate = (prefix - total) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0.0) shift = candidate;
  }
  std::vector<double> x(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) x[i] = std::max(0.0, y[i] - shift);
  return x;
}

}  // namespace

std::vector<double> Instance::demand_bounds() const {
  return mode == DemandMode::Fixed ? fixed_demand : demand.caps();
}

PointQueueModel default_delay_model(const Instance& instance) {
  const auto bounds = instance.demand_bounds();
  double volume = 0.0;
  for (double u : bounds) volume += u;
  // Fixed-demand rounds may carry up to twice the target demand.
  if (instance.mode == DemandMode::Fixed) volume *= 2.0;
  double min_capacity = std::numeric_limits<double>::infinity();
  double total_fft = 0.0;
  for (const Link& l : instance.network.links()) {
    min_capacity = std::min(min_capacity, l.capacity);
    total_fft += l.free_flow_time;
  }
  LoadOptions options;
  options.horizon_extension = volume / min_capacity + total_fft;
  return PointQueueModel(options);
}

CostField f_map(const Instance& instance, const ExtendedPoint& x, const DelayModel& model) {
  const Network& net = instance.network;
  if (x.h.empty()) throw StructuralError("f_map: point has no path flows");
  const TimeGrid& grid = x.h.front().grid();
  CostField costs;
  costs.path_costs = effective_delay(model.exit_times(net, x.h, grid), grid, instance.penalty,
                                     net.desired_arrival());
  if (instance.mode == DemandMode::Elastic) {
    costs.theta = instance.demand.theta(x.q);
  } else {
    costs.theta.resize(net.ods().size());
    for (std::size_t w = 0; w < net.ods().size(); ++w) {
      costs.theta[w] = min_travel_cost(costs, net, w);
    }
  }
  return costs;
}

CostField f_map(const Instance& instance, const ExtendedPoint& x) {
  return f_map(instance, x, default_delay_model(instance));
}

double reduced_cost(const CostField& costs, const Network& network, std::size_t path,
                    std::size_t cell) {
  return costs.path_costs.at(path)[cell] - costs.theta.at(network.path_od().at(path));
}

ExtendedPoint fixed_point_step(const Instance& instance, const ExtendedPoint& x,
                               const CostField& costs, double alpha) {
  const Network& net = instance.network;
  const TimeGrid& grid = x.h.front().grid();
  const std::size_t cells = static_cast<std::size_t>(grid.cells());
  ExtendedPoint next;
  next.h.reserve(x.h.size());

  if (instance.mode == DemandMode::Fixed) {
    std::vector<std::vector<double>> values(x.h.size());
    for (std::size_t w = 0; w < net.ods().size(); ++w) {
      const auto& ps = net.paths_of(w);
      std::vector<double> y;
      y.reserve(ps.size() * cells);
      for (std::size_t p : ps) {
        for (std::size_t j = 0; j < cells; ++j) {
          y.push_back(x.h[p][j] - alpha * reduced_cost(costs, net, p, j));
        }
      }
      const auto projected = project_simplex(y, instance.fixed_demand[w] / grid.width());
      for (std::size_t k = 0; k < ps.size(); ++k) {
        values[ps[k]].assign(projected.begin() + k * cells, projected.begin() + (k + 1) * cells);
      }
    }
    std::vector<Profile> h;
    for (auto& v : values) h.emplace_back(grid, std::move(v));
    return make_point(instance, std::move(h));
  }

  for (std::size_t p = 0; p < x.h.size(); ++p) {
    std::vector<double> v(cells);
    for (std::size_t j = 0; j < cells; ++j) {
      v[j] = std::max(0.0, x.h[p][j] - alpha * reduced_cost(costs, net, p, j));
    }
    next.h.emplace_back(grid, std::move(v));
  }
  next.q = induced_demand(next.h, net.path_od(), net.ods().size());
  const auto caps = instance.demand.caps();
  for (std::size_t w = 0; w < caps.size(); ++w) {
    if (next.q[w] <= caps[w]) continue;
    const double factor = caps[w] / next.q[w];
    for (std::size_t p : net.paths_of(w)) {
      std::vector<double> v(next.h[p].values().begin(), next.h[p].values().end());
      for (double& e : v) e *= factor;
      next.h[p] = Profile(grid, std::move(v));
    }
  }
  return make_point(instance, std::move(next.h));
}

ExtendedPoint make_point(const Instance& instance, std::vector<Profile> h) {
  const Network& net = instance.network;
  ExtendedPoint x;
  x.h = std::move(h);
  if (instance.mode == DemandMode::Fixed) {
    x.q = instance.fixed_demand;
    return x;
  }
  x.q = induced_demand(x.h, net.path_od(), net.ods().size());
  for (std::size_t w = 0; w < x.q.size(); ++w) {
    const double cap = instance.demand.curve(w).cap;
    if (x.q[w] > cap && x.q[w] <= cap * (1.0 + 1e-12)) x.q[w] = cap;
  }
  return x;
}

namespace {

struct Cheapest {
  double reduced = std::numeric_limits<double>::infinity();
  std::size_t path = 0;
  std::size_t cell = 0;
};

Cheapest cheapest_cell(const Network& net, const CostField& costs, std::size_t od) {
  Cheapest best;
  for (std::size_t p : net.paths_of(od)) {
    const Profile& c = costs.path_costs[p];
    for (std::size_t j = 0; j < c.size(); ++j) {
      const double rc = reduced_cost(costs, net, p, j);
      if (rc < best.reduced) best = {rc, p, j};
    }
  }
  return best;
}

}  // namespace

double compute_gap(const Instance& instance, const ExtendedPoint& x, const CostField& costs) {
  const Network& net = instance.network;
  const auto bounds = instance.demand_bounds();
  double gap = 0.0;
  for (std::size_t w = 0; w < net.ods().size(); ++w) {
    double used = 0.0;
    for (std::size_t p : net.paths_of(w)) {
      const Profile& hp = x.h[p];
      double s = 0.0;
      for (std::size_t j = 0; j < hp.size(); ++j) s += hp[j] * reduced_cost(costs, net, p, j);
      used += s * hp.grid().width();
    }
    const double c = cheapest_cell(net, costs, w).reduced;
    gap += std::max(0.0, used - std::min(0.0, c) * bounds[w]);
  }
  return gap;
}

ExtendedPoint best_response(const Instance& instance, const ExtendedPoint& x,
                            const CostField& costs) {
  const Network& net = instance.network;
  const TimeGrid& grid = x.h.front().grid();
  const auto bounds = instance.demand_bounds();
  std::vector<std::vector<double>> values(x.h.size(), std::vector<double>(grid.cells(), 0.0));
  ExtendedPoint y;
  y.q.assign(net.ods().size(), 0.0);
  for (std::size_t w = 0; w < net.ods().size(); ++w) {
    const Cheapest best = cheapest_cell(net, costs, w);
    if (instance.mode == DemandMode::Fixed || best.reduced < 0.0) {
      values[best.path][best.cell] = bounds[w] / grid.width();
      y.q[w] = bounds[w];
    }
  }
  for (auto& v : values) y.h.emplace_back(grid, std::move(v));
  return y;
}

double lemma2_bound(const Network& network, const SchedulePenalty& penalty) {
  return 3.0 * max_exit_capacity(network) / (check_a1(penalty) + 1.0);
}

ExtendedPoint initial_point(const Instance& instance, const TimeGrid& grid) {
  const Network& net = instance.network;
  ExtendedPoint x;
  x.q.assign(net.ods().size(), 0.0);
  for (std::size_t p = 0; p < net.paths().size(); ++p) {
    double rate = 0.0;
    if (instance.mode == DemandMode::Fixed) {
      const std::size_t w = net.path_od()[p];
      rate = instance.fixed_demand[w] /
             (static_cast<double>(net.paths_of(w).size()) * (grid.tf() - grid.t0()));
    }
    x.h.emplace_back(grid, std::vector<double>(grid.cells(), rate));
  }
  if (instance.mode == DemandMode::Fixed) x.q = instance.fixed_demand;
  return x;
}

SolveReport solve(const Instance& instance, const SolverConfig& config) {
  return solve(instance, config, default_delay_model(instance));
}

namespace {

bool same_flows(const ExtendedPoint& a, const ExtendedPoint& b) {
  for (std::size_t p = 0; p < a.h.size(); ++p) {
    for (std::size_t j = 0; j < a.h[p].size(); ++j) {
      if (a.h[p][j] != b.h[p][j]) return false;
    }
  }
  return true;
}

// Runs projection or extragradient steps on one problem until its gap reaches
// tol or the shared iteration budget runs out.
class Iterator {
 public:
  Iterator(const SolverConfig& config, const DelayModel& model, std::vector<IterationRecord>& log)
      : config_(config), model_(model), log_(log), alpha_(config.alpha) {}

  CostField evaluate(const Instance& inst, const ExtendedPoint& point,
                     const ExtendedPoint& last_good) const {
    try {
      return f_map(inst, point, model_);
    } catch (const HorizonOverflow& e) {
      throw SolveAborted(e.what(), last_good);
    }
  }

  bool exhausted() const { return iter_ >= config_.max_iters; }
  int iterations() const { return iter_; }

  /// Returns true when the gap reached tol.
  bool run(const Instance& inst, ExtendedPoint& x, CostField& costs, double& gap, double tol,
           int min_steps = 0) {
    const Network& net = inst.network;
    int steps = 0;
    while ((gap > tol || steps < min_steps) && !exhausted()) {
      ExtendedPoint next = fixed_point_step(inst, x, costs, alpha_);
      if (config_.scheme == Scheme::Extragradient) {
        const CostField predicted = evaluate(inst, next, x);
        next = fixed_point_step(inst, x, predicted, alpha_);
      }
      if (!is_feasible(next, net.path_od())) {
        throw SolveAborted("solver: projection step left the feasible set", x);
      }
      // A step that returns x itself while the gap is open means alpha is too
      // long for the local cost variation (the extragradient map then has
      // spurious fixed points); nothing will change until alpha shrinks.
      const bool stuck = gap > tol && same_flows(next, x);
      costs = evaluate(inst, next, x);
      x = std::move(next);
      gap = compute_gap(inst, x, costs);
      ++iter_;
      ++steps;
      const ResidualReport res = due_residuals(net, x, costs, config_.flow_threshold);
      log_.push_back({iter_, gap, res.max_r1_rel(), res.max_r2_rel(), alpha_});

      if (stuck) {
        alpha_ *= 0.5;
        stall_ = 0;
      } else if (config_.halving_stall > 0) {
        if (gap < best_gap_) {
          best_gap_ = gap;
          stall_ = 0;
        } else if (++stall_ >= config_.halving_stall) {
          alpha_ *= 0.5;
          stall_ = 0;
        }
      }
    }
    return gap <= tol;
  }

 private:
  const SolverConfig& config_;
  const DelayModel& model_;
  std::vector<IterationRecord>& log_;
  double alpha_;
  double best_gap_ = std::numeric_limits<double>::infinity();
  int stall_ = 0;
  int iter_ = 0;
};

// Fixed demand by the method of multipliers. Each round solves the elastic
// problem with Theta_w(Q) = lambda_w - rho_w (Q - Qbar_w), then moves lambda_w
// to Theta_w at the demand reached. A round's fixed point with Q = Qbar is a
// fixed-demand equilibrium with cost lambda. Direct projection onto the demand
// simplex does not settle on congested instances: the multiplier there jumps
// with every step, while here it moves only between rounds.
bool solve_fixed(const Instance& instance, Iterator& it, ExtendedPoint& x, CostField& costs,
                 double& gap, double gap_tol) {
  const Network& net = instance.network;
  const std::size_t ods = net.ods().size();
  const auto& target = instance.fixed_demand;
  std::vector<double> lambda = costs.theta;
  std::vector<double> rho(ods);
  for (std::size_t w = 0; w < ods; ++w) rho[w] = lambda[w] / target[w];

  Instance sub = instance;
  sub.mode = DemandMode::Elastic;
  bool converged = gap <= gap_tol;
  while (!converged && !it.exhausted()) {
    std::vector<DemandCurve> curves;
    for (std::size_t w = 0; w < ods; ++w) {
      // Cap below the root of Theta and at most twice the target, which the
      // default loading horizon covers.
      const double cap = target[w] + 0.95 * std::min(lambda[w] / rho[w], target[w]);
      curves.push_back(InverseDemand::make_curve(net.ods()[w].id, lambda[w] + rho[w] * target[w],
                                                 rho[w], cap));
    }
    sub.demand = InverseDemand(std::move(curves));

    ExtendedPoint y = make_point(sub, x.h);
    CostField sub_costs = it.evaluate(sub, y, x);
    double sub_gap = compute_gap(sub, y, sub_costs);
    it.run(sub, y, sub_costs, sub_gap, std::max(0.1 * gap_tol, 0.1 * gap), 1);

    std::vector<Profile> h = y.h;
    for (std::size_t w = 0; w < ods; ++w) {
      lambda[w] = std::max(sub.demand.theta(w, y.q[w]), 1e-6 * rho[w] * target[w]);
      for (std::size_t p : net.paths_of(w)) {
        if (!(y.q[w] > 0.0)) {
          h[p] = x.h[p];
          continue;
        }
        std::vector<double> v(h[p].values().begin(), h[p].values().end());
        for (double& e : v) e *= target[w] / y.q[w];
        h[p] = Profile(h[p].grid(), std::move(v));
      }
    }
    ExtendedPoint next = make_point(instance, std::move(h));
    costs = it.evaluate(instance, next, x);
    x = std::move(next);
    gap = compute_gap(instance, x, costs);
    converged = gap <= gap_tol;
  }
  return converged;
}

}  // namespace

SolveReport solve(const Instance& instance, const SolverConfig& config, const DelayModel& model) {
  const auto started = std::chrono::steady_clock::now();
  if (config.cells < 1) throw DomainError("solver: cell count must be positive");
  if (!(config.alpha > 0.0)) throw DomainError("solver: step size must be positive");
  if (!(config.gap_tol >= 0.0)) throw DomainError("solver: gap tolerance must be nonnegative");
  if (instance.mode == DemandMode::Fixed &&
      instance.fixed_demand.size() != instance.network.ods().size()) {
    throw StructuralError("solver: fixed demand needs one value per OD");
  }
  if (instance.mode == DemandMode::Elastic &&
      instance.demand.size() != instance.network.ods().size()) {
    throw StructuralError("solver: inverse demand needs one curve per OD");
  }
  check_a1(instance.penalty);

  const Network& net = instance.network;
  SolveReport report;
  report.grid = instance.grid(config.cells);
  const TimeGrid& grid = report.grid;

  ExtendedPoint x = config.warm_start ? *config.warm_start : initial_point(instance, grid);
  if (!is_feasible(x, net.path_od())) throw DomainError("solver: start point is infeasible");

  Iterator it(config, model, report.history);
  CostField costs = it.evaluate(instance, x, x);
  double gap = compute_gap(instance, x, costs);
  report.initial_gap = gap;
  const bool converged = instance.mode == DemandMode::Fixed
                             ? solve_fixed(instance, it, x, costs, gap, config.gap_tol)
                             : it.run(instance, x, costs, gap, config.gap_tol);

  report.iterations = it.iterations();
  report.converged = converged;
  report.final_gap = gap;
  report.residuals = due_residuals(net, x, costs, config.flow_threshold);
  report.lemma2_bound = lemma2_bound(net, instance.penalty);
  for (const Profile& hp : x.h) report.max_cell_flow = std::max(report.max_cell_flow, hp.max());
  report.lemma2_ok = report.max_cell_flow <= report.lemma2_bound;
  const auto bounds = instance.demand_bounds();
  report.cap_active.resize(bounds.size());
  for (std::size_t w = 0; w < bounds.size(); ++w) {
    report.cap_active[w] =
        instance.mode == DemandMode::Elastic && x.q[w] >= bounds[w] * (1.0 - 1e-12);
  }
  report.feasible = is_feasible(x, net.path_od());
  report.point = std::move(x);
  report.costs = std::move(costs);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

}  // namespace edue
