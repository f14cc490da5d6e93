#include "edue/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "edue/error.hpp"

namespace edue {

double ResidualReport::max_r1_rel() const {
  double worst = 0.0;
  for (const auto& r : od) {
    const double scale = r.demand * r.theta;
    if (scale > 0.0) worst = std::max(worst, r.r1 / scale);
  }
  return worst;
}

double ResidualReport::max_r2_rel() const {
  double worst = 0.0;
  for (const auto& r : od) worst = std::max(worst, r.r2 / r.theta);
  return worst;
}

double ResidualReport::max_demand_gap_rel() const {
  double worst = 0.0;
  for (const auto& r : od) worst = std::max(worst, r.demand_gap / r.theta);
  return worst;
}

bool ResidualReport::is_equilibrium(double eps) const {
  return std::all_of(od.begin(), od.end(), [eps](const OdResidual& r) {
    return r.r1 <= eps * r.demand * r.theta && r.r2 <= eps * r.theta;
  });
}

double default_flow_threshold(const ExtendedPoint& x) {
  double top = 0.0;
  for (const Profile& hp : x.h) top = std::max(top, hp.max());
  return 1e-6 * top;
}

ResidualReport due_residuals(const Network& network, const ExtendedPoint& x,
                             const CostField& costs, std::optional<double> flow_threshold) {
  const std::size_t ods = network.ods().size();
  if (x.h.size() != network.paths().size() || x.q.size() != ods ||
      costs.path_costs.size() != x.h.size() || costs.theta.size() != ods) {
    throw StructuralError("due_residuals: point, costs and network disagree in shape");
  }
  const double threshold = flow_threshold.value_or(default_flow_threshold(x));
  ResidualReport report;
  report.od.resize(ods);
  for (std::size_t w = 0; w < ods; ++w) {
    OdResidual& r = report.od[w];
    r.theta = costs.theta[w];
    r.demand = x.q[w];
    double min_all = std::numeric_limits<double>::infinity();
    double min_used = std::numeric_limits<double>::infinity();
    for (std::size_t p : network.paths_of(w)) {
      const Profile& hp = x.h[p];
      const Profile& cp = costs.path_costs[p];
      const double dt = hp.grid().width();
      for (std::size_t j = 0; j < hp.size(); ++j) {
        min_all = std::min(min_all, cp[j]);
        if (hp[j] > threshold) {
          ++r.used_cells;
          min_used = std::min(min_used, cp[j]);
          r.r1 += hp[j] * dt * std::max(0.0, cp[j] - r.theta);
        }
      }
    }
    r.v = r.used_cells > 0 ? min_used : min_all;
    r.r2 = std::max(0.0, r.theta - min_all);
    r.demand_gap = std::abs(r.v - r.theta);
  }
  return report;
}

double vi_lhs(const ExtendedPoint& star, const ExtendedPoint& probe, const CostField& costs) {
  if (star.h.size() != probe.h.size() || star.q.size() != probe.q.size() ||
      costs.path_costs.size() != star.h.size() || costs.theta.size() != star.q.size()) {
    throw StructuralError("vi_lhs: points and costs disagree in shape");
  }
  double lhs = 0.0;
  for (std::size_t p = 0; p < star.h.size(); ++p) {
    const Profile& a = star.h[p];
    const Profile& b = probe.h[p];
    const Profile& c = costs.path_costs[p];
    if (!(a.grid() == b.grid()) || a.size() != c.size()) {
      throw StructuralError("vi_lhs: profiles on different grids");
    }
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += c[j] * (b[j] - a[j]);
    lhs += s * a.grid().width();
  }
  for (std::size_t w = 0; w < star.q.size(); ++w) {
    lhs -= costs.theta[w] * (probe.q[w] - star.q[w]);
  }
  return lhs;
}

}  // namespace edue
