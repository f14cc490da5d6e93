#include "edue/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "edue/error.hpp"

namespace edue {

namespace {

class GapSearch {
 public:
  GapSearch(const Instance& instance, const TimeGrid& grid)
      : instance_(instance),
        grid_(grid),
        model_(default_delay_model(instance)),
        bounds_(instance.demand_bounds()),
        cells_(static_cast<std::size_t>(grid.cells())) {
    const Network& net = instance.network;
    const double lemma2 = lemma2_bound(net, instance.penalty);
    for (std::size_t p = 0; p < net.paths().size(); ++p) {
      const double od_bound = bounds_[net.path_od()[p]] / grid.width();
      upper_.push_back(std::min(lemma2, od_bound));
    }
  }

  std::size_t dims() const { return upper_.size() * cells_; }
  double upper(std::size_t k) const { return upper_[k / cells_]; }
  std::size_t evaluations() const { return evaluations_; }

  /// Point for a flat coordinate vector, or nothing if it is infeasible.
  std::optional<ExtendedPoint> point(const std::vector<double>& coords) const {
    const Network& net = instance_.network;
    ExtendedPoint x;
    std::vector<std::vector<double>> values(upper_.size());
    for (std::size_t p = 0; p < upper_.size(); ++p) {
      values[p].assign(coords.begin() + p * cells_, coords.begin() + (p + 1) * cells_);
    }
    if (instance_.mode == DemandMode::Fixed) {
      for (std::size_t w = 0; w < net.ods().size(); ++w) {
        double mass = 0.0;
        for (std::size_t p : net.paths_of(w)) {
          for (double v : values[p]) mass += v * grid_.width();
        }
        if (!(mass > 0.0)) return std::nullopt;
        const double factor = bounds_[w] / mass;
        for (std::size_t p : net.paths_of(w)) {
          for (double& v : values[p]) v *= factor;
        }
      }
    }
    for (auto& v : values) x.h.emplace_back(grid_, std::move(v));
    x.q = induced_demand(x.h, net.path_od(), net.ods().size());
    if (instance_.mode == DemandMode::Fixed) {
      x.q = bounds_;
    } else {
      for (std::size_t w = 0; w < x.q.size(); ++w) {
        if (x.q[w] > bounds_[w]) return std::nullopt;
      }
    }
    return x;
  }

  double gap(const std::vector<double>& coords) {
    auto x = point(coords);
    if (!x) return std::numeric_limits<double>::infinity();
    ++evaluations_;
    return compute_gap(instance_, *x, f_map(instance_, *x, model_));
  }

 private:
  const Instance& instance_;
  TimeGrid grid_;
  PointQueueModel model_;
  std::vector<double> bounds_;
  std::vector<double> upper_;
  std::size_t cells_;
  std::size_t evaluations_ = 0;
};

// Visits every point of {0..levels-1}^dims in lexicographic order.
template <typename Visit>
void for_each_lattice_point(std::size_t dims, int levels, Visit&& visit) {
  std::vector<int> idx(dims, 0);
  while (true) {
    visit(idx);
    std::size_t k = dims;
    while (k > 0) {
      --k;
      if (++idx[k] < levels) break;
      idx[k] = 0;
      if (k == 0) return;
    }
    if (dims == 0) return;
  }
}

int levels_within(std::size_t budget, std::size_t dims) {
  return static_cast<int>(std::floor(std::pow(static_cast<double>(budget), 1.0 / dims) + 1e-9));
}

// Dense Gaussian elimination with partial pivoting; false if singular.
bool solve_linear(std::vector<std::vector<double>> a, std::vector<double>& b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    if (!(std::abs(a[piv][c]) > 1e-300)) return false;
    std::swap(a[piv], a[c]);
    std::swap(b[piv], b[c]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      if (f == 0.0) continue;
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  for (std::size_t c = n; c-- > 0;) {
    for (std::size_t k = c + 1; k < n; ++k) b[c] -= a[c][k] * b[k];
    b[c] /= a[c][c];
  }
  return true;
}

// Equilibrium conditions restricted to a support S of (path, cell) coordinates:
// reduced cost zero on S, with h = 0 off S. Fixed mode adds one price unknown
// and one conservation equation per OD.
class SupportSystem {
 public:
  SupportSystem(const Instance& instance, const TimeGrid& grid, const DelayModel& model,
                std::vector<std::size_t> support)
      : instance_(instance), grid_(grid), model_(model), support_(std::move(support)) {}

  std::size_t unknowns() const {
    return support_.size() + (fixed() ? instance_.network.ods().size() : 0);
  }

  std::vector<double> coords(const std::vector<double>& z, std::size_t dims) const {
    std::vector<double> c(dims, 0.0);
    for (std::size_t k = 0; k < support_.size(); ++k) c[support_[k]] = z[k];
    return c;
  }

  std::vector<double> residual(const std::vector<double>& z) const {
    const Network& net = instance_.network;
    const std::size_t cells = static_cast<std::size_t>(grid_.cells());
    ExtendedPoint x;
    const auto c = coords(z, net.paths().size() * cells);
    for (std::size_t p = 0; p < net.paths().size(); ++p) {
      std::vector<double> v(c.begin() + p * cells, c.begin() + (p + 1) * cells);
      for (double& e : v) e = std::max(0.0, e);
      x.h.emplace_back(grid_, std::move(v));
    }
    x.q = induced_demand(x.h, net.path_od(), net.ods().size());
    CostField costs;
    costs.path_costs = effective_delay(model_.exit_times(net, x.h, grid_), grid_,
                                       instance_.penalty, net.desired_arrival());
    std::vector<double> r;
    for (std::size_t k = 0; k < support_.size(); ++k) {
      const std::size_t p = support_[k] / cells;
      const std::size_t j = support_[k] % cells;
      const std::size_t w = net.path_od()[p];
      const double price = fixed() ? z[support_.size() + w]
                                   : instance_.demand.curve(w).intercept -
                                         instance_.demand.curve(w).slope * x.q[w];
      r.push_back(costs.path_costs[p][j] - price);
    }
    if (fixed()) {
      for (std::size_t w = 0; w < net.ods().size(); ++w) {
        r.push_back(x.q[w] - instance_.fixed_demand[w]);
      }
    }
    return r;
  }

  /// Damped Newton with forward-difference Jacobian. Returns the final iterate.
  std::vector<double> newton(std::vector<double> z) const {
    auto norm = [](const std::vector<double>& v) {
      double s = 0.0;
      for (double e : v) s += e * e;
      return std::sqrt(s);
    };
    std::vector<double> r = residual(z);
    for (int it = 0; it < 60 && norm(r) > 1e-13; ++it) {
      const std::size_t n = z.size();
      std::vector<std::vector<double>> jac(n, std::vector<double>(n));
      for (std::size_t k = 0; k < n; ++k) {
        const double step = 1e-7 * std::max(1.0, std::abs(z[k]));
        std::vector<double> zp = z;
        zp[k] += step;
        std::vector<double> rp;
        try {
          rp = residual(zp);
        } catch (const Error&) {
          return z;
        }
        for (std::size_t i = 0; i < n; ++i) jac[i][k] = (rp[i] - r[i]) / step;
      }
      std::vector<double> delta = r;
      if (!solve_linear(jac, delta)) break;
      double t = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 30; ++ls, t *= 0.5) {
        std::vector<double> zn = z;
        for (std::size_t k = 0; k < n; ++k) zn[k] -= t * delta[k];
        std::vector<double> rn;
        try {
          rn = residual(zn);
        } catch (const Error&) {
          continue;
        }
        if (norm(rn) < norm(r)) {
          z = std::move(zn);
          r = rn;
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }
    return z;
  }

 private:
  bool fixed() const { return instance_.mode == DemandMode::Fixed; }

  const Instance& instance_;
  TimeGrid grid_;
  const DelayModel& model_;
  std::vector<std::size_t> support_;
};

}  // namespace

bool is_tiny(const Instance& instance, const TimeGrid& grid) {
  const std::size_t paths = instance.network.paths().size();
  const std::size_t ods = instance.network.ods().size();
  return ods <= 2 && paths <= 3 && grid.cells() <= 6 &&
         paths * static_cast<std::size_t>(grid.cells()) + ods <= 20;
}

OracleResult brute_force_equilibrium(const Instance& instance, const TimeGrid& grid,
                                     const OracleOptions& options) {
  if (!is_tiny(instance, grid)) {
    throw StructuralError("oracle: instance exceeds the exhaustive-search size limits");
  }
  GapSearch search(instance, grid);
  const std::size_t dims = search.dims();

  OracleResult result;
  {
    const ExtendedPoint start = initial_point(instance, grid);
    const CostField c0 = f_map(instance, start);
    const auto bounds = instance.demand_bounds();
    for (std::size_t w = 0; w < bounds.size(); ++w) result.scale += c0.theta[w] * bounds[w];
  }

  // Coarse lattice over the whole box.
  const int levels =
      std::max(2, std::min(options.resolution, levels_within(options.coarse_budget, dims)));
  std::vector<double> best(dims, 0.0);
  double best_gap = std::numeric_limits<double>::infinity();
  std::vector<double> coords(dims);
  for_each_lattice_point(dims, levels, [&](const std::vector<int>& idx) {
    for (std::size_t k = 0; k < dims; ++k) {
      coords[k] = search.upper(k) * idx[k] / (levels - 1);
    }
    const double g = search.gap(coords);
    if (g < best_gap) {
      best_gap = g;
      best = coords;
    }
  });

  // Local lattices around the incumbent, re-centred until no improvement, then
  // shrunk tenfold. Spacing is relative to each coordinate's upper bound.
  const double certify = options.certify_rel * result.scale;
  const int half_width = std::clamp((levels_within(options.local_budget, dims) - 1) / 2, 1, 5);
  const int local_levels = 2 * half_width + 1;
  double spacing = 1.0 / (levels - 1);
  const int rounds = std::max(4, options.refinement_rounds);
  int round = 0;
  for (; round < rounds && best_gap > certify; ++round) {
    spacing /= 10.0;
    for (int recentre = 0; recentre < 100; ++recentre) {
      const std::vector<double> centre = best;
      bool improved = false;
      for_each_lattice_point(dims, local_levels, [&](const std::vector<int>& idx) {
        for (std::size_t k = 0; k < dims; ++k) {
          const double step = (idx[k] - half_width) * spacing * search.upper(k);
          coords[k] = std::clamp(centre[k] + step, 0.0, search.upper(k));
        }
        const double g = search.gap(coords);
        if (g < best_gap) {
          best_gap = g;
          best = coords;
          improved = true;
        }
      });
      if (!improved) break;
      // Pattern move: keep stepping along the direction that just paid off.
      const std::vector<double> from = centre;
      for (double stride = 1.0; stride <= 1024.0; stride *= 2.0) {
        bool inside = true;
        for (std::size_t k = 0; k < dims; ++k) {
          coords[k] = best[k] + stride * (best[k] - from[k]);
          if (coords[k] < 0.0 || coords[k] > search.upper(k)) inside = false;
        }
        if (!inside) break;
        const double g = search.gap(coords);
        if (!(g < best_gap)) break;
        best_gap = g;
        best = coords;
      }
    }
  }

  // Support polish: solve the equilibrium conditions on candidate supports and
  // keep any solution whose gap beats the lattice incumbent.
  if (best_gap > certify) {
    const PointQueueModel model = default_delay_model(instance);
    std::vector<std::vector<std::size_t>> supports;
    {
      double top = 0.0;
      for (double v : best) top = std::max(top, v);
      std::vector<std::size_t> used;
      for (std::size_t k = 0; k < dims; ++k) {
        if (best[k] > 1e-3 * top) used.push_back(k);
      }
      if (!used.empty()) supports.push_back(used);
    }
    if (dims <= options.max_support_dims) {
      for (std::size_t mask = 1; mask < (std::size_t{1} << dims); ++mask) {
        std::vector<std::size_t> s;
        for (std::size_t k = 0; k < dims; ++k) {
          if (mask & (std::size_t{1} << k)) s.push_back(k);
        }
        if (s != supports.front()) supports.push_back(std::move(s));
      }
    }
    double typical = 0.0;
    std::size_t positive = 0;
    for (double v : best) {
      if (v > 0.0) {
        typical += v;
        ++positive;
      }
    }
    typical = positive > 0 ? typical / positive : 1.0;
    const ExtendedPoint incumbent = *search.point(best);
    std::vector<double> fixed_prices;
    if (instance.mode == DemandMode::Fixed) fixed_prices = f_map(instance, incumbent, model).theta;
    const Network& net = instance.network;
    const std::size_t cells = static_cast<std::size_t>(grid.cells());
    for (const auto& support : supports) {
      SupportSystem system(instance, grid, model, support);
      // Newton on a piecewise-smooth system is start-sensitive: try the
      // incumbent, its mean used value, and an even split of its demand.
      std::vector<std::vector<double>> starts(3);
      std::vector<std::size_t> per_od(net.ods().size(), 0);
      for (std::size_t k : support) ++per_od[net.path_od()[k / cells]];
      for (std::size_t k : support) {
        const std::size_t w = net.path_od()[k / cells];
        starts[0].push_back(best[k] > 0.0 ? best[k] : typical);
        starts[1].push_back(typical);
        const double q = incumbent.q[w] > 0.0 ? incumbent.q[w] : typical * grid.width();
        starts[2].push_back(q / (static_cast<double>(per_od[w]) * grid.width()));
      }
      for (auto& z : starts) {
        z.insert(z.end(), fixed_prices.begin(), fixed_prices.end());
        try {
          z = system.newton(std::move(z));
        } catch (const Error&) {
          continue;
        }
        bool inside = true;
        for (std::size_t k = 0; k < support.size(); ++k) {
          if (!(z[k] > 0.0) || z[k] > search.upper(support[k])) inside = false;
        }
        if (!inside) continue;
        const auto candidate = system.coords(z, dims);
        const double g = search.gap(candidate);
        if (g < best_gap) {
          best_gap = g;
          best = candidate;
        }
      }
      if (best_gap <= certify) break;
    }
  }

  result.point = *search.point(best);
  result.gap = best_gap;
  result.certified = best_gap <= certify;
  result.rounds = round;
  result.evaluations = search.evaluations();
  return result;
}

double bisect_equilibrium_demand(const DemandCurve& curve, double v_min) {
  // Theta is nonincreasing; excess(Q) = Theta(Q) - v_min changes sign at the root.
  auto excess = [&](double q) { return curve.intercept - curve.slope * q - v_min; };
  if (excess(0.0) <= 0.0) return 0.0;
  if (excess(curve.cap) >= 0.0) return curve.cap;
  double lo = 0.0, hi = curve.cap;
  for (int i = 0; i < 200 && hi - lo > 1e-15 * curve.cap; ++i) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace edue
