#include "edue/dnl.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <sstream>

namespace edue {

namespace {

PiecewiseLinear zero_curve(double t0) { return PiecewiseLinear({t0}, {0.0}); }

PiecewiseLinear departure_curve(const Profile& h) {
  const TimeGrid& g = h.grid();
  std::vector<double> x(g.cells() + 1), y(g.cells() + 1);
  double cum = 0.0;
  for (int j = 0; j <= g.cells(); ++j) {
    x[j] = g.boundary(j);
    y[j] = cum;
    if (j < g.cells()) cum += h[j] * g.width();
  }
  return PiecewiseLinear(std::move(x), std::move(y));
}

struct QueueOutcome {
  PiecewiseLinear cum_out;
  PiecewiseLinear queue_exit;
};

// Discharges the queue-arrival curve `arrive` through a server of rate
// `capacity`. Exits follow arrivals while the queue is empty and the arrival
// rate is within capacity; otherwise exits run at capacity until the queue
// empties, which adds a breakpoint.
QueueOutcome discharge(const PiecewiseLinear& arrive, double capacity) {
  const auto xs = arrive.x();
  const auto ys = arrive.y();
  const double scale = std::max(1.0, std::abs(arrive.back_y()));
  const double q_eps = 1e-13 * scale;
  const double t_eps = 1e-13 * std::max(1.0, std::abs(xs.back()));

  BreakpointBuilder out(t_eps);
  double d = ys[0];
  out.push(xs[0], d);
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double s0 = xs[i], s1 = xs[i + 1];
    const double a0 = ys[i], a1 = ys[i + 1];
    const double len = s1 - s0;
    const double rate = (a1 - a0) / len;
    const double q = a0 - d;
    if (q <= q_eps) {
      if (rate <= capacity) {
        d = a1;
      } else {
        d = std::min(a1, d + capacity * len);
      }
      out.push(s1, d);
    } else if (rate >= capacity) {
      d = std::min(a1, d + capacity * len);
      out.push(s1, d);
    } else {
      const double empty_after = q / (capacity - rate);
      if (s0 + empty_after < s1) {
        out.push(s0 + empty_after, std::min(a1, d + capacity * empty_after));
        d = a1;
      } else {
        d = std::min(a1, d + capacity * len);
      }
      out.push(s1, d);
    }
  }
  const double residual = ys.back() - d;
  if (residual > q_eps) {
    d = ys.back();
    out.push(xs.back() + residual / capacity, d);
  }
  PiecewiseLinear cum_out = std::move(out).build();

  // Exit time of the vehicle reaching the queue at s: s + q(s)/capacity. Linear
  // between breakpoints of the exit curve, which include those of `arrive`.
  const auto dx = cum_out.x();
  const auto dy = cum_out.y();
  std::vector<double> tx(dx.begin(), dx.end()), ty(dx.size());
  for (std::size_t i = 0; i < dx.size(); ++i) {
    const double q = std::max(0.0, arrive(dx[i]) - dy[i]);
    ty[i] = dx[i] + q / capacity;
    if (i > 0) ty[i] = std::max(ty[i], ty[i - 1]);
  }
  return {std::move(cum_out), PiecewiseLinear(std::move(tx), std::move(ty), 1.0, 1.0)};
}

// Cumulative count of one path's vehicles leaving a link, given its cumulative
// entering count and the link's entry-to-exit time map.
PiecewiseLinear through_link(const PiecewiseLinear& entering, const LinkState& link) {
  const double lo = entering.front_x();
  const double hi = entering.back_x();
  std::vector<double> cand(entering.x().begin(), entering.x().end());
  for (double s : link.queue_exit.x()) {
    const double e = s - link.free_flow_time;
    if (e > lo && e < hi) cand.push_back(e);
  }
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());

  BreakpointBuilder out;
  for (double e : cand) {
    double t = link.exit_time(e);
    if (!out.empty()) t = std::max(t, out.last_x());
    out.push(t, entering(e));
  }
  return std::move(out).build();
}

struct Use {
  std::size_t path;
  std::size_t position;
};

// Precedence order of links (a before b when some path traverses a then b).
// Returns false when the precedence graph has a cycle; the order then lists
// the acyclic prefix first and the remaining links in index order.
bool precedence_order(const Network& network, std::vector<std::size_t>& order) {
  const std::size_t m = network.links().size();
  std::vector<std::vector<std::size_t>> next(m);
  std::vector<std::size_t> indeg(m, 0);
  for (const Path& p : network.paths()) {
    for (std::size_t k = 1; k < p.links.size(); ++k) {
      next[p.links[k - 1]].push_back(p.links[k]);
    }
  }
  for (auto& v : next) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    for (std::size_t b : v) ++indeg[b];
  }
  std::deque<std::size_t> ready;
  for (std::size_t a = 0; a < m; ++a) {
    if (indeg[a] == 0) ready.push_back(a);
  }
  std::vector<bool> placed(m, false);
  order.clear();
  while (!ready.empty()) {
    const std::size_t a = ready.front();
    ready.pop_front();
    order.push_back(a);
    placed[a] = true;
    for (std::size_t b : next[a]) {
      if (--indeg[b] == 0) ready.push_back(b);
    }
  }
  if (order.size() == m) return true;
  for (std::size_t a = 0; a < m; ++a) {
    if (!placed[a]) order.push_back(a);
  }
  return false;
}

}  // namespace

double LinkState::queue(double t) const {
  return std::max(0.0, cum_in(t - free_flow_time) - cum_out(t));
}

LoadingResult::LoadingResult(std::vector<LinkState> links,
                             std::vector<std::vector<std::size_t>> path_links,
                             std::vector<PiecewiseLinear> departures,
                             std::vector<PiecewiseLinear> arrivals, double horizon_end)
    : links_(std::move(links)),
      path_links_(std::move(path_links)),
      departures_(std::move(departures)),
      arrivals_(std::move(arrivals)),
      horizon_end_(horizon_end) {}

double LoadingResult::exit_time(std::size_t path, double t) const {
  double clock = t;
  for (std::size_t a : path_links_.at(path)) clock = links_[a].exit_time(clock);
  return clock;
}

double LoadingResult::departed_volume() const {
  double v = 0.0;
  for (const auto& c : departures_) v += c.back_y();
  return v;
}

double LoadingResult::arrived_volume() const {
  double v = 0.0;
  for (const auto& c : arrivals_) v += c.back_y();
  return v;
}

double LoadingResult::clearance_time() const {
  double t = -std::numeric_limits<double>::infinity();
  for (const auto& c : arrivals_) t = std::max(t, c.back_x());
  return t;
}

BoundaryExitTimes LoadingResult::boundary_exit_times(const TimeGrid& grid) const {
  BoundaryExitTimes out;
  out.times.resize(path_count());
  for (std::size_t p = 0; p < path_count(); ++p) {
    auto& row = out.times[p];
    row.resize(grid.cells() + 1);
    for (int j = 0; j <= grid.cells(); ++j) row[j] = exit_time(p, grid.boundary(j));
  }
  return out;
}

LoadingResult load(const Network& network, std::span<const Profile> h, const TimeGrid& grid,
                   const LoadOptions& options) {
  const auto& paths = network.paths();
  const auto& links = network.links();
  if (h.size() != paths.size()) {
    throw StructuralError("load: expected " + std::to_string(paths.size()) + " path flows, got " +
                          std::to_string(h.size()));
  }
  for (const Profile& hp : h) {
    if (!(hp.grid() == grid)) throw StructuralError("load: path flow on a different grid");
    if (!hp.nonnegative()) throw DomainError("load: path flows must be nonnegative");
  }

  // entering[p][k]: cumulative count of path p vehicles entering its k-th link;
  // entering[p][K] is the arrival curve at the destination.
  std::vector<std::vector<PiecewiseLinear>> entering(paths.size());
  std::vector<std::vector<Use>> users(links.size());
  double departed = 0.0;
  for (std::size_t p = 0; p < paths.size(); ++p) {
    const std::size_t len = paths[p].links.size();
    entering[p].assign(len + 1, zero_curve(grid.t0()));
    entering[p][0] = departure_curve(h[p]);
    departed += entering[p][0].back_y();
    for (std::size_t k = 0; k < len; ++k) users[paths[p].links[k]].push_back({p, k});
  }

  double min_capacity = std::numeric_limits<double>::infinity();
  double min_fft = std::numeric_limits<double>::infinity();
  double total_fft = 0.0;
  for (const Link& l : links) {
    min_capacity = std::min(min_capacity, l.capacity);
    min_fft = std::min(min_fft, l.free_flow_time);
    total_fft += l.free_flow_time;
  }
  const double extension =
      options.horizon_extension.value_or(links.empty() ? 0.0 : departed / min_capacity + total_fft);
  const double horizon_end = grid.tf() + extension;

  std::vector<LinkState> states;
  states.reserve(links.size());
  for (const Link& l : links) {
    states.push_back({l.free_flow_time, l.capacity, zero_curve(grid.t0()), zero_curve(grid.t0()),
                      PiecewiseLinear({grid.t0()}, {grid.t0()}, 1.0, 1.0)});
  }

  std::vector<std::size_t> order;
  const bool acyclic = precedence_order(network, order);
  const double span = horizon_end - grid.t0();
  const std::size_t max_sweeps =
      acyclic ? 1 : static_cast<std::size_t>(std::ceil(span / min_fft)) + 2;

  std::vector<PiecewiseLinear> inflows;
  bool settled = acyclic;
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    bool changed = false;
    for (std::size_t a : order) {
      if (users[a].empty()) continue;
      inflows.clear();
      for (const Use& u : users[a]) inflows.push_back(entering[u.path][u.position]);
      LinkState& st = states[a];
      st.cum_in = sum(inflows);
      auto q = discharge(st.cum_in.shifted(st.free_flow_time), st.capacity);
      st.cum_out = std::move(q.cum_out);
      st.queue_exit = std::move(q.queue_exit);
      for (const Use& u : users[a]) {
        PiecewiseLinear next = through_link(entering[u.path][u.position], st);
        auto& slot = entering[u.path][u.position + 1];
        if (!(next == slot)) {
          slot = std::move(next);
          changed = true;
        }
      }
    }
    if (!acyclic && !changed) {
      settled = true;
      break;
    }
  }
  if (!settled) throw Error("load: cyclic link precedence did not settle");

  std::vector<std::vector<std::size_t>> path_links;
  std::vector<PiecewiseLinear> departures, arrivals;
  for (std::size_t p = 0; p < paths.size(); ++p) {
    path_links.push_back(paths[p].links);
    departures.push_back(entering[p].front());
    arrivals.push_back(entering[p].back());
  }
  LoadingResult result(std::move(states), std::move(path_links), std::move(departures),
                       std::move(arrivals), horizon_end);

  if (departed > 0.0 &&
      result.clearance_time() > horizon_end + 1e-12 * std::max(1.0, std::abs(horizon_end))) {
    double arrived_by_end = 0.0;
    for (std::size_t p = 0; p < paths.size(); ++p) arrived_by_end += result.arrivals(p)(horizon_end);
    std::ostringstream msg;
    msg << "load: network does not clear by t=" << horizon_end << "; "
        << (departed - arrived_by_end) << " vehicles remain";
    throw HorizonOverflow(msg.str(), departed - arrived_by_end);
  }
  return result;
}

std::vector<Profile> path_delay_profiles(const LoadingResult& result, const TimeGrid& grid) {
  std::vector<Profile> out;
  out.reserve(result.path_count());
  for (std::size_t p = 0; p < result.path_count(); ++p) {
    std::vector<double> v(grid.cells());
    double left = result.delay(p, grid.boundary(0));
    for (int j = 0; j < grid.cells(); ++j) {
      const double right = result.delay(p, grid.boundary(j + 1));
      v[j] = 0.5 * (left + right);
      left = right;
    }
    out.emplace_back(grid, std::move(v));
  }
  return out;
}

BoundaryExitTimes PointQueueModel::exit_times(const Network& network, std::span<const Profile> h,
                                              const TimeGrid& grid) const {
  return load(network, h, grid, options_).boundary_exit_times(grid);
}

}  // namespace edue
