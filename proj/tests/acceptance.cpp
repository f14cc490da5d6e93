// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Instances are in minutes and vehicles (see support.hpp).

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "edue/dnl.hpp"
#include "edue/oracle.hpp"
#include "edue/verify.hpp"
#include "support.hpp"

using namespace edue;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

// Every converged solve is kept for the residual, probe and bound criteria.
struct Solved {
  std::string name;
  Instance instance;
  SolveReport report;
};
std::vector<Solved> g_solved;

SolveReport solve_and_keep(const std::string& name, const Instance& inst, const SolverConfig& cfg) {
  SolveReport r = solve(inst, cfg);
  if (r.converged) g_solved.push_back({name, inst, r});
  return r;
}

SolverConfig config(int cells, double alpha, int max_iters, double gap_tol) {
  SolverConfig cfg;
  cfg.cells = cells;
  cfg.alpha = alpha;
  cfg.max_iters = max_iters;
  cfg.gap_tol = gap_tol;
  return cfg;
}

// Theta_w(0) * U_w in elastic mode, v_w * Q_w in fixed mode.
double problem_scale(const Instance& inst, const CostField& costs) {
  const auto bounds = inst.demand_bounds();
  double s = 0.0;
  for (std::size_t w = 0; w < bounds.size(); ++w) {
    s += (inst.mode == DemandMode::Elastic ? inst.demand.curve(w).intercept : costs.theta[w]) *
         bounds[w];
  }
  return s;
}

double max_cell_flow(const ExtendedPoint& x) {
  double m = 0.0;
  for (const auto& hp : x.h) {
    for (std::size_t j = 0; j < hp.size(); ++j) m = std::max(m, hp[j]);
  }
  return m;
}

ExtendedPoint random_feasible(std::mt19937& rng, const Instance& inst, const TimeGrid& g) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Network& net = inst.network;
  const auto bounds = inst.demand_bounds();
  std::vector<Profile> h;
  for (std::size_t p = 0; p < net.paths().size(); ++p) {
    std::vector<double> v(g.cells());
    // mix of spread-out and spiky probes
    const bool spike = u(rng) < 0.3;
    for (double& e : v) e = (spike ? u(rng) < 0.8 : u(rng) < 0.3) ? 0.0 : u(rng);
    h.emplace_back(g, v);
  }
  const auto q = induced_demand(h, net.path_od(), net.ods().size());
  for (std::size_t p = 0; p < h.size(); ++p) {
    const std::size_t w = net.path_od()[p];
    if (q[w] <= 0.0) continue;
    const double target = inst.mode == DemandMode::Fixed ? bounds[w] : u(rng) * bounds[w];
    std::vector<double> v(h[p].values().begin(), h[p].values().end());
    for (double& e : v) e *= target / q[w];
    h[p] = Profile(g, v);
  }
  // a fixed-demand OD whose draw was all zeros still has to carry its demand
  if (inst.mode == DemandMode::Fixed) {
    for (std::size_t w = 0; w < q.size(); ++w) {
      if (q[w] > 0.0) continue;
      const std::size_t p = net.paths_of(w).front();
      h[p] = test::constant(g, bounds[w] / (g.tf() - g.t0()));
    }
  }
  return make_point(inst, h);
}

// ---------------------------------------------------------------------------

Outcome uncongested_demand() {
  Outcome out;
  const Instance inst = test::uncongested();
  // continuum cheapest cost: depart at T_A - tau, no penalty
  const double expected = bisect_equilibrium_demand(inst.demand.curve(0), 10.0);
  out.detail << "oracle Q=" << expected;
  for (auto [n, tol] : {std::pair{64, 0.02}, std::pair{256, 0.005}}) {
    const auto r = solve_and_keep("uncongested n=" + std::to_string(n), inst,
                                  config(n, 0.5, 60000, 1e-9));
    const double err = std::abs(r.point.q[0] - expected) / expected;
    out.detail << "; n=" << n << " Q=" << r.point.q[0] << " rel err=" << err
               << " gap/initial=" << r.final_gap / r.initial_gap;
    out.require(r.converged, "n=" + std::to_string(n) + " converged");
    out.require(err <= tol, "n=" + std::to_string(n) + " Q within tolerance");
    out.require(r.final_gap <= 1e-6 * r.initial_gap, "n=" + std::to_string(n) + " gap reduction");
  }
  return out;
}

Outcome oracle_agreement() {
  Outcome out;
  struct Tiny {
    std::string name;
    Instance inst;
    int cells;
    double alpha;
  };
  std::vector<Tiny> cases;
  cases.push_back({"bottleneck", test::bottleneck(20.0, 70.0), 6, 0.01});
  {
    Instance inst = test::bottleneck(30.0, 70.0);
    inst.network = test::parallel_links(5.0, 0.5, 60.0);
    cases.push_back({"parallel", inst, 4, 0.01});
  }
  {
    Instance inst = test::uncongested();
    inst.t0 = 50.0;
    inst.tf = 70.0;
    cases.push_back({"uncongested", inst, 4, 0.5});
  }
  {
    Instance inst = test::bottleneck(20.0, 70.0);
    inst.mode = DemandMode::Fixed;
    inst.fixed_demand = {40.0};
    cases.push_back({"fixed", inst, 6, 0.01});
  }

  int agreed = 0;
  for (const auto& c : cases) {
    const TimeGrid g = c.inst.grid(c.cells);
    const auto o = brute_force_equilibrium(c.inst, g);
    const auto s = solve_and_keep("tiny " + c.name, c.inst, config(c.cells, c.alpha, 100000, 1e-10));
    const double q = o.point.q[0];
    double worst = 0.0;
    for (std::size_t p = 0; p < o.point.h.size(); ++p) {
      for (int j = 0; j < c.cells; ++j) {
        worst = std::max(worst, std::abs(s.point.h[p][j] - o.point.h[p][j]) * g.width() / q);
      }
    }
    const double qerr = std::abs(s.point.q[0] - q) / q;
    const bool ok = o.certified && s.converged && qerr <= 0.01 && worst <= 0.02;
    agreed += ok;
    out.detail << c.name << ": Q rel=" << qerr << " cell rel=" << worst
               << (o.certified ? "" : " (oracle uncertified)") << "; ";
    out.require(ok, c.name);
  }
  out.require(agreed >= 3, "at least three tiny instances agree");
  return out;
}

// Criteria 1, 2, 7 and 8 fill g_solved before this runs.
Outcome residuals_at_every_solve() {
  Outcome out;
  double r1 = 0.0, r2 = 0.0, dg = 0.0;
  for (const auto& s : g_solved) {
    const auto& res = s.report.residuals;
    r1 = std::max(r1, res.max_r1_rel());
    r2 = std::max(r2, res.max_r2_rel());
    dg = std::max(dg, res.max_demand_gap_rel());
    out.require(res.max_r1_rel() <= 1e-4 && res.max_r2_rel() <= 1e-4 &&
                    res.max_demand_gap_rel() <= 1e-3,
                s.name);
  }
  out.detail << g_solved.size() << " solves; worst r1=" << r1 << " r2=" << r2
             << " demand gap=" << dg;
  out.require(!g_solved.empty(), "some converged solve");
  return out;
}

Outcome vi_equivalence() {
  Outcome out;
  std::mt19937 rng(20261019);
  double worst = INFINITY;
  int probes = 0;
  for (const auto& s : g_solved) {
    const auto& star = s.report.point;
    const auto& costs = s.report.costs;
    const double scale = problem_scale(s.instance, costs);
    double lowest = vi_lhs(star, best_response(s.instance, star, costs), costs);
    for (int k = 0; k < 1000; ++k) {
      lowest = std::min(lowest, vi_lhs(star, random_feasible(rng, s.instance, s.report.grid), costs));
    }
    probes += 1001;
    worst = std::min(worst, lowest / scale);
    out.require(lowest >= -1e-6 * scale, s.name + " probes");
  }
  out.detail << probes << " probes over " << g_solved.size()
             << " solves; min vi_lhs/scale=" << worst;

  // Converse: move a fifth of the demand to another cell.
  int rejected = 0, perturbed = 0;
  for (const auto& s : g_solved) {
    const auto& star = s.report.point;
    const TimeGrid& g = s.report.grid;
    std::size_t p = 0;
    int from = 0;
    for (std::size_t q = 0; q < star.h.size(); ++q) {
      for (int j = 0; j < g.cells(); ++j) {
        if (star.h[q][j] > star.h[p][from]) p = q, from = j;
      }
    }
    const int to = from + g.cells() / 2 >= g.cells() ? from - g.cells() / 2 : from + g.cells() / 2;
    if (to == from) continue;
    std::vector<Profile> h = star.h;
    std::vector<double> v(h[p].values().begin(), h[p].values().end());
    const double moved = 0.2 * star.q[s.instance.network.path_od()[p]] / g.width();
    const double take = std::min(moved, v[from]);
    v[from] -= take;
    v[to] += take;
    h[p] = Profile(g, v);
    const auto x = make_point(s.instance, h);
    const auto c = f_map(s.instance, x);
    const auto res = due_residuals(s.instance.network, x, c);
    const bool fails_residuals = !res.is_equilibrium(1e-4);
    const bool has_descent = vi_lhs(x, best_response(s.instance, x, c), c) < 0.0;
    ++perturbed;
    rejected += fails_residuals && has_descent;
    out.require(fails_residuals, s.name + " perturbed residuals");
    out.require(has_descent, s.name + " perturbed descent probe");
  }
  out.detail << "; perturbed points rejected " << rejected << "/" << perturbed;
  return out;
}

Outcome lemma2() {
  Outcome out;
  double ratio = 0.0, interior = 0.0;
  int first_cell = 0, elsewhere = 0;
  std::vector<std::string> over;
  for (const auto& s : g_solved) {
    const double bound = s.report.lemma2_bound;
    ratio = std::max(ratio, s.report.max_cell_flow / bound);
    for (const auto& hp : s.report.point.h) {
      for (std::size_t j = 0; j < hp.size(); ++j) {
        if (j > 0) interior = std::max(interior, hp[j] / bound);
        if (hp[j] > bound) ++(j == 0 ? first_cell : elsewhere);
      }
    }
    if (!(s.report.lemma2_ok && s.report.max_cell_flow <= bound)) over.push_back(s.name);
  }
  out.detail << "max flow/bound over " << g_solved.size() << " solves=" << ratio
             << " (cells past the first: " << interior << "); cells over the bound: "
             << first_cell << " first, " << elsewhere << " later";
  for (const auto& name : over) out.require(false, name);

  // bound 3 * 1 / (1 - 0.5) = 6 veh/min; a best response puts U = 114 veh in
  // one 50/6-minute cell, about 13.7 veh/min
  const Instance inst = test::bottleneck(20.0, 70.0);
  const auto r = solve(inst, config(6, 0.01, 50000, 1e-10));
  const double bound = lemma2_bound(inst.network, inst.penalty);
  const double br = max_cell_flow(best_response(inst, initial_point(inst, r.grid),
                                                f_map(inst, initial_point(inst, r.grid))));
  const double eq = max_cell_flow(r.point);
  out.detail << "; constructed: bound=" << bound << " best response=" << br
             << " equilibrium=" << eq;
  out.require(r.converged, "constructed instance converged");
  out.require(br > bound, "best response exceeds bound");
  out.require(eq <= bound, "equilibrium within bound");
  return out;
}

// Diamond with a shared bottleneck and overlapping paths, random capacities,
// free-flow times and strictly positive departure rates.
struct RandomNet {
  Network net;
  std::vector<Profile> h;
};

RandomNet random_net(std::mt19937& rng, const TimeGrid& g) {
  std::uniform_real_distribution<double> cap(0.3, 3.0), fft(0.5, 4.0), rate(0.0, 2.0);
  RandomNet out;
  Network& net = out.net;
  for (auto id : {"o1", "o2", "m", "n", "d"}) net.add_node(id);
  net.add_link("o1m", "o1", "m", fft(rng), cap(rng));
  net.add_link("o2m", "o2", "m", fft(rng), cap(rng));
  net.add_link("o1n", "o1", "n", fft(rng), cap(rng));
  net.add_link("mn", "m", "n", fft(rng), cap(rng));
  net.add_link("md", "m", "d", fft(rng), cap(rng));
  net.add_link("nd", "n", "d", fft(rng), cap(rng));
  net.add_od("o1d", "o1", "d");
  net.add_od("o2d", "o2", "d");
  net.add_path("p1", "o1d", {"o1m", "md"});
  net.add_path("p2", "o1d", {"o1n", "nd"});
  net.add_path("p3", "o1d", {"o1m", "mn", "nd"});
  net.add_path("p4", "o2d", {"o2m", "md"});
  net.add_path("p5", "o2d", {"o2m", "mn", "nd"});
  net.set_desired_arrival(g.tf() - 1.0);
  for (int p = 0; p < 5; ++p) {
    std::vector<double> v(g.cells());
    for (double& e : v) e = 1e-3 + rate(rng);
    out.h.emplace_back(g, v);
  }
  return out;
}

Outcome dnl_invariants() {
  Outcome out;
  std::mt19937 rng(6);
  const TimeGrid g(0, 20, 16);
  int fifo = 0, rate = 0, conservation = 0, loadings = 0;
  double worst_rate = -INFINITY, worst_cons = 0.0;
  for (int trial = 0; trial < 120; ++trial) {
    const auto rn = random_net(rng, g);
    const auto r = load(rn.net, rn.h, g);
    ++loadings;
    for (std::size_t p = 0; p < rn.h.size(); ++p) {
      for (int j = 1; j <= g.cells(); ++j) {
        if (!(r.exit_time(p, g.boundary(j)) > r.exit_time(p, g.boundary(j - 1)))) ++fifo;
      }
    }
    for (const LinkState& st : r.links()) {
      const auto x = st.cum_out.x();
      const auto y = st.cum_out.y();
      for (std::size_t i = 1; i < x.size(); ++i) {
        if (x[i] <= x[i - 1]) continue;
        const double excess = (y[i] - y[i - 1]) / (x[i] - x[i - 1]) - st.capacity;
        worst_rate = std::max(worst_rate, excess);
        if (excess > 1e-9) ++rate;
      }
      const double in = st.cum_in(r.horizon_end());
      const double rel = std::abs(st.cum_out(r.horizon_end()) - in) / in;
      worst_cons = std::max(worst_cons, rel);
      if (rel > 1e-9) ++conservation;
    }
    double departed = 0.0;
    for (const auto& hp : rn.h) departed += integrate(hp);
    const double rel = std::abs(r.arrived_volume() - departed) / departed;
    worst_cons = std::max(worst_cons, rel);
    if (rel > 1e-9) ++conservation;
  }
  out.detail << loadings << " loadings; FIFO violations=" << fifo << " rate violations=" << rate
             << " (worst excess " << worst_rate << ") conservation violations=" << conservation
             << " (worst " << worst_cons << ")";
  out.require(loadings >= 100 && fifo == 0 && rate == 0 && conservation == 0, "invariants");
  return out;
}

Outcome symmetry() {
  Outcome out;
  Instance inst = test::bottleneck(20.0, 70.0);
  inst.network = test::parallel_links(5.0, 0.5, 60.0);
  const auto r = solve_and_keep("parallel n=12", inst, config(12, 0.01, 100000, 1e-9));
  double diff = 0.0;
  for (int j = 0; j < 12; ++j) diff = std::max(diff, std::abs(r.point.h[0][j] - r.point.h[1][j]));
  const double peak = max_cell_flow(r.point);
  out.detail << "max |h1-h2|=" << diff << " max flow=" << peak << " Q=" << r.point.q[0];
  out.require(r.converged, "converged");
  out.require(peak > 0.0 && diff <= 1e-6 * peak, "symmetric");
  return out;
}

Outcome fixed_demand() {
  Outcome out;
  // pin the demand an elastic run chose, then price it flat at the fixed-mode cost
  const Instance elastic = test::bottleneck(20.0, 70.0);
  const int n = 10;
  const auto e = solve_and_keep("cross-mode elastic", elastic, config(n, 0.01, 100000, 1e-10));
  const double q_bar = e.point.q[0];

  Instance fixed = elastic;
  fixed.mode = DemandMode::Fixed;
  fixed.fixed_demand = {q_bar};
  const auto f = solve_and_keep("cross-mode fixed", fixed, config(n, 0.01, 200000, 1e-9));
  const double v_f = min_travel_cost(f.costs, fixed.network, 0);
  out.detail << "Q pinned at " << q_bar << ": r1=" << f.residuals.max_r1_rel()
             << " r2=" << f.residuals.max_r2_rel() << " cost=" << v_f;
  out.require(e.converged && f.converged, "both converged");
  out.require(f.residuals.is_equilibrium(1e-4), "fixed residuals");

  Instance flat = elastic;
  flat.demand = InverseDemand({InverseDemand::make_curve("od0", v_f, 0.0, 2.0 * q_bar)});
  const auto z = solve_and_keep("cross-mode flat price", flat, config(n, 0.01, 200000, 1e-9));
  double cells = 0.0;
  for (int j = 0; j < n; ++j) {
    cells = std::max(cells, std::abs(z.point.h[0][j] - f.point.h[0][j]) * z.grid.width() / q_bar);
  }
  const double qerr = std::abs(z.point.q[0] - q_bar) / q_bar;
  out.detail << "; elastic at theta0=" << v_f << ", theta1=0: Q=" << z.point.q[0]
             << " rel=" << qerr << " cell rel=" << cells
             << "; sloped-price run's own cost at the same Q=" << elastic.demand.theta(0, q_bar);
  out.require(z.converged, "flat-price run converged");
  out.require(qerr <= 0.01, "demand matches");
  out.require(cells <= 0.01, "flows match");
  return out;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(EDUE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome cli_round_trip() {
  Outcome out;
  const fs::path root = fs::temp_directory_path() / "edue_acceptance";
  fs::remove_all(root);
  int identical = 0, round_trips = 0, runs = 0;
  for (auto name : {"uncongested_elastic", "congested_bottleneck", "parallel_links",
                    "fixed_demand", "tiny_bottleneck"}) {
    const fs::path sc = fs::path(EDUE_SCENARIO_DIR) / (std::string(name) + ".json");
    const fs::path a = root / name / "a", b = root / name / "b", c = root / name / "c";
    const std::string q = "\"" + sc.string() + "\"";
    const int ca = run_cli("solve " + q + " --out \"" + a.string() + "\"");
    const int cb = run_cli("solve " + q + " --out \"" + b.string() + "\"");
    ++runs;
    out.require(ca == 0 && cb == 0, std::string(name) + " solve exit");
    bool same = true;
    for (auto f : {"flows.csv", "costs.csv", "gap.csv", "residuals.txt", "summary.txt"}) {
      same = same && fs::exists(a / f) && slurp(a / f) == slurp(b / f);
    }
    identical += same;
    out.require(same, std::string(name) + " byte-identical");
    const int cc = run_cli("check " + q + " --flows \"" + (a / "flows.csv").string() +
                           "\" --out \"" + c.string() + "\"");
    const bool rt = cc == 0 && slurp(c / "residuals.txt") == slurp(a / "residuals.txt");
    round_trips += rt;
    out.require(rt, std::string(name) + " check round-trip");
  }
  out.detail << "identical reruns " << identical << "/" << runs << ", exact check round-trips "
             << round_trips << "/" << runs;
  return out;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  // 3, 4 and 5 inspect the solves gathered by 1, 2, 7 and 8
  const std::vector<Criterion> order = {
      {1, "uncongested elastic demand", uncongested_demand},
      {2, "oracle agreement on tiny instances", oracle_agreement},
      {7, "parallel-link symmetry", symmetry},
      {8, "fixed-demand degeneration", fixed_demand},
      {3, "equilibrium residuals", residuals_at_every_solve},
      {4, "variational inequality equivalence", vi_equivalence},
      {5, "cell flow bound", lemma2},
      {6, "loading invariants", dnl_invariants},
      {9, "CLI determinism and check round-trip", cli_round_trip},
  };
  std::vector<std::string> lines(10);
  bool all = true;
  const auto start = std::chrono::steady_clock::now();
  for (const auto& c : order) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    all = all && o.pass;
    char head[96];
    std::snprintf(head, sizeof head, "criterion %d: %s (%s, %.1fs): ", c.id,
                  o.pass ? "PASS" : "FAIL", c.name, secs);
    lines[c.id] = head + o.detail.str();
  }
  for (int id = 1; id <= 9; ++id) std::cout << lines[id] << '\n';
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << "total " << total << "s: " << (all ? "ALL PASS" : "SOME FAILED") << '\n';
  return all ? 0 : 1;
}
