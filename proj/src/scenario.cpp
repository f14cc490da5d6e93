#include "edue/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "edue/error.hpp"

namespace edue {

namespace {

using nlohmann::json;

class Reader {
 public:
  Reader(const json& node, std::string where) : node_(node), where_(std::move(where)) {}

  const json& node() const { return node_; }
  const std::string& where() const { return where_; }

  [[noreturn]] void fail(const std::string& field, const std::string& why) const {
    throw InputError(path(field) + ": " + why);
  }

  std::string path(const std::string& field) const {
    return where_.empty() ? field : where_ + "." + field;
  }

  bool has(const std::string& field) const { return node_.contains(field); }

  const json& at(const std::string& field) const {
    if (!node_.is_object()) throw InputError((where_.empty() ? "document" : where_) + ": expected an object");
    auto it = node_.find(field);
    if (it == node_.end()) fail(field, "missing required field");
    return *it;
  }

  Reader child(const std::string& field) const {
    const json& c = at(field);
    if (!c.is_object()) fail(field, "expected an object");
    return Reader(c, path(field));
  }

  double number(const std::string& field) const {
    const json& v = at(field);
    if (!v.is_number()) fail(field, "expected a number");
    return v.get<double>();
  }

  double number_or(const std::string& field, double fallback) const {
    return has(field) ? number(field) : fallback;
  }

  int integer(const std::string& field) const {
    const json& v = at(field);
    if (!v.is_number_integer()) fail(field, "expected an integer");
    return v.get<int>();
  }

  int integer_or(const std::string& field, int fallback) const {
    return has(field) ? integer(field) : fallback;
  }

  std::string text(const std::string& field) const {
    const json& v = at(field);
    if (!v.is_string()) fail(field, "expected a string");
    return v.get<std::string>();
  }

  template <typename Visit>
  void each(const std::string& field, Visit&& visit) const {
    const json& arr = at(field);
    if (!arr.is_array()) fail(field, "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      visit(Reader(arr[i], path(field) + "[" + std::to_string(i) + "]"));
    }
  }

 private:
  const json& node_;
  std::string where_;
};

void read_units(const Reader& doc) {
  const Reader units = doc.child("units");
  const std::map<std::string, std::string> expected = {
      {"time", "hours"}, {"flow", "vehicles/hour"}, {"demand", "vehicles"}};
  for (const auto& [field, value] : expected) {
    if (units.text(field) != value) {
      units.fail(field, "must be \"" + value + "\"");
    }
  }
}

Network read_network(const Reader& doc, double desired_arrival) {
  const Reader net = doc.child("network");
  Network network;
  auto guard = [](const Reader& r, auto&& action) {
    try {
      action();
    } catch (const StructuralError& e) {
      throw InputError(r.where() + ": " + e.what());
    }
  };
  {
    const json& nodes = net.at("nodes");
    if (!nodes.is_array()) net.fail("nodes", "expected an array of node ids");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (!nodes[i].is_string()) {
        net.fail("nodes[" + std::to_string(i) + "]", "expected a string");
      }
      Reader r(nodes[i], net.path("nodes[" + std::to_string(i) + "]"));
      guard(r, [&] { network.add_node(nodes[i].get<std::string>()); });
    }
  }
  net.each("links", [&](const Reader& r) {
    const auto id = r.text("id");
    const auto from = r.text("from");
    const auto to = r.text("to");
    const double fft = r.number("free_flow_time");
    const double cap = r.number("capacity");
    guard(r, [&] { network.add_link(id, from, to, fft, cap); });
  });
  net.each("od_pairs", [&](const Reader& r) {
    const auto id = r.text("id");
    const auto o = r.text("origin");
    const auto d = r.text("destination");
    guard(r, [&] { network.add_od(id, o, d); });
  });
  net.each("paths", [&](const Reader& r) {
    const auto id = r.text("id");
    const auto od = r.text("od");
    std::vector<std::string> links;
    const json& arr = r.at("links");
    if (!arr.is_array()) r.fail("links", "expected an array of link ids");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_string()) r.fail("links[" + std::to_string(i) + "]", "expected a string");
      links.push_back(arr[i].get<std::string>());
    }
    guard(r, [&] { network.add_path(id, od, links); });
  });
  network.set_desired_arrival(desired_arrival);
  return network;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + upto, '\n');
    throw InputError("line " + std::to_string(line) + ": malformed JSON: " + e.what());
  }
  const Reader root(doc, "");
  if (!doc.is_object()) throw InputError("document: expected a JSON object");

  read_units(root);
  Scenario sc;
  Instance& inst = sc.instance;

  const Reader horizon = root.child("horizon");
  inst.t0 = horizon.number("t0");
  inst.tf = horizon.number("tf");
  if (!(inst.tf > inst.t0)) horizon.fail("tf", "must exceed t0");
  const double desired = horizon.number("desired_arrival");
  inst.network = read_network(root, desired);

  const Reader penalty = root.child("penalty");
  try {
    inst.penalty = SchedulePenalty(penalty.number("early"), penalty.number("late"));
    check_a1(inst.penalty);
  } catch (const DomainError& e) {
    throw InputError(penalty.where() + ": " + e.what());
  } catch (const A1Violation& e) {
    penalty.fail("early", e.what());
  }

  const Network& net = inst.network;
  const Reader demand = root.child("demand");
  const std::string mode = demand.text("mode");
  if (mode != "elastic" && mode != "fixed") demand.fail("mode", "must be \"elastic\" or \"fixed\"");
  inst.mode = mode == "fixed" ? DemandMode::Fixed : DemandMode::Elastic;
  std::vector<std::optional<DemandCurve>> curves(net.ods().size());
  std::vector<std::optional<double>> volumes(net.ods().size());
  demand.each("od", [&](const Reader& r) {
    const std::string od = r.text("od");
    std::size_t w = 0;
    try {
      w = net.od_index(od);
    } catch (const StructuralError& e) {
      r.fail("od", e.what());
    }
    if (curves[w] || volumes[w]) r.fail("od", "OD '" + od + "' listed twice");
    if (inst.mode == DemandMode::Fixed) {
      const double v = r.number("volume");
      if (!(v > 0.0)) r.fail("volume", "fixed demand must be positive");
      volumes[w] = v;
      return;
    }
    std::optional<double> cap;
    if (r.has("cap")) cap = r.number("cap");
    try {
      curves[w] = InverseDemand::make_curve(od, r.number("theta0"), r.number("theta1"), cap);
    } catch (const DomainError& e) {
      throw InputError(r.where() + ": " + e.what());
    }
  });
  for (std::size_t w = 0; w < net.ods().size(); ++w) {
    if (!curves[w] && !volumes[w]) {
      demand.fail("od", "no entry for OD '" + net.ods()[w].id + "'");
    }
  }
  if (inst.mode == DemandMode::Fixed) {
    for (const auto& v : volumes) inst.fixed_demand.push_back(*v);
  } else {
    std::vector<DemandCurve> list;
    for (auto& c : curves) list.push_back(*c);
    try {
      inst.demand = InverseDemand(std::move(list));
    } catch (const DomainError& e) {
      throw InputError(demand.where() + ": " + e.what());
    }
  }

  const Reader solver = root.child("solver");
  SolverConfig& cfg = sc.solver;
  cfg.cells = solver.integer("n");
  if (cfg.cells < 1) solver.fail("n", "must be at least 1");
  cfg.alpha = solver.number("alpha");
  if (!(cfg.alpha > 0.0)) solver.fail("alpha", "must be positive");
  cfg.max_iters = solver.integer("max_iters");
  if (cfg.max_iters < 1) solver.fail("max_iters", "must be at least 1");
  cfg.gap_tol = solver.number("gap_tol");
  if (!(cfg.gap_tol >= 0.0)) solver.fail("gap_tol", "must be nonnegative");
  cfg.halving_stall = solver.integer_or("halving_stall", 0);
  if (cfg.halving_stall < 0) solver.fail("halving_stall", "must be nonnegative");
  if (solver.has("flow_threshold")) cfg.flow_threshold = solver.number("flow_threshold");
  if (solver.has("scheme")) {
    const std::string scheme = solver.text("scheme");
    if (scheme == "projection") {
      cfg.scheme = Scheme::Projection;
    } else if (scheme != "extragradient") {
      solver.fail("scheme", "must be \"projection\" or \"extragradient\"");
    }
  }

  const auto violations = validate(net, inst.grid(cfg.cells));
  if (!violations.empty()) {
    std::string msg = "network: ";
    for (std::size_t i = 0; i < violations.size(); ++i) {
      msg += (i ? "; " : "") + violations[i].message;
    }
    throw InputError(msg);
  }
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path.string() + ": cannot open scenario file");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_scenario(buf.str());
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_flows_csv(std::ostream& out, const Network& network, const ExtendedPoint& x) {
  out << "path_id,cell_index,t_start,t_end,flow\n";
  for (std::size_t p = 0; p < x.h.size(); ++p) {
    const Profile& hp = x.h[p];
    const TimeGrid& g = hp.grid();
    for (int j = 0; j < g.cells(); ++j) {
      out << network.path(p).id << ',' << j << ',' << format_number(g.boundary(j)) << ','
          << format_number(g.boundary(j + 1)) << ',' << format_number(hp[j]) << '\n';
    }
  }
}

std::vector<Profile> read_flows_csv(std::istream& in, const Network& network, double t0,
                                    double tf) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("flows: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "path_id,cell_index,t_start,t_end,flow") {
    throw InputError("flows line 1: expected header path_id,cell_index,t_start,t_end,flow");
  }
  struct Row {
    double t_start, t_end, flow;
  };
  std::vector<std::map<int, Row>> rows(network.paths().size());
  int line_no = 1;
  auto parse_double = [&](const std::string& s, const char* what) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      throw InputError("flows line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
    }
    return v;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 5) {
      throw InputError("flows line " + std::to_string(line_no) + ": expected 5 columns");
    }
    std::size_t p = 0;
    try {
      p = network.path_index(f[0]);
    } catch (const StructuralError& e) {
      throw InputError("flows line " + std::to_string(line_no) + ": " + e.what());
    }
    const double j = parse_double(f[1], "cell_index");
    if (j < 0 || j != static_cast<int>(j)) {
      throw InputError("flows line " + std::to_string(line_no) + ": bad cell_index");
    }
    Row row{parse_double(f[2], "t_start"), parse_double(f[3], "t_end"), parse_double(f[4], "flow")};
    if (!(row.flow >= 0.0)) {
      throw InputError("flows line " + std::to_string(line_no) + ": flow must be nonnegative");
    }
    if (!rows[p].emplace(static_cast<int>(j), row).second) {
      throw InputError("flows line " + std::to_string(line_no) + ": duplicate cell");
    }
  }
  const std::size_t n = rows.empty() ? 0 : rows.front().size();
  if (n == 0) throw InputError("flows: no cells for path '" + network.path(0).id + "'");
  const TimeGrid grid(t0, tf, static_cast<int>(n));
  std::vector<Profile> h;
  for (std::size_t p = 0; p < rows.size(); ++p) {
    const std::string& id = network.path(p).id;
    if (rows[p].size() != n || rows[p].rbegin()->first != static_cast<int>(n) - 1) {
      throw InputError("flows: path '" + id + "' must list cells 0.." + std::to_string(n - 1));
    }
    std::vector<double> v;
    for (const auto& [j, row] : rows[p]) {
      const double tol = 1e-9 * std::max(1.0, std::abs(tf));
      if (std::abs(row.t_start - grid.boundary(j)) > tol ||
          std::abs(row.t_end - grid.boundary(j + 1)) > tol) {
        throw InputError("flows: path '" + id + "' cell " + std::to_string(j) +
                         " does not match the scenario horizon split into " + std::to_string(n) +
                         " cells");
      }
      v.push_back(row.flow);
    }
    h.emplace_back(grid, std::move(v));
  }
  return h;
}

void write_costs_csv(std::ostream& out, const Network& network, const CostField& costs) {
  out << "path_id,cell_index,eff_delay,reduced_cost\n";
  for (std::size_t p = 0; p < costs.path_costs.size(); ++p) {
    const Profile& c = costs.path_costs[p];
    for (std::size_t j = 0; j < c.size(); ++j) {
      out << network.path(p).id << ',' << j << ',' << format_number(c[j]) << ','
          << format_number(reduced_cost(costs, network, p, j)) << '\n';
    }
  }
}

void write_gap_csv(std::ostream& out, const std::vector<IterationRecord>& history) {
  out << "iter,gap,max_r1,max_r2,alpha\n";
  for (const auto& r : history) {
    out << r.iter << ',' << format_number(r.gap) << ',' << format_number(r.max_r1) << ','
        << format_number(r.max_r2) << ',' << format_number(r.alpha) << '\n';
  }
}

void write_link_curves_csv(std::ostream& out, const Network& network,
                           const LoadingResult& result) {
  out << "time,link_id,cum_in,cum_out,queue\n";
  for (std::size_t a = 0; a < result.links().size(); ++a) {
    const LinkState& st = result.links()[a];
    std::set<double> times(st.cum_in.x().begin(), st.cum_in.x().end());
    for (double t : st.cum_in.x()) times.insert(t + st.free_flow_time);
    times.insert(st.cum_out.x().begin(), st.cum_out.x().end());
    for (double t : times) {
      out << format_number(t) << ',' << network.link(a).id << ',' << format_number(st.cum_in(t))
          << ',' << format_number(st.cum_out(t)) << ',' << format_number(st.queue(t)) << '\n';
    }
  }
}

void write_residuals(std::ostream& out, const Network& network, const ResidualReport& report) {
  out << "od_id,demand,theta,v,r1,r2,demand_gap,used_cells\n";
  for (std::size_t w = 0; w < report.od.size(); ++w) {
    const OdResidual& r = report.od[w];
    out << network.ods()[w].id << ',' << format_number(r.demand) << ',' << format_number(r.theta)
        << ',' << format_number(r.v) << ',' << format_number(r.r1) << ',' << format_number(r.r2)
        << ',' << format_number(r.demand_gap) << ',' << r.used_cells << '\n';
  }
}

void write_summary(std::ostream& out, const Scenario& scenario, const SolveReport& report) {
  const Network& net = scenario.instance.network;
  const SolverConfig& cfg = scenario.solver;
  out << "mode: " << (scenario.instance.mode == DemandMode::Fixed ? "fixed" : "elastic") << '\n'
      << "scheme: " << (cfg.scheme == Scheme::Projection ? "projection" : "extragradient") << '\n'
      << "cells: " << report.grid.cells() << '\n'
      << "alpha: " << format_number(cfg.alpha) << '\n'
      << "seed: " << cfg.seed << '\n'
      << "iterations: " << report.iterations << '\n'
      << "converged: " << (report.converged ? "yes" : "no") << '\n'
      << "initial_gap: " << format_number(report.initial_gap) << '\n'
      << "final_gap: " << format_number(report.final_gap) << '\n'
      << "feasible: " << (report.feasible ? "yes" : "no") << '\n'
      << "lemma2_bound: " << format_number(report.lemma2_bound) << '\n'
      << "max_cell_flow: " << format_number(report.max_cell_flow) << '\n'
      << "lemma2_ok: " << (report.lemma2_ok ? "yes" : "no") << '\n'
      << "max_r1_rel: " << format_number(report.residuals.max_r1_rel()) << '\n'
      << "max_r2_rel: " << format_number(report.residuals.max_r2_rel()) << '\n'
      << "max_demand_gap_rel: " << format_number(report.residuals.max_demand_gap_rel()) << '\n';
  for (std::size_t w = 0; w < net.ods().size(); ++w) {
    out << "od " << net.ods()[w].id << ": demand " << format_number(report.point.q[w])
        << ", price " << format_number(report.costs.theta[w])
        << (report.cap_active[w] ? ", demand cap active" : "") << '\n';
  }
}

}  // namespace edue
