#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "edue/dnl.hpp"
#include "edue/solver.hpp"
#include "edue/verify.hpp"

namespace edue {

/// One experiment: network, horizon, penalty, demand and solver settings.
struct Scenario {
  Instance instance;
  SolverConfig solver;
};

/// Parses and validates a scenario document. Every problem is reported as an
/// InputError naming the offending field (e.g. "network.links[1].capacity").
Scenario parse_scenario(const std::string& text);
/// As parse_scenario, reading a file; JSON syntax errors carry the line number.
Scenario load_scenario(const std::filesystem::path& path);

/// Shortest round-trip decimal form of a double.
std::string format_number(double v);

/// flows.csv: path_id,cell_index,t_start,t_end,flow
void write_flows_csv(std::ostream& out, const Network& network, const ExtendedPoint& x);
/// Reads a flows.csv on the scenario horizon. The cell count comes from the
/// file; every path must list cells 0..n-1 with boundaries matching the grid.
std::vector<Profile> read_flows_csv(std::istream& in, const Network& network, double t0,
                                    double tf);

/// costs.csv: path_id,cell_index,eff_delay,reduced_cost
void write_costs_csv(std::ostream& out, const Network& network, const CostField& costs);
/// gap.csv: iter,gap,max_r1,max_r2,alpha (residuals relative, see ResidualReport)
void write_gap_csv(std::ostream& out, const std::vector<IterationRecord>& history);
/// links.csv: time,link_id,cum_in,cum_out,queue at every breakpoint of the link curves
void write_link_curves_csv(std::ostream& out, const Network& network, const LoadingResult& result);
/// Plain-text residual table, one line per OD.
void write_residuals(std::ostream& out, const Network& network, const ResidualReport& report);
/// Plain-text run summary (no timing, so reruns are byte-identical).
void write_summary(std::ostream& out, const Scenario& scenario, const SolveReport& report);

}  // namespace edue
