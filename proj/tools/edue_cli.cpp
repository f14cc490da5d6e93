// edue: command-line front end for the E-DUE solver.
//
//   edue solve  scenario.json --out DIR
//   edue load   scenario.json --flows flows.csv --out DIR
//   edue check  scenario.json --flows flows.csv [--out DIR]
//   edue oracle scenario.json --out DIR
//
// Exit codes: 0 converged / verified, 2 ran but did not converge (outputs
// still written), 1 bad input.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "edue/error.hpp"
#include "edue/oracle.hpp"
#include "edue/scenario.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kNotConverged = 2;

struct Overrides {
  std::optional<int> n;
  std::optional<double> alpha;
  std::optional<int> max_iters;
  std::optional<double> gap_tol;
  std::optional<unsigned> seed;

  void apply(edue::SolverConfig& cfg) const {
    if (n) {
      if (*n < 1) throw edue::InputError("--n: must be at least 1");
      cfg.cells = *n;
    }
    if (alpha) {
      if (!(*alpha > 0.0)) throw edue::InputError("--alpha: must be positive");
      cfg.alpha = *alpha;
    }
    if (max_iters) {
      if (*max_iters < 1) throw edue::InputError("--max-iters: must be at least 1");
      cfg.max_iters = *max_iters;
    }
    if (gap_tol) {
      if (!(*gap_tol >= 0.0)) throw edue::InputError("--gap-tol: must be nonnegative");
      cfg.gap_tol = *gap_tol;
    }
    if (seed) cfg.seed = *seed;
  }
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--n", o.n, "Number of time cells");
  cmd->add_option("--alpha", o.alpha, "Projection step size");
  cmd->add_option("--max-iters", o.max_iters, "Iteration budget");
  cmd->add_option("--gap-tol", o.gap_tol, "Absolute gap tolerance");
  cmd->add_option("--seed", o.seed, "Recorded in the summary; nothing is random");
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw edue::InputError(dir.string() + ": cannot create output directory");
}

template <typename Write>
void write_file(const fs::path& path, Write&& write) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw edue::InputError(path.string() + ": cannot open for writing");
  write(out);
  if (!out) throw edue::InputError(path.string() + ": write failed");
}

std::vector<edue::Profile> read_flows(const fs::path& path, const edue::Scenario& sc) {
  std::ifstream in(path);
  if (!in) throw edue::InputError(path.string() + ": cannot open flow file");
  try {
    return edue::read_flows_csv(in, sc.instance.network, sc.instance.t0, sc.instance.tf);
  } catch (const edue::InputError& e) {
    throw edue::InputError(path.string() + ": " + e.what());
  }
}

int run_solve(const fs::path& scenario, const fs::path& out_dir, const Overrides& o) {
  edue::Scenario sc = edue::load_scenario(scenario);
  o.apply(sc.solver);
  ensure_dir(out_dir);

  edue::SolveReport report;
  try {
    report = edue::solve(sc.instance, sc.solver);
  } catch (const edue::SolveAborted& e) {
    write_file(out_dir / "flows.csv", [&](std::ostream& os) {
      edue::write_flows_csv(os, sc.instance.network, e.last_iterate());
    });
    write_file(out_dir / "summary.txt", [&](std::ostream& os) {
      os << "aborted: " << e.what() << '\n';
    });
    std::cerr << "solve aborted: " << e.what() << '\n';
    return kNotConverged;
  }

  const edue::Network& net = sc.instance.network;
  write_file(out_dir / "flows.csv",
             [&](std::ostream& os) { edue::write_flows_csv(os, net, report.point); });
  write_file(out_dir / "costs.csv",
             [&](std::ostream& os) { edue::write_costs_csv(os, net, report.costs); });
  write_file(out_dir / "gap.csv",
             [&](std::ostream& os) { edue::write_gap_csv(os, report.history); });
  write_file(out_dir / "residuals.txt",
             [&](std::ostream& os) { edue::write_residuals(os, net, report.residuals); });
  write_file(out_dir / "summary.txt",
             [&](std::ostream& os) { edue::write_summary(os, sc, report); });

  edue::write_summary(std::cout, sc, report);
  std::cout << "wall_seconds: " << report.wall_seconds << '\n';
  return report.converged ? kOk : kNotConverged;
}

int run_load(const fs::path& scenario, const fs::path& flows, const fs::path& out_dir) {
  const edue::Scenario sc = edue::load_scenario(scenario);
  const auto h = read_flows(flows, sc);
  const edue::TimeGrid grid = h.front().grid();
  ensure_dir(out_dir);
  const auto model = edue::default_delay_model(sc.instance);
  edue::LoadOptions options;
  options.horizon_extension = model.options().horizon_extension;
  try {
    const auto result = edue::load(sc.instance.network, h, grid, options);
    write_file(out_dir / "links.csv", [&](std::ostream& os) {
      edue::write_link_curves_csv(os, sc.instance.network, result);
    });
  } catch (const edue::HorizonOverflow& e) {
    std::cerr << "load: " << e.what() << '\n';
    return kNotConverged;
  }
  return kOk;
}

int run_check(const fs::path& scenario, const fs::path& flows, const std::optional<fs::path>& out_dir,
              double tol) {
  const edue::Scenario sc = edue::load_scenario(scenario);
  const auto x = edue::make_point(sc.instance, read_flows(flows, sc));
  const edue::Network& net = sc.instance.network;
  if (!edue::is_feasible(x, net.path_od())) {
    throw edue::InputError(flows.string() + ": flows exceed the demand bounds");
  }
  edue::CostField costs;
  try {
    costs = edue::f_map(sc.instance, x);
  } catch (const edue::HorizonOverflow& e) {
    std::cerr << "check: " << e.what() << '\n';
    return kNotConverged;
  }
  const auto report = edue::due_residuals(net, x, costs, sc.solver.flow_threshold);
  if (out_dir) {
    ensure_dir(*out_dir);
    write_file(*out_dir / "residuals.txt",
               [&](std::ostream& os) { edue::write_residuals(os, net, report); });
  }
  edue::write_residuals(std::cout, net, report);
  const bool ok = report.is_equilibrium(tol) && report.max_demand_gap_rel() <= 10.0 * tol;
  std::cout << "gap: " << edue::format_number(edue::compute_gap(sc.instance, x, costs)) << '\n'
            << "equilibrium: " << (ok ? "yes" : "no") << " (tol " << tol << ")\n";
  return ok ? kOk : kNotConverged;
}

int run_oracle(const fs::path& scenario, const fs::path& out_dir, const Overrides& o) {
  edue::Scenario sc = edue::load_scenario(scenario);
  o.apply(sc.solver);
  const edue::TimeGrid grid = sc.instance.grid(sc.solver.cells);
  if (!edue::is_tiny(sc.instance, grid)) {
    throw edue::InputError(
        "oracle: instance too large (at most 2 OD pairs, 3 paths, 6 cells, |P|*n+|W| <= 20)");
  }
  const auto result = edue::brute_force_equilibrium(sc.instance, grid);
  ensure_dir(out_dir);
  write_file(out_dir / "flows.csv", [&](std::ostream& os) {
    edue::write_flows_csv(os, sc.instance.network, result.point);
  });
  std::cout << "gap: " << edue::format_number(result.gap) << '\n'
            << "scale: " << edue::format_number(result.scale) << '\n'
            << "certified: " << (result.certified ? "yes" : "no") << '\n';
  for (std::size_t w = 0; w < result.point.q.size(); ++w) {
    std::cout << "od " << sc.instance.network.ods()[w].id
              << ": demand " << edue::format_number(result.point.q[w]) << '\n';
  }
  return result.certified ? kOk : kNotConverged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Elastic-demand dynamic user equilibrium solver"};
  app.require_subcommand(1);

  fs::path scenario, out_dir, flows;
  std::optional<fs::path> check_out;
  double tol = 1e-4;
  Overrides solve_o, oracle_o;

  auto* solve = app.add_subcommand("solve", "Solve and write flows, costs, gap history, summary");
  solve->add_option("scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  solve->add_option("--out", out_dir, "Output directory")->required();
  add_overrides(solve, solve_o);

  auto* load = app.add_subcommand("load", "Load a flow file and dump link cumulative curves");
  load->add_option("scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  load->add_option("--flows", flows, "flows.csv")->required()->check(CLI::ExistingFile);
  load->add_option("--out", out_dir, "Output directory")->required();

  auto* check = app.add_subcommand("check", "Recompute equilibrium residuals of a flow file");
  check->add_option("scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  check->add_option("--flows", flows, "flows.csv")->required()->check(CLI::ExistingFile);
  check->add_option("--out", check_out, "Also write residuals.txt here");
  check->add_option("--tol", tol, "Relative residual tolerance")->capture_default_str();

  auto* oracle = app.add_subcommand("oracle", "Brute-force equilibrium of a tiny instance");
  oracle->add_option("scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  oracle->add_option("--out", out_dir, "Output directory")->required();
  add_overrides(oracle, oracle_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*solve) return run_solve(scenario, out_dir, solve_o);
    if (*load) return run_load(scenario, flows, out_dir);
    if (*check) return run_check(scenario, flows, check_out, tol);
    if (*oracle) return run_oracle(scenario, out_dir, oracle_o);
  } catch (const edue::Error& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}
