#pragma once

#include <optional>
#include <span>
#include <vector>

#include "edue/error.hpp"
#include "edue/grid.hpp"
#include "edue/network.hpp"
#include "edue/piecewise_linear.hpp"

namespace edue {

/// Raised when the network cannot clear within the extended horizon.
class HorizonOverflow : public Error {
 public:
  HorizonOverflow(const std::string& what, double residual_volume)
      : Error(what), residual_volume_(residual_volume) {}
  double residual_volume() const { return residual_volume_; }

 private:
  double residual_volume_;
};

/// Point-queue link: traffic entering at e reaches the exit queue at e + tau and
/// leaves FIFO at rate at most `capacity`.
struct LinkState {
  double free_flow_time;
  double capacity;
  PiecewiseLinear cum_in;     // vehicles entered by clock time t
  PiecewiseLinear cum_out;    // vehicles exited by clock time t
  PiecewiseLinear queue_exit; // exit clock time for a vehicle reaching the queue at s

  double queue(double t) const;
  double exit_time(double entry) const { return queue_exit(entry + free_flow_time); }
};

/// Path arrival times at the grid boundaries, times[p][j] for j = 0..cells.
struct BoundaryExitTimes {
  std::vector<std::vector<double>> times;
};

class LoadingResult {
 public:
  LoadingResult(std::vector<LinkState> links, std::vector<std::vector<std::size_t>> path_links,
                std::vector<PiecewiseLinear> departures, std::vector<PiecewiseLinear> arrivals,
                double horizon_end);

  const std::vector<LinkState>& links() const { return links_; }
  std::size_t path_count() const { return path_links_.size(); }

  /// Arrival clock time tau_p(t) at the destination for departure at t.
  double exit_time(std::size_t path, double t) const;
  double delay(std::size_t path, double t) const { return exit_time(path, t) - t; }

  /// Cumulative departures and destination arrivals of one path.
  const PiecewiseLinear& departures(std::size_t path) const { return departures_.at(path); }
  const PiecewiseLinear& arrivals(std::size_t path) const { return arrivals_.at(path); }

  double departed_volume() const;
  double arrived_volume() const;
  /// Time by which every departed vehicle has reached its destination.
  double clearance_time() const;
  double horizon_end() const { return horizon_end_; }

  BoundaryExitTimes boundary_exit_times(const TimeGrid& grid) const;

 private:
  std::vector<LinkState> links_;
  std::vector<std::vector<std::size_t>> path_links_;
  std::vector<PiecewiseLinear> departures_;
  std::vector<PiecewiseLinear> arrivals_;
  double horizon_end_;
};

struct LoadOptions {
  /// Loading runs on [t0, tf + extension]. Default: departed volume over the
  /// smallest capacity plus the sum of all free-flow times.
  std::optional<double> horizon_extension;
};

/// Vickrey point-queue loading with exact piecewise-linear cumulative curves.
/// Links are processed in precedence order; if paths induce a cyclic link
/// precedence, the loader sweeps until the curves reach their fixed point,
/// which causality guarantees after finitely many sweeps.
LoadingResult load(const Network& network, std::span<const Profile> h, const TimeGrid& grid,
                   const LoadOptions& options = {});

/// Cell averages of the path delay, from the exit-time map at both cell ends.
std::vector<Profile> path_delay_profiles(const LoadingResult& result, const TimeGrid& grid);

/// Anything mapping path flows to path arrival times at the grid boundaries
/// can drive the equilibrium solver.
class DelayModel {
 public:
  virtual ~DelayModel() = default;
  virtual BoundaryExitTimes exit_times(const Network& network, std::span<const Profile> h,
                                       const TimeGrid& grid) const = 0;
};

class PointQueueModel final : public DelayModel {
 public:
  explicit PointQueueModel(LoadOptions options = {}) : options_(options) {}
  BoundaryExitTimes exit_times(const Network& network, std::span<const Profile> h,
                               const TimeGrid& grid) const override;
  const LoadOptions& options() const { return options_; }

 private:
  LoadOptions options_;
};

}  // namespace edue
