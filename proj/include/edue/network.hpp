#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "edue/grid.hpp"

namespace edue {

struct Link {
  std::string id;
  std::size_t from = 0;
  std::size_t to = 0;
  double free_flow_time = 0.0;  // hours
  double capacity = 0.0;        // exit capacity, vehicles/hour
};

struct OdPair {
  std::string id;
  std::size_t origin = 0;
  std::size_t destination = 0;
};

struct Path {
  std::string id;
  std::size_t od = 0;
  std::vector<std::size_t> links;
};

/// Road network with explicitly enumerated paths. Entities are referenced by
/// index after construction; the add_* methods resolve string ids and throw
/// StructuralError on unknown references. Semantic checks live in validate().
class Network {
 public:
  std::size_t add_node(const std::string& id);
  std::size_t add_link(const std::string& id, const std::string& from, const std::string& to,
                       double free_flow_time, double capacity);
  std::size_t add_od(const std::string& id, const std::string& origin,
                     const std::string& destination);
  std::size_t add_path(const std::string& id, const std::string& od,
                       const std::vector<std::string>& link_ids);

  void set_desired_arrival(double t) { desired_arrival_ = t; }
  double desired_arrival() const { return desired_arrival_; }

  const std::vector<std::string>& nodes() const { return nodes_; }
  const std::vector<Link>& links() const { return links_; }
  const std::vector<OdPair>& ods() const { return ods_; }
  const std::vector<Path>& paths() const { return paths_; }
  const Path& path(std::size_t p) const { return paths_.at(p); }
  const Link& link(std::size_t a) const { return links_.at(a); }

  /// Indices of the paths serving OD `od`, ascending.
  const std::vector<std::size_t>& paths_of(std::size_t od) const { return od_paths_.at(od); }
  /// OD index for every path, in path order.
  const std::vector<std::size_t>& path_od() const { return path_od_; }

  std::size_t node_index(const std::string& id) const;
  std::size_t link_index(const std::string& id) const;
  std::size_t od_index(const std::string& id) const;
  std::size_t path_index(const std::string& id) const;

  /// Sum of free-flow times along a path.
  double free_flow_time(std::size_t p) const;

 private:
  std::vector<std::string> nodes_;
  std::vector<Link> links_;
  std::vector<OdPair> ods_;
  std::vector<Path> paths_;
  std::vector<std::vector<std::size_t>> od_paths_;
  std::vector<std::size_t> path_od_;
  std::unordered_map<std::string, std::size_t> node_ids_, link_ids_, od_ids_, path_ids_;
  double desired_arrival_ = 0.0;
};

struct Violation {
  enum class Kind {
    NonpositiveCapacity,
    NonfiniteCapacity,
    NonpositiveFreeFlowTime,
    DisconnectedPath,
    PathEndpointMismatch,
    RepeatedLink,
    EmptyPath,
    EmptyPathSet,
    DesiredArrivalAfterHorizon,
  };
  Kind kind;
  std::string message;
};

/// Every rule broken by the network on the given horizon. Empty means valid.
std::vector<Violation> validate(const Network& network, const TimeGrid& grid);

/// Largest link exit capacity. Throws StructuralError for a network without links.
double max_exit_capacity(const Network& network);

}  // namespace edue
