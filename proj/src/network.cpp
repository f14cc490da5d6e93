#include "edue/network.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "edue/error.hpp"

namespace edue {

namespace {

std::size_t lookup(const std::unordered_map<std::string, std::size_t>& ids, const std::string& id,
                   const char* what) {
  auto it = ids.find(id);
  if (it == ids.end()) throw StructuralError(std::string("unknown ") + what + " '" + id + "'");
  return it->second;
}

template <typename Map>
void insert_unique(Map& ids, const std::string& id, std::size_t index, const char* what) {
  if (!ids.emplace(id, index).second) {
    throw StructuralError(std::string("duplicate ") + what + " id '" + id + "'");
  }
}

}  // namespace

std::size_t Network::add_node(const std::string& id) {
  insert_unique(node_ids_, id, nodes_.size(), "node");
  nodes_.push_back(id);
  return nodes_.size() - 1;
}

std::size_t Network::add_link(const std::string& id, const std::string& from,
                              const std::string& to, double free_flow_time, double capacity) {
  Link link{id, lookup(node_ids_, from, "node"), lookup(node_ids_, to, "node"), free_flow_time,
            capacity};
  insert_unique(link_ids_, id, links_.size(), "link");
  links_.push_back(std::move(link));
  return links_.size() - 1;
}

std::size_t Network::add_od(const std::string& id, const std::string& origin,
                            const std::string& destination) {
  OdPair od{id, lookup(node_ids_, origin, "node"), lookup(node_ids_, destination, "node")};
  insert_unique(od_ids_, id, ods_.size(), "OD pair");
  ods_.push_back(std::move(od));
  od_paths_.emplace_back();
  return ods_.size() - 1;
}

std::size_t Network::add_path(const std::string& id, const std::string& od,
                              const std::vector<std::string>& link_ids) {
  Path path{id, lookup(od_ids_, od, "OD pair"), {}};
  for (const auto& l : link_ids) path.links.push_back(lookup(link_ids_, l, "link"));
  insert_unique(path_ids_, id, paths_.size(), "path");
  od_paths_[path.od].push_back(paths_.size());
  path_od_.push_back(path.od);
  paths_.push_back(std::move(path));
  return paths_.size() - 1;
}

std::size_t Network::node_index(const std::string& id) const { return lookup(node_ids_, id, "node"); }
std::size_t Network::link_index(const std::string& id) const { return lookup(link_ids_, id, "link"); }
std::size_t Network::od_index(const std::string& id) const { return lookup(od_ids_, id, "OD pair"); }
std::size_t Network::path_index(const std::string& id) const { return lookup(path_ids_, id, "path"); }

double Network::free_flow_time(std::size_t p) const {
  double sum = 0.0;
  for (std::size_t a : paths_.at(p).links) sum += links_[a].free_flow_time;
  return sum;
}

std::vector<Violation> validate(const Network& network, const TimeGrid& grid) {
  using Kind = Violation::Kind;
  std::vector<Violation> out;
  for (const Link& link : network.links()) {
    if (!std::isfinite(link.capacity)) {
      out.push_back({Kind::NonfiniteCapacity, "link '" + link.id + "': capacity must be finite"});
    } else if (!(link.capacity > 0.0)) {
      out.push_back({Kind::NonpositiveCapacity, "link '" + link.id + "': nonpositive capacity"});
    }
    if (!(link.free_flow_time > 0.0) || !std::isfinite(link.free_flow_time)) {
      out.push_back({Kind::NonpositiveFreeFlowTime,
                     "link '" + link.id + "': free-flow time must be positive and finite"});
    }
  }
  for (const Path& path : network.paths()) {
    if (path.links.empty()) {
      out.push_back({Kind::EmptyPath, "path '" + path.id + "': no links"});
      continue;
    }
    const OdPair& od = network.ods()[path.od];
    const Link& first = network.link(path.links.front());
    const Link& last = network.link(path.links.back());
    if (first.from != od.origin || last.to != od.destination) {
      out.push_back({Kind::PathEndpointMismatch,
                     "path '" + path.id + "': does not connect the endpoints of OD '" + od.id + "'"});
    }
    for (std::size_t k = 1; k < path.links.size(); ++k) {
      if (network.link(path.links[k - 1]).to != network.link(path.links[k]).from) {
        out.push_back({Kind::DisconnectedPath, "path '" + path.id + "': disconnected path at link '" +
                                                   network.link(path.links[k]).id + "'"});
      }
    }
    std::unordered_set<std::size_t> seen;
    for (std::size_t a : path.links) {
      if (!seen.insert(a).second) {
        out.push_back({Kind::RepeatedLink,
                       "path '" + path.id + "': repeated link '" + network.link(a).id + "'"});
      }
    }
  }
  for (std::size_t w = 0; w < network.ods().size(); ++w) {
    if (network.paths_of(w).empty()) {
      out.push_back({Kind::EmptyPathSet, "OD '" + network.ods()[w].id + "': empty path set"});
    }
  }
  if (!(network.desired_arrival() < grid.tf())) {
    out.push_back({Kind::DesiredArrivalAfterHorizon, "T_A must precede t_f"});
  }
  return out;
}

double max_exit_capacity(const Network& network) {
  const auto& links = network.links();
  if (links.empty()) throw StructuralError("network has no links");
  return std::max_element(links.begin(), links.end(), [](const Link& a, const Link& b) {
           return a.capacity < b.capacity;
         })->capacity;
}

}  // namespace edue
