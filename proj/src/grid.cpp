#include "edue/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "edue/error.hpp"

namespace edue {

TimeGrid::TimeGrid(double t0, double tf, int cells) : t0_(t0), tf_(tf), cells_(cells) {
  if (!std::isfinite(t0) || !std::isfinite(tf) || !(tf > t0)) {
    throw DomainError("time grid requires finite t0 < tf");
  }
  if (cells < 1) throw DomainError("time grid requires at least one cell");
  width_ = (tf - t0) / cells;
}

double TimeGrid::boundary(int j) const {
  if (j >= cells_) return tf_;
  return t0_ + j * width_;
}

int TimeGrid::cell_of(double t) const {
  int j = static_cast<int>(std::floor((t - t0_) / width_));
  return std::clamp(j, 0, cells_ - 1);
}

Profile::Profile(const TimeGrid& grid) : grid_(grid), values_(grid.cells(), 0.0) {}

Profile::Profile(const TimeGrid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != static_cast<std::size_t>(grid_.cells())) {
    throw StructuralError("profile has " + std::to_string(values_.size()) +
                          " values for a grid of " + std::to_string(grid_.cells()) + " cells");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw DomainError("profile values must be finite");
  }
}

double Profile::max() const { return *std::max_element(values_.begin(), values_.end()); }

bool Profile::nonnegative() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return v >= 0.0; });
}

double integrate(const Profile& profile) {
  const auto v = profile.values();
  return std::accumulate(v.begin(), v.end(), 0.0) * profile.grid().width();
}

double essential_infimum(const Profile& profile) {
  const auto v = profile.values();
  return *std::min_element(v.begin(), v.end());
}

double inner_product(const ExtendedPoint& x, const ExtendedPoint& y) {
  if (x.h.size() != y.h.size() || x.q.size() != y.q.size()) {
    throw StructuralError("inner product of points with different path or OD counts");
  }
  double sum = 0.0;
  for (std::size_t p = 0; p < x.h.size(); ++p) {
    const Profile& a = x.h[p];
    const Profile& b = y.h[p];
    if (!(a.grid() == b.grid())) throw StructuralError("inner product across different grids");
    double cell_sum = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) cell_sum += a[j] * b[j];
    sum += cell_sum * a.grid().width();
  }
  for (std::size_t w = 0; w < x.q.size(); ++w) sum += x.q[w] * y.q[w];
  return sum;
}

std::vector<double> induced_demand(std::span<const Profile> h,
                                   std::span<const std::size_t> path_od,
                                   std::size_t od_count) {
  if (h.size() != path_od.size()) {
    throw StructuralError("path flow count does not match path-to-OD map");
  }
  std::vector<double> q(od_count, 0.0);
  for (std::size_t p = 0; p < h.size(); ++p) {
    if (path_od[p] >= od_count) throw StructuralError("path refers to unknown OD index");
    q[path_od[p]] += integrate(h[p]);
  }
  return q;
}

bool is_feasible(const ExtendedPoint& x, std::span<const std::size_t> path_od, double rel_tol) {
  for (const Profile& hp : x.h) {
    if (!hp.nonnegative()) return false;
  }
  for (double qw : x.q) {
    if (!(qw >= 0.0)) return false;
  }
  const auto induced = induced_demand(x.h, path_od, x.q.size());
  for (std::size_t w = 0; w < x.q.size(); ++w) {
    const double scale = std::max(std::abs(x.q[w]), std::abs(induced[w]));
    if (std::abs(induced[w] - x.q[w]) > rel_tol * scale) return false;
  }
  return true;
}

}  // namespace edue
