#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace edue {

/// Uniform partition of [t0, tf] into n cells of identical width.
class TimeGrid {
 public:
  TimeGrid(double t0, double tf, int cells);

  double t0() const { return t0_; }
  double tf() const { return tf_; }
  int cells() const { return cells_; }
  double width() const { return width_; }

  /// Boundary t^j = t0 + j * width, j = 0..cells. Boundary `cells` is tf exactly.
  double boundary(int j) const;
  /// Index of the cell containing t (right-closed at tf).
  int cell_of(double t) const;

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) {
    return a.t0_ == b.t0_ && a.tf_ == b.tf_ && a.cells_ == b.cells_;
  }

 private:
  double t0_;
  double tf_;
  int cells_;
  double width_;
};

/// Step function on a TimeGrid, one value per cell.
class Profile {
 public:
  explicit Profile(const TimeGrid& grid);  // all zeros
  Profile(const TimeGrid& grid, std::vector<double> values);

  const TimeGrid& grid() const { return grid_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t j) const { return values_[j]; }
  std::size_t size() const { return values_.size(); }

  double max() const;
  bool nonnegative() const;

 private:
  TimeGrid grid_;
  std::vector<double> values_;
};

/// Exact integral of a step function: sum of cell values times the cell width.
double integrate(const Profile& profile);

/// For step functions the essential infimum is the smallest cell value.
double essential_infimum(const Profile& profile);

/// Element (h, Q) of the product space of path-flow profiles and OD demands.
struct ExtendedPoint {
  std::vector<Profile> h;
  std::vector<double> q;
};

/// <X, Y> = sum_p \int xi_p eta_p dt + sum_w u_w v_w, integrals taken cell-exactly.
/// Throws StructuralError if the two points do not share grid, path count and OD count.
double inner_product(const ExtendedPoint& x, const ExtendedPoint& y);

/// Demand induced by path flows: Q_w = sum_{p in P_w} \int h_p. `path_od[p]` is the
/// OD index of path p.
std::vector<double> induced_demand(std::span<const Profile> h,
                                   std::span<const std::size_t> path_od,
                                   std::size_t od_count);

/// Membership in the feasible set: h >= 0, Q >= 0 and conservation within
/// `rel_tol` relative to the larger of Q_w and the integrated path flows.
bool is_feasible(const ExtendedPoint& x, std::span<const std::size_t> path_od,
                 double rel_tol = 1e-9);

}  // namespace edue
