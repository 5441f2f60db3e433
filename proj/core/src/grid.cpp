#include "vplace/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace vplace {

namespace {

constexpr double kEarthRadiusMeters = 6371008.8;
constexpr double kMetersPerDegree = kEarthRadiusMeters * std::numbers::pi / 180.0;

double meters_per_degree_lon(const GridSpec& grid) {
  return kMetersPerDegree * std::cos(grid.ref_lat * std::numbers::pi / 180.0);
}

}  // namespace

void GridSpec::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InputError("grid epsilon must be > 0");
  if (rows < 1 || cols < 1) throw InputError("grid rows and cols must be >= 1");
  if (!std::isfinite(origin_lat) || !std::isfinite(origin_lon) || !std::isfinite(ref_lat))
    throw InputError("grid origin must be finite");
  if (std::abs(ref_lat) >= 90.0) throw InputError("grid ref_lat must lie strictly inside (-90, 90)");
}

void SnapshotSeries::validate() const {
  grid.validate();
  if (!(tau > 0.0)) throw InputError("series tau must be > 0");
  for (std::size_t k = 0; k < snapshots.size(); ++k) {
    const Snapshot& s = snapshots[k];
    if (s.index != snapshots.front().index + static_cast<std::int64_t>(k))
      throw InputError("snapshot indices must be contiguous and ascending");
    for (const CountMatrix* m : {&s.dropoffs, &s.pickups}) {
      if (m->rows() != grid.rows || m->cols() != grid.cols)
        throw InputError("snapshot " + std::to_string(s.index) + " shape differs from grid");
      for (auto v : m->flat())
        if (v < 0) throw InputError("snapshot " + std::to_string(s.index) + " has negative count");
    }
  }
}

PlanarPoint project_to_plane(double lat, double lon, const GridSpec& grid) {
  return {(lon - grid.origin_lon) * meters_per_degree_lon(grid),
          (lat - grid.origin_lat) * kMetersPerDegree};
}

std::pair<double, double> unproject(PlanarPoint p, const GridSpec& grid) {
  return {grid.origin_lat + p.north / kMetersPerDegree,
          grid.origin_lon + p.east / meters_per_degree_lon(grid)};
}

std::optional<CellIndex> cell_of(PlanarPoint p, const GridSpec& grid) {
  const double r = std::floor(p.north / grid.epsilon);
  const double c = std::floor(p.east / grid.epsilon);
  if (r < 0.0 || c < 0.0 || r >= grid.rows || c >= grid.cols) return std::nullopt;
  return CellIndex{static_cast<int>(r), static_cast<int>(c)};
}

std::optional<CellIndex> project_to_cell(double lat, double lon, const GridSpec& grid) {
  if (!std::isfinite(lat) || !std::isfinite(lon)) throw InputError("non-finite coordinate");
  return cell_of(project_to_plane(lat, lon, grid), grid);
}

int neighborhood_side(double epsilon_prime, double epsilon) {
  if (!(epsilon > 0.0)) throw InputError("epsilon must be > 0");
  if (!(epsilon_prime >= epsilon)) throw InputError("epsilon_prime must be >= epsilon");
  return static_cast<int>(std::lround(2.0 * epsilon_prime / epsilon));
}

std::pair<int, int> neighborhood_offsets(int side) noexcept {
  const int lo = -(side - 1) / 2;
  return {lo, lo + side - 1};
}

Neighborhood neighborhood_for_side(CellIndex center, int side, const GridSpec& grid) {
  if (!grid.contains(center)) throw InputError("neighborhood center outside grid");
  if (side < 1) throw InputError("neighborhood side must be >= 1");
  const auto [lo, hi] = neighborhood_offsets(side);
  Neighborhood nb{center, side, {}};
  const int r0 = std::max(0, center.row + lo);
  const int r1 = std::min(grid.rows - 1, center.row + hi);
  const int c0 = std::max(0, center.col + lo);
  const int c1 = std::min(grid.cols - 1, center.col + hi);
  nb.cells.reserve(static_cast<std::size_t>(r1 - r0 + 1) * static_cast<std::size_t>(c1 - c0 + 1));
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c) nb.cells.push_back({r, c});
  return nb;
}

Neighborhood neighborhood(CellIndex center, double epsilon_prime, const GridSpec& grid) {
  return neighborhood_for_side(center, neighborhood_side(epsilon_prime, grid.epsilon), grid);
}

bool in_neighborhood(CellIndex center, CellIndex cell, int side, const GridSpec& grid) noexcept {
  if (!grid.contains(cell) || !grid.contains(center)) return false;
  const auto [lo, hi] = neighborhood_offsets(side);
  const int dr = cell.row - center.row;
  const int dc = cell.col - center.col;
  return dr >= lo && dr <= hi && dc >= lo && dc <= hi;
}

std::int64_t matched_pickups(const CountMatrix& pickups, const CountMatrix& placements) {
  if (!pickups.same_shape(placements)) throw InputError("pickup and placement shapes differ");
  std::int64_t total = 0;
  auto p = pickups.flat();
  auto g = placements.flat();
  for (std::size_t k = 0; k < p.size(); ++k) total += std::min(p[k], g[k]);
  return total;
}

RewardResult reward(const CountMatrix& pickups, const PlacementMatrix& placements, std::int64_t n) {
  for (auto v : placements.entries.flat())
    if (v < 0) throw InputError("negative placement entry");
  for (auto v : pickups.flat())
    if (v < 0) throw InputError("negative pickup entry");
  const std::int64_t matched = matched_pickups(pickups, placements.entries);
  const std::int64_t placed = placements.total();
  if (n != placed)
    throw InputError("n (" + std::to_string(n) + ") differs from placement total (" +
                     std::to_string(placed) + ")");
  if (n == 0) return {0.0, matched, 0, true};
  return {static_cast<double>(matched) / static_cast<double>(n), matched, n, false};
}

}  // namespace vplace
