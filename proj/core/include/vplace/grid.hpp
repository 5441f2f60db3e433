#pragma once

#include <compare>
#include <cstdint>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "vplace/error.hpp"

namespace vplace {

struct CellIndex {
  int row = 0;
  int col = 0;

  friend auto operator<=>(const CellIndex&, const CellIndex&) = default;
};

/// Geometry of the discretized surface. Rows grow northward from the
/// southwest origin, columns grow eastward.
struct GridSpec {
  double epsilon = 100.0;  // cell side, meters
  int rows = 1;
  int cols = 1;
  double origin_lat = 0.0;
  double origin_lon = 0.0;
  double ref_lat = 0.0;

  /// Throws InputError unless epsilon > 0 and the extents are positive.
  void validate() const;

  bool contains(CellIndex c) const noexcept {
    return c.row >= 0 && c.row < rows && c.col >= 0 && c.col < cols;
  }
  std::size_t cell_count() const noexcept {
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  }
  std::size_t flat(CellIndex c) const noexcept {
    return static_cast<std::size_t>(c.row) * static_cast<std::size_t>(cols) +
           static_cast<std::size_t>(c.col);
  }
  CellIndex unflat(std::size_t k) const noexcept {
    return {static_cast<int>(k / static_cast<std::size_t>(cols)),
            static_cast<int>(k % static_cast<std::size_t>(cols))};
  }
};

/// Dense row-major matrix.
template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, T fill = T{})
      : rows_(rows),
        cols_(cols),
        data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), fill) {
    if (rows < 0 || cols < 0) throw InputError("matrix extents must be non-negative");
  }

  /// Builds from nested rows; all rows must have equal length.
  static Matrix from_rows(const std::vector<std::vector<T>>& rows) {
    const int r = static_cast<int>(rows.size());
    const int c = r == 0 ? 0 : static_cast<int>(rows.front().size());
    Matrix m(r, c);
    for (int i = 0; i < r; ++i) {
      if (static_cast<int>(rows[i].size()) != c) throw InputError("ragged matrix rows");
      for (int j = 0; j < c; ++j) m(i, j) = rows[i][j];
    }
    return m;
  }

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(int i, int j) noexcept { return data_[index(i, j)]; }
  const T& operator()(int i, int j) const noexcept { return data_[index(i, j)]; }
  T& operator[](CellIndex c) noexcept { return data_[index(c.row, c.col)]; }
  const T& operator[](CellIndex c) const noexcept { return data_[index(c.row, c.col)]; }

  std::span<T> flat() noexcept { return data_; }
  std::span<const T> flat() const noexcept { return data_; }

  T sum() const { return std::accumulate(data_.begin(), data_.end(), T{}); }

  bool same_shape(const Matrix& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t index(int i, int j) const noexcept {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(cols_) +
           static_cast<std::size_t>(j);
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

using CountMatrix = Matrix<std::int64_t>;

enum class EventKind : std::uint8_t { pickup, dropoff };

/// One located, timestamped event kept alongside the count matrices.
/// `time` is seconds since the series start; east/north are planar meters
/// from the grid origin.
struct EventStamp {
  std::uint32_t cell = 0;  // GridSpec::flat index
  EventKind kind = EventKind::pickup;
  double time = 0.0;
  double east = 0.0;
  double north = 0.0;
};

struct Snapshot {
  std::int64_t index = 0;  // contiguous ordinal within the series
  std::int64_t slot = 0;   // floor((t - start_time) / tau), skips excluded slots
  CountMatrix dropoffs;
  CountMatrix pickups;
  /// Optional per-event detail; empty for count-only snapshots.
  std::vector<EventStamp> events;
};

struct SnapshotSeries {
  GridSpec grid;
  double tau = 180.0;
  std::int64_t start_time = 0;
  std::vector<Snapshot> snapshots;
  std::set<int> excluded_hours;

  /// Checks tau, matrix shapes, non-negative entries and contiguous indices.
  void validate() const;
};

/// Gamma_t: vehicles placed per cell for one snapshot.
struct PlacementMatrix {
  CountMatrix entries;

  std::int64_t total() const { return entries.sum(); }
  friend bool operator==(const PlacementMatrix&, const PlacementMatrix&) = default;
};

struct Neighborhood {
  CellIndex center;
  int side = 1;
  std::vector<CellIndex> cells;  // clipped to the grid, row-major order
};

struct PlanarPoint {
  double east = 0.0;
  double north = 0.0;

  friend bool operator==(const PlanarPoint&, const PlanarPoint&) = default;
};

/// Local equirectangular projection relative to the grid origin.
PlanarPoint project_to_plane(double lat, double lon, const GridSpec& grid);
/// Inverse of project_to_plane; returns {lat, lon}.
std::pair<double, double> unproject(PlanarPoint p, const GridSpec& grid);

/// Maps a planar point to its cell; nullopt when it lands outside the grid.
std::optional<CellIndex> cell_of(PlanarPoint p, const GridSpec& grid);

/// Projects lat/lon and returns its cell, or nullopt when outside the grid.
/// Throws InputError on non-finite coordinates.
std::optional<CellIndex> project_to_cell(double lat, double lon, const GridSpec& grid);

/// Side length c = round(2 * epsilon_prime / epsilon). Requires
/// epsilon_prime >= epsilon.
int neighborhood_side(double epsilon_prime, double epsilon);

/// Inclusive offset range [lo, hi] of a side-c window along one axis. Odd c
/// is symmetric; even c spans [-c/2 + 1, c/2].
std::pair<int, int> neighborhood_offsets(int side) noexcept;

/// The c x c square around `center`, clipped at the grid edges.
Neighborhood neighborhood(CellIndex center, double epsilon_prime, const GridSpec& grid);

/// Same as above, for a precomputed side.
Neighborhood neighborhood_for_side(CellIndex center, int side, const GridSpec& grid);

/// True when `cell` lies in the clipped side-c window around `center`.
bool in_neighborhood(CellIndex center, CellIndex cell, int side, const GridSpec& grid) noexcept;

struct RewardResult {
  double value = 0.0;
  std::int64_t matched = 0;  // sum of min(P, Gamma)
  std::int64_t placed = 0;   // n_t
  bool empty = false;        // n_t == 0, value reported as 0
};

/// R_t = sum(min(P, Gamma)) / n. `n` must equal the placement total.
RewardResult reward(const CountMatrix& pickups, const PlacementMatrix& placements, std::int64_t n);

/// Sum over cells of min(P, Gamma); no normalisation.
std::int64_t matched_pickups(const CountMatrix& pickups, const CountMatrix& placements);

}  // namespace vplace
