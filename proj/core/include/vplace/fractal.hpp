#pragma once

// Correlation fractal dimension of planar point-sets: occupancy histograms,
// the log sum-of-squares curve, range detection and the slope fit.

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "vplace/grid.hpp"

namespace vplace {

struct OccupancyHistogram {
  double epsilon = 0.0;
  /// Occupied cells only, keyed by (row, col) packed into 64 bits.
  std::unordered_map<std::uint64_t, std::int64_t> counts;
  std::int64_t total_points = 0;

  /// sum_i p_i^2, accumulated in double to avoid overflow for dense sets.
  double sum_squares() const;
};

struct CurvePoint {
  double epsilon = 0.0;
  double log_epsilon = 0.0;
  double log_sum_p2 = 0.0;
};

struct CorrelationCurve {
  std::vector<CurvePoint> points;  // ascending epsilon
};

struct D2Estimate {
  double d2 = 0.0;
  double r_squared = 0.0;
  double range_lo = 0.0;
  double range_hi = 0.0;
  int n_scales = 0;
};

struct FractalRange {
  double lo = 0.0;
  double hi = 0.0;
  friend bool operator==(const FractalRange&, const FractalRange&) = default;
};

/// Grid cells are anchored at the bounding-box southwest corner of `points`.
/// Throws InputError on an empty set or epsilon <= 0.
OccupancyHistogram occupancy(std::span<const PlanarPoint> points, double epsilon);

/// One curve point per ladder entry. The ladder must be strictly ascending,
/// positive and have at least 3 entries.
CorrelationCurve correlation_sum(std::span<const PlanarPoint> points, std::span<const double> ladder);

/// `count` dyadic scales ending at `ceiling`: ceiling / 2^(count-1), ..., ceiling.
std::vector<double> dyadic_ladder(double ceiling, int count);

/// Dyadic ladder from the point-set's bounding-box side down `count` scales.
std::vector<double> default_ladder(std::span<const PlanarPoint> points, int count = 12);

/// Ordinary least squares y = a + b x. r^2 is 1 for a perfect fit
/// (including a flat line).
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// Slope of the curve over points with epsilon in [range_lo, range_hi].
/// Throws RangeError with fewer than 3 in-range points.
D2Estimate fit_d2(const CorrelationCurve& curve, double range_lo, double range_hi);

/// Longest contiguous run of curve points whose fit has r^2 >= min_r_squared
/// and at least min_scales points; ties go to the wider span in meters.
std::optional<FractalRange> detect_fractal_range(const CorrelationCurve& curve, double min_r_squared = 0.98,
                                                 int min_scales = 4);

/// Smallest ladder scale where sum p_i^2 >= factor * n_points. Below it the
/// self-occupancy term n dominates and flattens the curve. nullopt if no
/// scale qualifies.
std::optional<double> resolution_floor(const CorrelationCurve& curve, std::int64_t n_points, double factor = 10.0);

struct D2Options {
  int scales = 12;                   // dyadic ladder length below the bounding-box side
  double floor_factor = 10.0;        // see resolution_floor
  double upper_fraction = 0.25;      // fit no coarser than this fraction of the side
  std::optional<FractalRange> range; // explicit range overrides the rule above
};

/// Builds the default ladder, then fits over `options.range` or, when
/// absent, over [resolution floor, upper_fraction * side].
D2Estimate estimate_d2(std::span<const PlanarPoint> points, const D2Options& options = {});

enum class D2Flag { ok, too_few_points, degenerate };

struct SnapshotD2 {
  std::int64_t snapshot = 0;
  D2Estimate estimate;
  D2Flag flag = D2Flag::ok;
};

struct D2Summary {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  std::int64_t fitted = 0;   // unflagged snapshots
  std::int64_t flagged = 0;
};

struct D2Series {
  std::vector<SnapshotD2> per_snapshot;
  D2Summary summary;
};

/// Pickup locations of one snapshot: exact coordinates when the snapshot
/// carries events, otherwise cell centers repeated by multiplicity.
std::vector<PlanarPoint> pickup_points(const Snapshot& snapshot, const GridSpec& grid);

/// Fits D2 per snapshot over the fixed range. A snapshot is flagged when it
/// has fewer than 2 pickups or fewer than 3 in-range scales where some cell
/// holds more than one point; flagged snapshots stay out of the summary.
D2Series weekly_d2_series(const SnapshotSeries& series, std::span<const double> ladder, FractalRange range);

/// Mean number of points inside the axis-aligned square of half-width
/// `radius` centred on each point (the point itself included). Uses at most
/// `max_centers` evenly strided centers.
double mean_neighbor_count(std::span<const PlanarPoint> points, double radius, std::size_t max_centers = 4000);

}  // namespace vplace
