#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "vplace/grid.hpp"
#include "vplace/ingestion.hpp"
#include "vplace/rng.hpp"

namespace vplace {

enum class AttractorKind { sierpinski_triangle, sierpinski_carpet, uniform_square, line_segment };

AttractorKind parse_attractor_kind(std::string_view name);
std::string_view to_string(AttractorKind kind);

/// Known correlation dimension of each kind's invariant measure.
double theoretical_d2(AttractorKind kind);

/// A point-set law with known dimension, placed at (offset_east,
/// offset_north) in planar meters with bounding diameter `scale`.
struct AttractorSpec {
  AttractorKind kind = AttractorKind::sierpinski_triangle;
  double scale = 1.0;
  double offset_east = 0.0;
  double offset_north = 0.0;

  double theoretical_d2() const { return vplace::theoretical_d2(kind); }
  /// Whether p lies in the attractor's bounding region (closed, with a
  /// small tolerance for rounding).
  bool contains(PlanarPoint p) const;
};

/// Independent draw from the attractor's invariant measure. Self-similar
/// kinds run a fresh 32-step chaos-game chain from a random start.
PlanarPoint sample_attractor(const AttractorSpec& spec, Rng& rng);

/// n points from one chaos-game chain after a 32-step burn-in (or plain
/// uniform sampling for square and line). Deterministic per seed.
std::vector<PlanarPoint> gen_points(const AttractorSpec& spec, std::size_t n, std::uint64_t seed);

/// Where a drop-off lands relative to its pickup.
struct TripLengthLaw {
  enum class Kind {
    attractor,      // independent draw from the pickup attractor
    uniform_box,    // pickup + uniform offset in [-half_width, half_width]^2, may leave the grid
    uniform_region  // uniform over the whole grid extent
  };
  Kind kind = Kind::attractor;
  double half_width = 0.0;
};

TripLengthLaw::Kind parse_trip_length_kind(std::string_view name);
std::string_view to_string(TripLengthLaw::Kind kind);

/// Trip duration, uniform on [min_seconds, max_seconds].
struct TripDurationLaw {
  double min_seconds = 300.0;
  double max_seconds = 900.0;
};

/// Describes a synthetic request stream. Pickups follow a homogeneous
/// Poisson process per cell: either the explicit `rate_map` (events per
/// second, one entry per grid cell) or `global_rate` spread over cells by
/// the attractor law. When `event_count` is set the process is conditioned
/// on exactly that many pickups.
struct StreamSpec {
  GridSpec grid;
  AttractorSpec attractor;
  std::optional<Matrix<double>> rate_map;
  double global_rate = 0.0;
  std::optional<std::int64_t> event_count;
  std::int64_t start_time = 0;
  double duration = 3600.0;
  TripLengthLaw trip_length;
  TripDurationLaw trip_duration;
  std::uint64_t seed = 0;

  /// Throws InputError on negative rates, non-positive duration or a
  /// rate map whose shape differs from the grid.
  void validate() const;
};

/// Synthetic ride requests sorted by (pickup_time, generation order).
/// Deterministic for a fixed spec.
std::vector<RequestRecord> gen_ride_stream(const StreamSpec& spec);

}  // namespace vplace
