#include "vplace/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <tuple>

namespace vplace {

namespace {

constexpr int kChainSteps = 32;
constexpr double kSqrt3Over2 = 0.86602540378443864676;
// Direction of the line-segment attractor (30 degrees above east).
constexpr double kLineCos = kSqrt3Over2;
constexpr double kLineSin = 0.5;

PlanarPoint unit_contraction(AttractorKind kind, PlanarPoint p, Rng& rng) {
  switch (kind) {
    case AttractorKind::sierpinski_triangle: {
      static constexpr std::array<PlanarPoint, 3> vertices{{{0.0, 0.0}, {1.0, 0.0}, {0.5, kSqrt3Over2}}};
      const auto& v = vertices[rng.below(3)];
      return {(p.east + v.east) / 2.0, (p.north + v.north) / 2.0};
    }
    case AttractorKind::sierpinski_carpet: {
      auto k = rng.below(8);
      if (k >= 4) ++k;  // skip the centre square
      const double i = static_cast<double>(k % 3);
      const double j = static_cast<double>(k / 3);
      return {(p.east + i) / 3.0, (p.north + j) / 3.0};
    }
    default:
      return p;
  }
}

bool self_similar(AttractorKind kind) {
  return kind == AttractorKind::sierpinski_triangle || kind == AttractorKind::sierpinski_carpet;
}

// Point of the unit-scale attractor.
PlanarPoint sample_unit(AttractorKind kind, Rng& rng) {
  switch (kind) {
    case AttractorKind::uniform_square:
      return {rng.uniform(), rng.uniform()};
    case AttractorKind::line_segment: {
      const double t = rng.uniform();
      return {t * kLineCos, t * kLineSin};
    }
    default: {
      PlanarPoint p{rng.uniform(), rng.uniform()};
      for (int k = 0; k < kChainSteps; ++k) p = unit_contraction(kind, p, rng);
      return p;
    }
  }
}

PlanarPoint place(const AttractorSpec& spec, PlanarPoint unit) {
  return {spec.offset_east + spec.scale * unit.east, spec.offset_north + spec.scale * unit.north};
}

}  // namespace

AttractorKind parse_attractor_kind(std::string_view name) {
  if (name == "sierpinski_triangle") return AttractorKind::sierpinski_triangle;
  if (name == "sierpinski_carpet") return AttractorKind::sierpinski_carpet;
  if (name == "uniform_square") return AttractorKind::uniform_square;
  if (name == "line_segment") return AttractorKind::line_segment;
  throw InputError("unknown attractor kind '" + std::string(name) + "'");
}

std::string_view to_string(AttractorKind kind) {
  switch (kind) {
    case AttractorKind::sierpinski_triangle: return "sierpinski_triangle";
    case AttractorKind::sierpinski_carpet: return "sierpinski_carpet";
    case AttractorKind::uniform_square: return "uniform_square";
    case AttractorKind::line_segment: return "line_segment";
  }
  return "unknown";
}

double theoretical_d2(AttractorKind kind) {
  switch (kind) {
    case AttractorKind::sierpinski_triangle: return std::log(3.0) / std::log(2.0);
    case AttractorKind::sierpinski_carpet: return std::log(8.0) / std::log(3.0);
    case AttractorKind::uniform_square: return 2.0;
    case AttractorKind::line_segment: return 1.0;
  }
  return 0.0;
}

bool AttractorSpec::contains(PlanarPoint p) const {
  const double tol = 1e-9 * std::max(1.0, scale);
  const double u = p.east - offset_east;
  const double v = p.north - offset_north;
  switch (kind) {
    case AttractorKind::sierpinski_triangle: {
      // inside the outer triangle: v >= 0, below both slanted edges
      const double h = scale * kSqrt3Over2;
      return v >= -tol && v <= h + tol && v <= 2.0 * kSqrt3Over2 * u + tol &&
             v <= 2.0 * kSqrt3Over2 * (scale - u) + tol;
    }
    case AttractorKind::sierpinski_carpet:
    case AttractorKind::uniform_square:
      return u >= -tol && u <= scale + tol && v >= -tol && v <= scale + tol;
    case AttractorKind::line_segment: {
      const double along = u * kLineCos + v * kLineSin;
      const double across = -u * kLineSin + v * kLineCos;
      return std::abs(across) <= tol && along >= -tol && along <= scale + tol;
    }
  }
  return false;
}

PlanarPoint sample_attractor(const AttractorSpec& spec, Rng& rng) { return place(spec, sample_unit(spec.kind, rng)); }

std::vector<PlanarPoint> gen_points(const AttractorSpec& spec, std::size_t n, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "gen_points"));
  std::vector<PlanarPoint> out;
  out.reserve(n);
  if (!self_similar(spec.kind)) {
    for (std::size_t k = 0; k < n; ++k) out.push_back(sample_attractor(spec, rng));
    return out;
  }
  PlanarPoint p{rng.uniform(), rng.uniform()};
  for (int k = 0; k < kChainSteps; ++k) p = unit_contraction(spec.kind, p, rng);
  for (std::size_t k = 0; k < n; ++k) {
    p = unit_contraction(spec.kind, p, rng);
    out.push_back(place(spec, p));
  }
  return out;
}

TripLengthLaw::Kind parse_trip_length_kind(std::string_view name) {
  if (name == "attractor") return TripLengthLaw::Kind::attractor;
  if (name == "uniform_box") return TripLengthLaw::Kind::uniform_box;
  if (name == "uniform_region") return TripLengthLaw::Kind::uniform_region;
  throw InputError("unknown trip length law '" + std::string(name) + "'");
}

std::string_view to_string(TripLengthLaw::Kind kind) {
  switch (kind) {
    case TripLengthLaw::Kind::attractor: return "attractor";
    case TripLengthLaw::Kind::uniform_box: return "uniform_box";
    case TripLengthLaw::Kind::uniform_region: return "uniform_region";
  }
  return "unknown";
}

void StreamSpec::validate() const {
  grid.validate();
  if (!(duration > 0.0) || !std::isfinite(duration)) throw InputError("stream duration must be > 0");
  if (!(attractor.scale > 0.0)) throw InputError("attractor scale must be > 0");
  if (!(global_rate >= 0.0) || !std::isfinite(global_rate)) throw InputError("global_rate must be >= 0");
  if (event_count && *event_count < 0) throw InputError("event_count must be >= 0");
  if (rate_map) {
    if (rate_map->rows() != grid.rows || rate_map->cols() != grid.cols)
      throw InputError("rate_map shape differs from grid");
    for (double r : rate_map->flat())
      if (!(r >= 0.0) || !std::isfinite(r)) throw InputError("rate_map entries must be finite and >= 0");
  }
  if (trip_length.kind == TripLengthLaw::Kind::uniform_box && !(trip_length.half_width >= 0.0))
    throw InputError("trip length half_width must be >= 0");
  if (!(trip_duration.min_seconds >= 0.0) || trip_duration.max_seconds < trip_duration.min_seconds)
    throw InputError("trip duration law needs 0 <= min <= max");
}

std::vector<RequestRecord> gen_ride_stream(const StreamSpec& spec) {
  spec.validate();
  const GridSpec& grid = spec.grid;
  const double width = grid.cols * grid.epsilon;
  const double height = grid.rows * grid.epsilon;

  struct Pickup {
    double time;  // seconds since start
    PlanarPoint where;
    std::uint64_t stream;  // substream that owns the drop-off draws
    std::uint64_t ordinal;
  };
  std::vector<Pickup> pickups;

  auto uniform_in_cell = [&](std::size_t k, Rng& rng) {
    const CellIndex c = grid.unflat(k);
    return PlanarPoint{(c.col + rng.uniform()) * grid.epsilon, (c.row + rng.uniform()) * grid.epsilon};
  };

  if (spec.event_count) {
    // Poisson process conditioned on N = n: iid uniform times, iid locations.
    Rng rng(derive_seed(spec.seed, "stream.count"));
    std::vector<double> cumulative;
    if (spec.rate_map) {
      double acc = 0.0;
      for (double r : spec.rate_map->flat()) cumulative.push_back(acc += r);
      if (acc <= 0.0 && *spec.event_count > 0) throw InputError("event_count > 0 needs a positive rate_map");
    }
    for (std::int64_t k = 0; k < *spec.event_count; ++k) {
      const double t = rng.uniform(0.0, spec.duration);
      PlanarPoint where;
      if (spec.rate_map) {
        const double u = rng.uniform() * cumulative.back();
        const auto cell = static_cast<std::size_t>(
            std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
        where = uniform_in_cell(std::min(cell, cumulative.size() - 1), rng);
      } else {
        where = sample_attractor(spec.attractor, rng);
      }
      pickups.push_back({t, where, 0, static_cast<std::uint64_t>(k)});
    }
  } else if (spec.rate_map) {
    const auto rates = spec.rate_map->flat();
    for (std::size_t cell = 0; cell < rates.size(); ++cell) {
      if (rates[cell] <= 0.0) continue;
      Rng rng(derive_seed(spec.seed, "stream.cell", cell));
      std::uint64_t ordinal = 0;
      for (double t = rng.exponential(rates[cell]); t < spec.duration; t += rng.exponential(rates[cell]))
        pickups.push_back({t, uniform_in_cell(cell, rng), cell + 1, ordinal++});
    }
  } else if (spec.global_rate > 0.0) {
    // Marked Poisson process: the superposition of per-cell processes whose
    // rates follow the attractor measure.
    Rng rng(derive_seed(spec.seed, "stream.global"));
    std::uint64_t ordinal = 0;
    for (double t = rng.exponential(spec.global_rate); t < spec.duration; t += rng.exponential(spec.global_rate))
      pickups.push_back({t, sample_attractor(spec.attractor, rng), 0, ordinal++});
  }

  std::stable_sort(pickups.begin(), pickups.end(), [](const Pickup& a, const Pickup& b) { return a.time < b.time; });

  std::vector<RequestRecord> out;
  out.reserve(pickups.size());
  for (const auto& p : pickups) {
    Rng rng(derive_seed(spec.seed, "stream.trip", p.stream * 0x9e3779b97f4a7c15ULL + p.ordinal));
    PlanarPoint drop;
    switch (spec.trip_length.kind) {
      case TripLengthLaw::Kind::attractor:
        drop = sample_attractor(spec.attractor, rng);
        break;
      case TripLengthLaw::Kind::uniform_box: {
        const double w = spec.trip_length.half_width;
        const double de = rng.uniform(-w, w);
        drop = {p.where.east + de, p.where.north + rng.uniform(-w, w)};
        break;
      }
      case TripLengthLaw::Kind::uniform_region:
        drop = {rng.uniform() * width, rng.uniform() * height};
        break;
    }
    const double trip = rng.uniform(spec.trip_duration.min_seconds, spec.trip_duration.max_seconds);
    RequestRecord r;
    r.pickup_time = spec.start_time + static_cast<std::int64_t>(std::floor(p.time));
    r.dropoff_time = r.pickup_time + static_cast<std::int64_t>(std::llround(trip));
    std::tie(r.pickup_lat, r.pickup_lon) = unproject(p.where, grid);
    std::tie(r.dropoff_lat, r.dropoff_lon) = unproject(drop, grid);
    out.push_back(r);
  }
  return out;
}

}  // namespace vplace
