#include "vplace/fractal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace vplace {

namespace {

std::uint64_t pack(std::int64_t row, std::int64_t col) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(row)) << 32) |
         static_cast<std::uint64_t>(static_cast<std::uint32_t>(col));
}

struct Bounds {
  double min_east = std::numeric_limits<double>::infinity();
  double min_north = std::numeric_limits<double>::infinity();
  double max_east = -std::numeric_limits<double>::infinity();
  double max_north = -std::numeric_limits<double>::infinity();
};

Bounds bounds_of(std::span<const PlanarPoint> points) {
  Bounds b;
  for (const auto& p : points) {
    b.min_east = std::min(b.min_east, p.east);
    b.min_north = std::min(b.min_north, p.north);
    b.max_east = std::max(b.max_east, p.east);
    b.max_north = std::max(b.max_north, p.north);
  }
  return b;
}

bool within(double eps, double lo, double hi) {
  constexpr double tol = 1e-9;
  return eps >= lo * (1.0 - tol) && eps <= hi * (1.0 + tol);
}

// Fenwick tree over y-ranks for the offline rectangle counts below.
class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : tree_(n + 1, 0) {}
  void add(std::size_t i) {
    for (++i; i < tree_.size(); i += i & (~i + 1)) ++tree_[i];
  }
  // count of ranks < i
  std::int64_t prefix(std::size_t i) const {
    std::int64_t s = 0;
    for (; i > 0; i -= i & (~i + 1)) s += tree_[i];
    return s;
  }

 private:
  std::vector<std::int64_t> tree_;
};

}  // namespace

double OccupancyHistogram::sum_squares() const {
  double s = 0.0;
  for (const auto& [key, p] : counts) s += static_cast<double>(p) * static_cast<double>(p);
  return s;
}

OccupancyHistogram occupancy(std::span<const PlanarPoint> points, double epsilon) {
  if (points.empty()) throw InputError("occupancy of an empty point-set");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw InputError("occupancy epsilon must be > 0");
  const Bounds b = bounds_of(points);
  OccupancyHistogram h;
  h.epsilon = epsilon;
  h.total_points = static_cast<std::int64_t>(points.size());
  h.counts.reserve(std::min<std::size_t>(points.size(), 1 << 20));
  for (const auto& p : points) {
    const auto row = static_cast<std::int64_t>(std::floor((p.north - b.min_north) / epsilon));
    const auto col = static_cast<std::int64_t>(std::floor((p.east - b.min_east) / epsilon));
    ++h.counts[pack(row, col)];
  }
  return h;
}

CorrelationCurve correlation_sum(std::span<const PlanarPoint> points, std::span<const double> ladder) {
  if (ladder.size() < 3) throw InputError("correlation ladder needs at least 3 scales");
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    if (!(ladder[k] > 0.0)) throw InputError("correlation ladder scales must be > 0");
    if (k > 0 && !(ladder[k] > ladder[k - 1])) throw InputError("correlation ladder must be strictly ascending");
  }
  CorrelationCurve curve;
  curve.points.reserve(ladder.size());
  for (double eps : ladder) {
    const auto h = occupancy(points, eps);
    curve.points.push_back({eps, std::log(eps), std::log(h.sum_squares())});
  }
  return curve;
}

std::vector<double> dyadic_ladder(double ceiling, int count) {
  if (!(ceiling > 0.0) || count < 1) throw InputError("dyadic ladder needs ceiling > 0 and count >= 1");
  std::vector<double> ladder(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) ladder[static_cast<std::size_t>(k)] = std::ldexp(ceiling, k - (count - 1));
  return ladder;
}

std::vector<double> default_ladder(std::span<const PlanarPoint> points, int count) {
  if (points.empty()) throw InputError("default ladder of an empty point-set");
  const Bounds b = bounds_of(points);
  double side = std::max(b.max_east - b.min_east, b.max_north - b.min_north);
  if (!(side > 0.0)) side = 1.0;
  return dyadic_ladder(side, count);
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw InputError("line fit needs >= 2 paired samples");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxx += (x[k] - mx) * (x[k] - mx);
    sxy += (x[k] - mx) * (y[k] - my);
    syy += (y[k] - my) * (y[k] - my);
  }
  if (!(sxx > 0.0)) throw InputError("line fit needs distinct x values");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  const double ss_res = std::max(0.0, syy - fit.slope * sxy);
  // relative tolerance so exact lines built in floating point score 1
  fit.r_squared = syy <= 1e-24 * std::max(1.0, my * my) ? 1.0 : std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  return fit;
}

D2Estimate fit_d2(const CorrelationCurve& curve, double range_lo, double range_hi) {
  if (!(range_lo < range_hi)) throw RangeError("fit range must satisfy lo < hi");
  std::vector<double> x, y;
  for (const auto& p : curve.points) {
    if (within(p.epsilon, range_lo, range_hi)) {
      x.push_back(p.log_epsilon);
      y.push_back(p.log_sum_p2);
    }
  }
  if (x.size() < 3) throw RangeError("fewer than 3 curve points inside the fit range");
  const LineFit fit = fit_line(x, y);
  return {fit.slope, fit.r_squared, range_lo, range_hi, static_cast<int>(x.size())};
}

std::optional<FractalRange> detect_fractal_range(const CorrelationCurve& curve, double min_r_squared,
                                                 int min_scales) {
  const auto& pts = curve.points;
  const auto need = static_cast<std::size_t>(std::max(min_scales, 2));
  std::optional<FractalRange> best;
  std::size_t best_len = 0;
  std::vector<double> x, y;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + need - 1; j < pts.size(); ++j) {
      const std::size_t len = j - i + 1;
      if (len < best_len) continue;
      x.clear();
      y.clear();
      for (std::size_t k = i; k <= j; ++k) {
        x.push_back(pts[k].log_epsilon);
        y.push_back(pts[k].log_sum_p2);
      }
      if (fit_line(x, y).r_squared < min_r_squared) continue;
      const FractalRange cand{pts[i].epsilon, pts[j].epsilon};
      if (!best || len > best_len || cand.hi - cand.lo > best->hi - best->lo) {
        best = cand;
        best_len = len;
      }
    }
  }
  return best;
}

std::optional<double> resolution_floor(const CorrelationCurve& curve, std::int64_t n_points, double factor) {
  const double threshold = std::log(factor * static_cast<double>(n_points));
  for (const auto& p : curve.points)
    if (p.log_sum_p2 >= threshold) return p.epsilon;
  return std::nullopt;
}

D2Estimate estimate_d2(std::span<const PlanarPoint> points, const D2Options& options) {
  const auto ladder = default_ladder(points, options.scales);
  const auto curve = correlation_sum(points, ladder);
  if (options.range) return fit_d2(curve, options.range->lo, options.range->hi);
  const auto lo = resolution_floor(curve, static_cast<std::int64_t>(points.size()), options.floor_factor);
  if (!lo) throw RangeError("no scale rises above the self-occupancy floor");
  return fit_d2(curve, *lo, ladder.back() * options.upper_fraction);
}

std::vector<PlanarPoint> pickup_points(const Snapshot& snapshot, const GridSpec& grid) {
  std::vector<PlanarPoint> pts;
  if (!snapshot.events.empty()) {
    for (const auto& e : snapshot.events)
      if (e.kind == EventKind::pickup) pts.push_back({e.east, e.north});
    return pts;
  }
  for (int r = 0; r < snapshot.pickups.rows(); ++r)
    for (int c = 0; c < snapshot.pickups.cols(); ++c)
      for (std::int64_t k = 0; k < snapshot.pickups(r, c); ++k)
        pts.push_back({(c + 0.5) * grid.epsilon, (r + 0.5) * grid.epsilon});
  return pts;
}

D2Series weekly_d2_series(const SnapshotSeries& series, std::span<const double> ladder, FractalRange range) {
  if (series.snapshots.empty()) throw InputError("weekly D2 series of an empty snapshot series");
  D2Series out;
  out.per_snapshot.reserve(series.snapshots.size());
  double sum = 0.0;
  for (const auto& snap : series.snapshots) {
    SnapshotD2 row;
    row.snapshot = snap.index;
    const auto pts = pickup_points(snap, series.grid);
    if (pts.size() < 2) {
      row.flag = D2Flag::too_few_points;
      out.per_snapshot.push_back(row);
      continue;
    }
    const auto curve = correlation_sum(pts, ladder);
    const double floor_level = std::log(static_cast<double>(pts.size()));
    int informative = 0;
    for (const auto& p : curve.points)
      if (within(p.epsilon, range.lo, range.hi) && p.log_sum_p2 > floor_level + 1e-12) ++informative;
    if (informative < 3) {
      row.flag = D2Flag::degenerate;
      out.per_snapshot.push_back(row);
      continue;
    }
    row.estimate = fit_d2(curve, range.lo, range.hi);
    if (out.summary.fitted == 0) {
      out.summary.min = out.summary.max = row.estimate.d2;
    } else {
      out.summary.min = std::min(out.summary.min, row.estimate.d2);
      out.summary.max = std::max(out.summary.max, row.estimate.d2);
    }
    sum += row.estimate.d2;
    ++out.summary.fitted;
    out.per_snapshot.push_back(row);
  }
  out.summary.flagged = static_cast<std::int64_t>(out.per_snapshot.size()) - out.summary.fitted;
  if (out.summary.fitted > 0) {
    out.summary.mean = sum / static_cast<double>(out.summary.fitted);
    // guard the ordering against rounding in the running sum
    out.summary.mean = std::clamp(out.summary.mean, out.summary.min, out.summary.max);
  }
  return out;
}

double mean_neighbor_count(std::span<const PlanarPoint> points, double radius, std::size_t max_centers) {
  if (points.empty()) throw InputError("neighbor count of an empty point-set");
  if (!(radius > 0.0)) throw InputError("neighbor radius must be > 0");
  const std::size_t n = points.size();
  const std::size_t stride = std::max<std::size_t>(1, n / std::max<std::size_t>(1, max_centers));

  // y ranks
  std::vector<double> ys(n);
  for (std::size_t k = 0; k < n; ++k) ys[k] = points[k].north;
  std::sort(ys.begin(), ys.end());
  auto rank_lo = [&](double v) { return static_cast<std::size_t>(std::lower_bound(ys.begin(), ys.end(), v) - ys.begin()); };
  auto rank_hi = [&](double v) { return static_cast<std::size_t>(std::upper_bound(ys.begin(), ys.end(), v) - ys.begin()); };

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return points[a].east < points[b].east; });

  // each query contributes +count(x <= hi) - count(x < lo)
  struct Sweep {
    double x;
    bool inclusive;
    int sign;
    std::size_t ylo, yhi;
  };
  std::vector<Sweep> sweeps;
  for (std::size_t k = 0; k < n; k += stride) {
    const auto& c = points[k];
    const auto ylo = rank_lo(c.north - radius);
    const auto yhi = rank_hi(c.north + radius);
    sweeps.push_back({c.east + radius, true, +1, ylo, yhi});
    sweeps.push_back({c.east - radius, false, -1, ylo, yhi});
  }
  // at equal x the strict (x < lo) boundaries must run before points at x are added
  std::sort(sweeps.begin(), sweeps.end(), [](const Sweep& a, const Sweep& b) {
    return a.x < b.x || (a.x == b.x && !a.inclusive && b.inclusive);
  });

  Fenwick tree(n);
  std::size_t next = 0;
  std::int64_t total = 0;
  for (const auto& s : sweeps) {
    while (next < n) {
      const double x = points[order[next]].east;
      if (s.inclusive ? x <= s.x : x < s.x) {
        tree.add(rank_lo(points[order[next]].north));
        ++next;
      } else {
        break;
      }
    }
    total += s.sign * (tree.prefix(s.yhi) - tree.prefix(s.ylo));
  }
  return static_cast<double>(total) / static_cast<double>(sweeps.size() / 2);
}

}  // namespace vplace
