#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "vplace/fractal.hpp"
#include "vplace/rng.hpp"
#include "vplace/synth.hpp"

using namespace vplace;

namespace {

const double kTriangle = std::log(3.0) / std::log(2.0);

// Sum over ordered pairs (including i == j) of "same cell": equals sum p^2.
double pair_count(const std::vector<PlanarPoint>& pts, double eps) {
  double x0 = pts[0].east, y0 = pts[0].north;
  for (const auto& p : pts) {
    x0 = std::min(x0, p.east);
    y0 = std::min(y0, p.north);
  }
  double s = 0.0;
  for (const auto& a : pts)
    for (const auto& b : pts)
      s += std::floor((a.east - x0) / eps) == std::floor((b.east - x0) / eps) &&
           std::floor((a.north - y0) / eps) == std::floor((b.north - y0) / eps);
  return s;
}

// Sorted cell keys and run lengths.
double sorted_sum_squares(const std::vector<PlanarPoint>& pts, double eps) {
  std::vector<std::pair<long long, long long>> keys;
  for (const auto& p : pts)
    keys.push_back({static_cast<long long>(std::floor(p.north / eps)), static_cast<long long>(std::floor(p.east / eps))});
  std::sort(keys.begin(), keys.end());
  double s = 0.0;
  for (std::size_t i = 0; i < keys.size();) {
    std::size_t j = i;
    while (j < keys.size() && keys[j] == keys[i]) ++j;
    s += static_cast<double>(j - i) * static_cast<double>(j - i);
    i = j;
  }
  return s;
}

double slope_by_hand(const std::vector<double>& x, const std::vector<double>& y) {
  double n = static_cast<double>(x.size()), sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sx += x[k];
    sy += y[k];
    sxx += x[k] * x[k];
    sxy += x[k] * y[k];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double r2_by_hand(const std::vector<double>& x, const std::vector<double>& y) {
  const double b = slope_by_hand(x, y);
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double res = 0, tot = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double e = y[k] - (my + b * (x[k] - mx));
    res += e * e;
    tot += (y[k] - my) * (y[k] - my);
  }
  return tot == 0.0 ? 1.0 : 1.0 - res / tot;
}

// Every window, longest first, then widest span.
std::optional<FractalRange> window_oracle(const CorrelationCurve& c, double min_r2, int min_scales) {
  std::optional<FractalRange> best;
  std::size_t best_len = 0;
  const auto& p = c.points;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i; j < p.size(); ++j) {
      const std::size_t len = j - i + 1;
      if (len < static_cast<std::size_t>(min_scales)) continue;
      std::vector<double> x, y;
      for (std::size_t k = i; k <= j; ++k) {
        x.push_back(p[k].log_epsilon);
        y.push_back(p[k].log_sum_p2);
      }
      if (r2_by_hand(x, y) < min_r2) continue;
      const FractalRange cand{p[i].epsilon, p[j].epsilon};
      if (len > best_len || (len == best_len && cand.hi - cand.lo > best->hi - best->lo)) {
        best = cand;
        best_len = len;
      }
    }
  return best;
}

CorrelationCurve curve_from(const std::vector<double>& eps, const std::vector<double>& y) {
  CorrelationCurve c;
  for (std::size_t k = 0; k < eps.size(); ++k) c.points.push_back({eps[k], std::log(eps[k]), y[k]});
  return c;
}

Snapshot snapshot_with(std::int64_t index, const std::vector<PlanarPoint>& pts) {
  Snapshot s;
  s.index = index;
  s.slot = index;
  s.pickups = CountMatrix(1, 1);
  s.dropoffs = CountMatrix(1, 1);
  for (const auto& p : pts) s.events.push_back({0, EventKind::pickup, 0.0, p.east, p.north});
  s.pickups(0, 0) = static_cast<std::int64_t>(pts.size());
  return s;
}

}  // namespace

TEST_CASE("occupancy examples") {
  const std::vector<PlanarPoint> quad{{0.1, 0.1}, {0.9, 0.1}, {0.1, 0.9}, {0.9, 0.9}};
  auto h = occupancy(quad, 0.5);
  CHECK(h.counts.size() == 4);
  CHECK(h.sum_squares() == 4.0);
  CHECK(h.total_points == 4);

  const std::vector<PlanarPoint> same(7, PlanarPoint{3.0, 4.0});
  for (double eps : {0.01, 1.0, 1000.0}) CHECK(occupancy(same, eps).sum_squares() == 49.0);

  std::vector<PlanarPoint> lattice;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) lattice.push_back({i + 0.5, j + 0.5});
  h = occupancy(lattice, 1.0);
  CHECK(h.counts.size() == 100);
  CHECK(h.sum_squares() == 100.0);

  CHECK_THROWS_AS(occupancy({}, 1.0), InputError);
  CHECK_THROWS_AS(occupancy(quad, 0.0), InputError);
}

TEST_CASE("occupancy matches a pairwise count") {
  Rng rng(8);
  std::vector<PlanarPoint> pts;
  for (int k = 0; k < 1200; ++k) pts.push_back({rng.uniform(-3, 40), rng.uniform(10, 30)});
  for (double eps : {0.5, 2.0, 7.5, 50.0}) {
    const auto h = occupancy(pts, eps);
    CHECK(h.sum_squares() == pair_count(pts, eps));
    std::int64_t total = 0;
    for (const auto& [key, p] : h.counts) {
      CHECK(p >= 1);
      total += p;
    }
    CHECK(total == h.total_points);
  }
}

TEST_CASE("correlation_sum ladder checks and flat curves") {
  const std::vector<PlanarPoint> same(5, PlanarPoint{1.0, 1.0});
  const auto c = correlation_sum(same, dyadic_ladder(8.0, 4));
  for (const auto& p : c.points) CHECK(p.log_sum_p2 == doctest::Approx(std::log(25.0)));
  CHECK(fit_d2(c, 1.0, 8.0).d2 == doctest::Approx(0.0));

  std::vector<PlanarPoint> spread;
  for (int k = 0; k < 10; ++k) spread.push_back({k * 1000.0, 0.0});
  const auto s = correlation_sum(spread, std::vector<double>{1.0, 10.0, 100.0});
  for (const auto& p : s.points) CHECK(p.log_sum_p2 == doctest::Approx(std::log(10.0)));

  CHECK_THROWS_AS(correlation_sum(same, std::vector<double>{1.0, 2.0}), InputError);
  CHECK_THROWS_AS(correlation_sum(same, std::vector<double>{1.0, 1.0, 2.0}), InputError);
  CHECK_THROWS_AS(correlation_sum(same, std::vector<double>{-1.0, 1.0, 2.0}), InputError);
  CHECK_THROWS_AS(correlation_sum(std::vector<PlanarPoint>{}, std::vector<double>{1.0, 2.0, 3.0}), InputError);
}

TEST_CASE("uniform square slope is 2 against a sort-based count") {
  Rng rng(50);
  std::vector<PlanarPoint> pts;
  for (int k = 0; k < 50000; ++k) pts.push_back({rng.uniform(), rng.uniform()});
  // anchor at the origin so the oracle's cells line up with occupancy's
  pts.push_back({0.0, 0.0});
  const std::vector<double> ladder{1.0 / 64, 1.0 / 32, 1.0 / 16, 1.0 / 8, 1.0 / 4};
  const auto curve = correlation_sum(pts, ladder);
  std::vector<double> x, y;
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    const double oracle = sorted_sum_squares(pts, ladder[k]);
    CHECK(std::exp(curve.points[k].log_sum_p2) == doctest::Approx(oracle).epsilon(1e-12));
    x.push_back(std::log(ladder[k]));
    y.push_back(std::log(oracle));
  }
  const auto fit = fit_d2(curve, ladder.front(), ladder.back());
  CHECK(fit.d2 == doctest::Approx(slope_by_hand(x, y)).epsilon(1e-9));
  CHECK(fit.d2 == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("scale monotonicity on nested grids") {
  Rng rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<PlanarPoint> pts;
    for (int k = 0; k < 3000; ++k) pts.push_back({rng.uniform(0, 500), rng.uniform(0, 200)});
    const auto c = correlation_sum(pts, dyadic_ladder(512.0, 10));
    for (std::size_t k = 1; k < c.points.size(); ++k) CHECK(c.points[k].log_sum_p2 >= c.points[k - 1].log_sum_p2);
  }
}

TEST_CASE("fit_d2 on exact lines") {
  std::vector<double> eps, y;
  for (int k = 0; k < 6; ++k) {
    eps.push_back(std::ldexp(1.0, k));
    y.push_back(0.7 + 1.3 * std::log(eps.back()));
  }
  const auto fit = fit_d2(curve_from(eps, y), 1.0, 32.0);
  CHECK(fit.d2 == doctest::Approx(1.3));
  CHECK(fit.r_squared == doctest::Approx(1.0));
  CHECK(fit.n_scales == 6);
  CHECK(fit.range_lo < fit.range_hi);

  const auto flat = fit_d2(curve_from(eps, std::vector<double>(6, 2.0)), 1.0, 32.0);
  CHECK(flat.d2 == doctest::Approx(0.0));
  CHECK(flat.r_squared == 1.0);

  const auto part = fit_d2(curve_from(eps, y), 2.0, 8.0);
  CHECK(part.n_scales == 3);
  CHECK_THROWS_AS(fit_d2(curve_from(eps, y), 2.0, 4.0), RangeError);
  CHECK_THROWS_AS(fit_d2(curve_from(eps, y), 100.0, 400.0), RangeError);
}

TEST_CASE("detect_fractal_range") {
  std::vector<double> eps;
  for (int k = 0; k < 9; ++k) eps.push_back(std::ldexp(10.0, k));

  SUBCASE("perfect line returns the whole ladder") {
    std::vector<double> y;
    for (double e : eps) y.push_back(1.0 + 1.6 * std::log(e));
    auto r = detect_fractal_range(curve_from(eps, y));
    REQUIRE(r);
    CHECK(r->lo == eps.front());
    CHECK(r->hi == eps.back());
  }
  SUBCASE("middle five of nine") {
    std::vector<double> y(9);
    for (int k = 2; k <= 6; ++k) y[static_cast<std::size_t>(k)] = 3.0 + 1.5 * std::log(eps[static_cast<std::size_t>(k)]);
    y[0] = y[2] + 6.0;
    y[1] = y[2] - 5.0;
    y[7] = y[6] - 6.0;
    y[8] = y[6] + 7.0;
    const auto c = curve_from(eps, y);
    auto r = detect_fractal_range(c, 0.98, 4);
    auto o = window_oracle(c, 0.98, 4);
    REQUIRE(r);
    REQUIRE(o);
    CHECK(*r == *o);
    CHECK(r->lo == eps[2]);
    CHECK(r->hi == eps[6]);
  }
  SUBCASE("noise with a strict threshold") {
    Rng rng(77);
    std::vector<double> y;
    for (std::size_t k = 0; k < eps.size(); ++k) y.push_back(rng.uniform(0.0, 10.0));
    const auto c = curve_from(eps, y);
    CHECK_FALSE(window_oracle(c, 0.999, 4));
    CHECK_FALSE(detect_fractal_range(c, 0.999, 4));
  }
  SUBCASE("matches the window oracle on random curves") {
    Rng rng(5);
    for (int trial = 0; trial < 300; ++trial) {
      std::vector<double> y;
      double level = 0.0;
      for (std::size_t k = 0; k < eps.size(); ++k) {
        level += rng.uniform() < 0.7 ? 1.5 : rng.uniform(-1.0, 4.0);
        y.push_back(level);
      }
      const auto c = curve_from(eps, y);
      for (double thr : {0.9, 0.98}) {
        const auto r = detect_fractal_range(c, thr, 4);
        const auto o = window_oracle(c, thr, 4);
        REQUIRE(r.has_value() == o.has_value());
        if (r) CHECK(*r == *o);
      }
    }
  }
}

TEST_CASE("resolution floor") {
  std::vector<double> eps{1, 2, 4, 8};
  const auto c = curve_from(eps, {std::log(100.0), std::log(500.0), std::log(1000.0), std::log(5000.0)});
  CHECK(resolution_floor(c, 100, 10.0) == 4.0);
  CHECK(resolution_floor(c, 100, 1.0) == 1.0);
  CHECK_FALSE(resolution_floor(c, 1000, 10.0));
}

TEST_CASE("d2 recovery on known samplers") {
  struct Case {
    AttractorKind kind;
    double tol;
  };
  for (auto [kind, tol] : {Case{AttractorKind::sierpinski_triangle, 0.08}, Case{AttractorKind::sierpinski_carpet, 0.08},
                           Case{AttractorKind::uniform_square, 0.1}, Case{AttractorKind::line_segment, 0.1}}) {
    CAPTURE(to_string(kind));
    const auto pts = gen_points({kind, 5000.0, 0.0, 0.0}, 100000, 42);
    const auto est = estimate_d2(pts);
    CHECK(std::abs(est.d2 - theoretical_d2(kind)) <= tol);
    CHECK(est.d2 >= -0.1);
    CHECK(est.d2 <= 2.1);
    CHECK(est.n_scales >= 3);
  }
}

TEST_CASE("estimator error shrinks as the sample doubles") {
  // fixed fine range where the large-n slope sits on the true dimension;
  // mean absolute error over 10 seeds at n, 2n, 4n, 8n
  const auto ladder = dyadic_ladder(1000.0, 12);
  std::vector<double> err;
  for (std::size_t n : {12500u, 25000u, 50000u, 100000u}) {
    double sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const auto pts = gen_points({AttractorKind::sierpinski_triangle, 1000.0, 0.0, 0.0}, n, seed);
      sum += std::abs(fit_d2(correlation_sum(pts, ladder), 1000.0 / 256, 1000.0 / 16).d2 - kTriangle);
    }
    err.push_back(sum / 10.0);
  }
  for (std::size_t k = 1; k < err.size(); ++k) {
    CAPTURE(k);
    CAPTURE(err[k - 1]);
    CAPTURE(err[k]);
    CHECK(err[k] <= err[k - 1]);
  }
}

TEST_CASE("mean neighbor count against brute force") {
  Rng rng(9);
  std::vector<PlanarPoint> pts;
  for (int k = 0; k < 700; ++k) pts.push_back({std::round(rng.uniform(0, 100)), std::round(rng.uniform(0, 100))});
  for (double r : {1.0, 5.0, 12.5, 40.0}) {
    double total = 0.0;
    for (const auto& c : pts)
      for (const auto& p : pts) total += std::abs(p.east - c.east) <= r && std::abs(p.north - c.north) <= r;
    CHECK(mean_neighbor_count(pts, r, pts.size()) == doctest::Approx(total / static_cast<double>(pts.size())));
  }
  CHECK_THROWS_AS(mean_neighbor_count(pts, 0.0), InputError);
}

TEST_CASE("neighbor counts follow a power law with exponent D2") {
  const auto pts = gen_points({AttractorKind::sierpinski_triangle, 5000.0, 0.0, 0.0}, 100000, 3);
  const double d2 = estimate_d2(pts).d2;
  std::vector<double> x, y;
  for (int k = 0; k < 6; ++k) {
    const double r = std::ldexp(5000.0 / 256.0, k);
    x.push_back(std::log(r));
    y.push_back(std::log(mean_neighbor_count(pts, r)));
  }
  CHECK(r2_by_hand(x, y) >= 0.98);
  CHECK(std::abs(slope_by_hand(x, y) - d2) <= 0.1);
}

TEST_CASE("weekly series") {
  const GridSpec grid{100.0, 1, 1, 0, 0, 0};
  const auto pattern = gen_points({AttractorKind::sierpinski_triangle, 1000.0, 0.0, 0.0}, 4000, 1);
  const auto ladder = dyadic_ladder(1000.0, 10);
  const FractalRange range{1000.0 / 64, 1000.0 / 4};

  SUBCASE("identical snapshots give a constant series") {
    SnapshotSeries s;
    s.grid = grid;
    for (int k = 0; k < 4; ++k) s.snapshots.push_back(snapshot_with(k, pattern));
    const auto out = weekly_d2_series(s, ladder, range);
    CHECK(out.summary.fitted == 4);
    CHECK(out.summary.min == out.summary.max);
    CHECK(out.summary.mean == doctest::Approx(out.summary.min));
    for (const auto& row : out.per_snapshot) CHECK(row.estimate.d2 == out.summary.min);
  }
  SUBCASE("degenerate snapshots are flagged, not fatal") {
    SnapshotSeries s;
    s.grid = grid;
    s.snapshots.push_back(snapshot_with(0, pattern));
    s.snapshots.push_back(snapshot_with(1, {{1, 1}}));
    s.snapshots.push_back(snapshot_with(2, std::vector<PlanarPoint>(2, PlanarPoint{10.0, 10.0})));
    s.snapshots.push_back(snapshot_with(3, {}));
    const auto out = weekly_d2_series(s, ladder, range);
    CHECK(out.per_snapshot[0].flag == D2Flag::ok);
    CHECK(out.per_snapshot[1].flag == D2Flag::too_few_points);
    CHECK(out.per_snapshot[3].flag == D2Flag::too_few_points);
    CHECK(out.summary.fitted + out.summary.flagged == 4);
    CHECK(out.summary.flagged >= 2);
  }
  SUBCASE("min <= mean <= max on mixed input") {
    Rng rng(4);
    SnapshotSeries s;
    s.grid = grid;
    for (int k = 0; k < 12; ++k) {
      std::vector<PlanarPoint> pts;
      const int n = static_cast<int>(rng.below(3000));
      for (int j = 0; j < n; ++j) pts.push_back({rng.uniform(0, 1000) * rng.uniform(), rng.uniform(0, 1000)});
      s.snapshots.push_back(snapshot_with(k, pts));
    }
    const auto out = weekly_d2_series(s, ladder, range);
    if (out.summary.fitted > 0) {
      CHECK(out.summary.min <= out.summary.mean);
      CHECK(out.summary.mean <= out.summary.max);
    }
  }
  SUBCASE("sierpinski week recovers the generator dimension") {
    SnapshotSeries s;
    s.grid = grid;
    for (int k = 0; k < 20; ++k)
      s.snapshots.push_back(snapshot_with(k, gen_points({AttractorKind::sierpinski_triangle, 1000.0, 0.0, 0.0}, 20000,
                                                        static_cast<std::uint64_t>(100 + k))));
    const auto out = weekly_d2_series(s, ladder, FractalRange{1000.0 / 128, 1000.0 / 4});
    CHECK(out.summary.fitted == 20);
    CHECK(std::abs(out.summary.mean - kTriangle) <= 0.1);
  }
  CHECK_THROWS_AS(weekly_d2_series(SnapshotSeries{}, ladder, range), InputError);
}
