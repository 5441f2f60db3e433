#pragma once

// Online vehicle placement: the three heuristics (uniform random, Poisson
// rate argmax over a limited window, follow-the-leader over the complete
// history), the max-flow optimum and the simulation driver that scores them.

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "vplace/grid.hpp"
#include "vplace/rng.hpp"

namespace vplace {

enum class Algorithm { urand_nh, pp_lh, ftl_ch, opt };

Algorithm parse_algorithm(std::string_view name);
std::string_view to_string(Algorithm algo);
/// PP-LH and FTL-CH consume history and need a warm start.
bool uses_history(Algorithm algo) noexcept;

struct AlgoParams {
  Algorithm algorithm = Algorithm::urand_nh;
  double epsilon_prime = 500.0;  // search radius, meters
  int history_m = 1;
  int min_samples_u = 3;
  std::uint64_t seed = 0;

  /// Defaults per algorithm: eps' = 500 m, m = 20 for PP-LH and
  /// m = 3 for FTL-CH, u = 3.
  static AlgoParams defaults(Algorithm algo, std::uint64_t seed = 0);

  void validate(const GridSpec& grid) const;
};

/// `count` vehicles moved from a drop-off cell to a placement cell.
struct Move {
  CellIndex from;
  CellIndex to;
  std::int64_t count = 1;
};

struct Placement {
  PlacementMatrix matrix;
  std::vector<Move> moves;
};

/// Aggregated D + P history for the history-based algorithms.
///
/// Complete mode accumulates every pushed snapshot. Windowed mode keeps the
/// trailing `window` snapshots and their event times so per-cell rates can
/// be estimated. Count-only snapshots get synthetic event times spread
/// evenly across their slot.
class HistoryState {
 public:
  enum class Mode { complete, windowed };

  HistoryState(const GridSpec& grid, double tau, Mode mode, int window = 0);

  void push(const Snapshot& snapshot);

  /// M: per-cell event counts over the covered snapshots.
  const CountMatrix& counts() const noexcept { return counts_; }
  /// Covered snapshot indices [first, last]; nullopt while empty.
  std::optional<std::pair<std::int64_t, std::int64_t>> window() const;
  std::size_t size() const noexcept { return pushed_; }
  Mode mode() const noexcept { return mode_; }

  /// Ascending event times (seconds from series start) of one cell inside
  /// the window. Windowed mode only.
  std::vector<double> event_times(std::size_t cell) const;

  /// Rate estimate per cell (events/second) for cells whose windowed count
  /// exceeds `min_samples`; nullopt elsewhere. Windowed mode only.
  std::vector<std::optional<double>> rate_estimates(int min_samples) const;

 private:
  struct Entry {
    std::int64_t index;
    CountMatrix combined;
    std::vector<std::pair<std::uint32_t, double>> events;  // (cell, time)
  };

  GridSpec grid_;
  double tau_;
  Mode mode_;
  int window_;
  CountMatrix counts_;
  std::deque<Entry> entries_;
  std::size_t pushed_ = 0;
  std::optional<std::int64_t> first_;
  std::optional<std::int64_t> last_;
};

/// Exponential-rate MLE: 1 / mean(interarrival_times). Throws
/// InsufficientDataError on an empty list and InputError on a gap <= 0.
double mle_lambda(std::span<const double> interarrival_times);

/// Rate from ascending arrival times: (k - 1) / (t_k - t_1), i.e. the MLE
/// over the gaps when coincident timestamps count as zero-length gaps.
/// nullopt with fewer than 2 arrivals or a zero span.
std::optional<double> rate_from_arrivals(std::span<const double> sorted_times);

/// Pr{N(t) > 0 | lambda} = 1 - exp(-lambda t).
double prob_event(double lambda, double t);

Placement place_urand_nh(const CountMatrix& dropoffs, const AlgoParams& params, const GridSpec& grid, Rng& rng);

Placement place_pp_lh(const CountMatrix& dropoffs, const HistoryState& history, const AlgoParams& params,
                      const GridSpec& grid, Rng& rng);

Placement place_ftl_ch(const CountMatrix& dropoffs, const HistoryState& history, const AlgoParams& params,
                       const GridSpec& grid, Rng& rng);

/// FTL-CH against an explicit leader matrix M (decremented as it places).
Placement place_follow_leader(const CountMatrix& dropoffs, CountMatrix leader_counts, const AlgoParams& params,
                              const GridSpec& grid, Rng& rng);

/// Exact maximiser of sum(min(P, Gamma)) under the neighborhood constraint,
/// via integer max flow. Unmatched vehicles stay in their drop-off cell.
Placement opt_oracle(const CountMatrix& dropoffs, const CountMatrix& future_pickups, const AlgoParams& params,
                     const GridSpec& grid);

/// Every move stays inside its drop-off neighborhood, moves account for
/// every drop-off exactly once and sum to the placement matrix.
bool is_feasible(const Placement& placement, const CountMatrix& dropoffs, int side, const GridSpec& grid);

struct RewardEntry {
  std::int64_t snapshot = 0;   // index of the scored snapshot (t + 1)
  std::int64_t placed = 0;     // n_t
  std::int64_t matched = 0;    // sum of min(P, Gamma)
  std::int64_t pickups = 0;    // sum of P_{t+1}
  double reward = 0.0;
  bool empty = false;          // n_t == 0
};

struct RewardSeries {
  Algorithm algorithm = Algorithm::urand_nh;
  AlgoParams params;
  std::vector<RewardEntry> per_snapshot;

  /// Mean reward over non-empty snapshots (0 when there are none).
  double mean_reward() const;
  /// Matched pickups as a fraction of all pickups over the run.
  double fulfilled_fraction() const;
  /// Entry for a snapshot index, if scored.
  const RewardEntry* find(std::int64_t snapshot) const;
};

/// Runs one algorithm over the series: for each t from the warm start,
/// place Gamma_{t+1} from D_t, score against P_{t+1}, then fold snapshot t
/// into the history. No vehicles carry over between snapshots.
RewardSeries simulate(const SnapshotSeries& series, const AlgoParams& params);

/// Snapshots needed before `simulate` can score anything.
std::size_t min_series_length(const AlgoParams& params) noexcept;

}  // namespace vplace
