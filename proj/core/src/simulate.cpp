#include <string>

#include "vplace/placement.hpp"

namespace vplace {

RewardSeries simulate(const SnapshotSeries& series, const AlgoParams& params) {
  series.validate();
  params.validate(series.grid);
  const auto& snaps = series.snapshots;
  if (snaps.size() < min_series_length(params))
    throw InputError("series has " + std::to_string(snaps.size()) + " snapshots; " +
                     std::string(to_string(params.algorithm)) + " needs at least " +
                     std::to_string(min_series_length(params)));

  const std::size_t warm = uses_history(params.algorithm) ? static_cast<std::size_t>(params.history_m) : 0;
  Rng rng(derive_seed(params.seed, to_string(params.algorithm)));

  std::optional<HistoryState> history;
  if (params.algorithm == Algorithm::pp_lh)
    history.emplace(series.grid, series.tau, HistoryState::Mode::windowed, params.history_m);
  else if (params.algorithm == Algorithm::ftl_ch)
    history.emplace(series.grid, series.tau, HistoryState::Mode::complete);

  RewardSeries out;
  out.algorithm = params.algorithm;
  out.params = params;
  out.per_snapshot.reserve(snaps.size() - 1 - std::min(warm, snaps.size() - 1));

  for (std::size_t t = 0; t + 1 < snaps.size(); ++t) {
    if (t >= warm) {
      const CountMatrix& d = snaps[t].dropoffs;
      const CountMatrix& p_next = snaps[t + 1].pickups;
      Placement placed;
      switch (params.algorithm) {
        case Algorithm::urand_nh: placed = place_urand_nh(d, params, series.grid, rng); break;
        case Algorithm::pp_lh: placed = place_pp_lh(d, *history, params, series.grid, rng); break;
        case Algorithm::ftl_ch: placed = place_ftl_ch(d, *history, params, series.grid, rng); break;
        case Algorithm::opt: placed = opt_oracle(d, p_next, params, series.grid); break;
      }
      const std::int64_t n = d.sum();
      const RewardResult r = reward(p_next, placed.matrix, n);
      out.per_snapshot.push_back({snaps[t + 1].index, n, r.matched, p_next.sum(), r.value, r.empty});
    }
    if (history) history->push(snaps[t]);
  }
  return out;
}

}  // namespace vplace
