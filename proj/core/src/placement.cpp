#include "vplace/placement.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "vplace/max_flow.hpp"

namespace vplace {

namespace {

// Expands each non-zero drop-off cell (row-major) and hands its
// neighborhood and multiplicity to `place_units`.
template <typename F>
Placement for_each_dropoff(const CountMatrix& dropoffs, int side, const GridSpec& grid, F&& place_units) {
  if (dropoffs.rows() != grid.rows || dropoffs.cols() != grid.cols)
    throw InputError("drop-off matrix shape differs from grid");
  Placement out{PlacementMatrix{CountMatrix(grid.rows, grid.cols)}, {}};
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      const std::int64_t units = dropoffs(r, c);
      if (units < 0) throw InputError("negative drop-off count");
      if (units == 0) continue;
      const Neighborhood nb = neighborhood_for_side({r, c}, side, grid);
      for (std::int64_t u = 0; u < units; ++u) {
        const CellIndex to = place_units(nb);
        ++out.matrix.entries[to];
        out.moves.push_back({{r, c}, to, 1});
      }
    }
  }
  return out;
}

CellIndex pick_uniform(const std::vector<CellIndex>& cells, Rng& rng) {
  return cells[static_cast<std::size_t>(rng.below(cells.size()))];
}

}  // namespace

Algorithm parse_algorithm(std::string_view name) {
  if (name == "urand_nh") return Algorithm::urand_nh;
  if (name == "pp_lh") return Algorithm::pp_lh;
  if (name == "ftl_ch") return Algorithm::ftl_ch;
  if (name == "opt") return Algorithm::opt;
  throw InputError("unknown algorithm '" + std::string(name) + "' (expected urand_nh, pp_lh, ftl_ch or opt)");
}

std::string_view to_string(Algorithm algo) {
  switch (algo) {
    case Algorithm::urand_nh: return "urand_nh";
    case Algorithm::pp_lh: return "pp_lh";
    case Algorithm::ftl_ch: return "ftl_ch";
    case Algorithm::opt: return "opt";
  }
  return "unknown";
}

bool uses_history(Algorithm algo) noexcept { return algo == Algorithm::pp_lh || algo == Algorithm::ftl_ch; }

AlgoParams AlgoParams::defaults(Algorithm algo, std::uint64_t seed) {
  AlgoParams p;
  p.algorithm = algo;
  p.epsilon_prime = 500.0;
  p.history_m = algo == Algorithm::pp_lh ? 20 : algo == Algorithm::ftl_ch ? 3 : 1;
  p.min_samples_u = 3;
  p.seed = seed;
  return p;
}

void AlgoParams::validate(const GridSpec& grid) const {
  if (!(epsilon_prime >= grid.epsilon)) throw InputError("epsilon_prime must be >= grid epsilon");
  if (uses_history(algorithm) && history_m < 1) throw InputError("history_m must be >= 1");
  if (algorithm == Algorithm::pp_lh && min_samples_u < 2) throw InputError("min_samples_u must be >= 2");
}

double mle_lambda(std::span<const double> gaps) {
  if (gaps.empty()) throw InsufficientDataError("rate MLE needs at least one inter-arrival time");
  double sum = 0.0;
  for (double g : gaps) {
    if (!(g > 0.0) || !std::isfinite(g)) throw InputError("inter-arrival times must be finite and > 0");
    sum += g;
  }
  return static_cast<double>(gaps.size()) / sum;
}

std::optional<double> rate_from_arrivals(std::span<const double> t) {
  if (t.size() < 2) return std::nullopt;
  const double span = t.back() - t.front();
  if (!(span > 0.0)) return std::nullopt;
  return static_cast<double>(t.size() - 1) / span;
}

double prob_event(double lambda, double t) {
  if (!(lambda >= 0.0) || !(t >= 0.0)) throw InputError("prob_event needs lambda >= 0 and t >= 0");
  return -std::expm1(-lambda * t);
}

Placement place_urand_nh(const CountMatrix& dropoffs, const AlgoParams& params, const GridSpec& grid, Rng& rng) {
  const int side = neighborhood_side(params.epsilon_prime, grid.epsilon);
  return for_each_dropoff(dropoffs, side, grid, [&](const Neighborhood& nb) { return pick_uniform(nb.cells, rng); });
}

Placement place_pp_lh(const CountMatrix& dropoffs, const HistoryState& history, const AlgoParams& params,
                      const GridSpec& grid, Rng& rng) {
  const int side = neighborhood_side(params.epsilon_prime, grid.epsilon);
  auto rates = history.rate_estimates(params.min_samples_u);
  std::vector<CellIndex> leaders;
  return for_each_dropoff(dropoffs, side, grid, [&](const Neighborhood& nb) {
    // 1 - exp(-lambda t) is increasing in lambda, so compare rates directly;
    // the probabilities saturate to 1.0 in floating point for hot cells.
    leaders.clear();
    double best = -1.0;
    for (const CellIndex c : nb.cells) {
      const auto& lam = rates[grid.flat(c)];
      if (!lam) continue;
      if (*lam > best) {
        best = *lam;
        leaders.assign(1, c);
      } else if (*lam == best) {
        leaders.push_back(c);
      }
    }
    if (leaders.empty()) return pick_uniform(nb.cells, rng);
    const CellIndex chosen = pick_uniform(leaders, rng);
    rates[grid.flat(chosen)].reset();  // not offered again this snapshot
    return chosen;
  });
}

Placement place_follow_leader(const CountMatrix& dropoffs, CountMatrix m, const AlgoParams& params,
                              const GridSpec& grid, Rng& rng) {
  if (!m.same_shape(dropoffs)) throw InputError("leader matrix shape differs from drop-offs");
  const int side = neighborhood_side(params.epsilon_prime, grid.epsilon);
  std::vector<CellIndex> leaders;
  return for_each_dropoff(dropoffs, side, grid, [&](const Neighborhood& nb) {
    // an all-zero neighborhood ties everywhere, which is the uniform fallback
    leaders.clear();
    std::int64_t best = -1;
    for (const CellIndex c : nb.cells) {
      const std::int64_t v = m[c];
      if (v > best) {
        best = v;
        leaders.assign(1, c);
      } else if (v == best) {
        leaders.push_back(c);
      }
    }
    const CellIndex chosen = pick_uniform(leaders, rng);
    if (m[chosen] > 0) --m[chosen];
    return chosen;
  });
}

Placement place_ftl_ch(const CountMatrix& dropoffs, const HistoryState& history, const AlgoParams& params,
                       const GridSpec& grid, Rng& rng) {
  return place_follow_leader(dropoffs, history.counts(), params, grid, rng);
}

Placement opt_oracle(const CountMatrix& dropoffs, const CountMatrix& pickups, const AlgoParams& params,
                     const GridSpec& grid) {
  if (dropoffs.rows() != grid.rows || dropoffs.cols() != grid.cols || !pickups.same_shape(dropoffs))
    throw InputError("OPT needs drop-off and pickup matrices on the grid");
  const int side = neighborhood_side(params.epsilon_prime, grid.epsilon);
  const std::size_t n = grid.cell_count();

  // nodes: 0 source, 1 sink, then one left node per drop-off cell and one
  // right node per pickup cell, allocated on demand
  std::vector<int> left(n, -1), right(n, -1);
  int nodes = 2;
  for (std::size_t k = 0; k < n; ++k) {
    if (dropoffs.flat()[k] < 0 || pickups.flat()[k] < 0) throw InputError("OPT needs non-negative counts");
    if (dropoffs.flat()[k] > 0) left[k] = nodes++;
    if (pickups.flat()[k] > 0) right[k] = nodes++;
  }

  MaxFlow flow(nodes);
  std::vector<int> source_edge(n, -1);
  struct Arc {
    CellIndex from, to;
    int id;
  };
  std::vector<Arc> arcs;
  for (std::size_t k = 0; k < n; ++k) {
    if (left[k] < 0) continue;
    source_edge[k] = flow.add_edge(0, left[k], dropoffs.flat()[k]);
    const CellIndex from = grid.unflat(k);
    for (const CellIndex to : neighborhood_for_side(from, side, grid).cells) {
      const std::size_t j = grid.flat(to);
      if (right[j] >= 0) arcs.push_back({from, to, flow.add_edge(left[k], right[j], MaxFlow::kInfinite)});
    }
  }
  for (std::size_t k = 0; k < n; ++k)
    if (right[k] >= 0) flow.add_edge(right[k], 1, pickups.flat()[k]);
  flow.solve(0, 1);

  Placement out{PlacementMatrix{CountMatrix(grid.rows, grid.cols)}, {}};
  for (const Arc& a : arcs) {
    const std::int64_t f = flow.flow_on(a.id);
    if (f <= 0) continue;
    out.matrix.entries[a.to] += f;
    out.moves.push_back({a.from, a.to, f});
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (left[k] < 0) continue;
    const std::int64_t parked = dropoffs.flat()[k] - flow.flow_on(source_edge[k]);
    if (parked <= 0) continue;
    const CellIndex own = grid.unflat(k);
    out.matrix.entries[own] += parked;
    out.moves.push_back({own, own, parked});
  }
  return out;
}

bool is_feasible(const Placement& placement, const CountMatrix& dropoffs, int side, const GridSpec& grid) {
  const CountMatrix& gamma = placement.matrix.entries;
  if (!gamma.same_shape(dropoffs) || gamma.rows() != grid.rows || gamma.cols() != grid.cols) return false;
  CountMatrix from(grid.rows, grid.cols), to(grid.rows, grid.cols);
  for (const Move& m : placement.moves) {
    if (m.count <= 0 || !in_neighborhood(m.from, m.to, side, grid)) return false;
    from[m.from] += m.count;
    to[m.to] += m.count;
  }
  for (auto v : gamma.flat())
    if (v < 0) return false;
  return from == dropoffs && to == gamma;
}

double RewardSeries::mean_reward() const {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& e : per_snapshot) {
    if (e.empty) continue;
    sum += e.reward;
    ++count;
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

double RewardSeries::fulfilled_fraction() const {
  std::int64_t matched = 0, pickups = 0;
  for (const auto& e : per_snapshot) {
    matched += e.matched;
    pickups += e.pickups;
  }
  return pickups == 0 ? 0.0 : static_cast<double>(matched) / static_cast<double>(pickups);
}

const RewardEntry* RewardSeries::find(std::int64_t snapshot) const {
  auto it = std::lower_bound(per_snapshot.begin(), per_snapshot.end(), snapshot,
                             [](const RewardEntry& e, std::int64_t s) { return e.snapshot < s; });
  return it != per_snapshot.end() && it->snapshot == snapshot ? &*it : nullptr;
}

std::size_t min_series_length(const AlgoParams& params) noexcept {
  return uses_history(params.algorithm) ? static_cast<std::size_t>(params.history_m) + 2 : 2;
}

}  // namespace vplace
