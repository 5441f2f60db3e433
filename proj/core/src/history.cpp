#include <algorithm>

#include "vplace/placement.hpp"

namespace vplace {

HistoryState::HistoryState(const GridSpec& grid, double tau, Mode mode, int window)
    : grid_(grid), tau_(tau), mode_(mode), window_(window), counts_(grid.rows, grid.cols) {
  grid.validate();
  if (!(tau > 0.0)) throw InputError("history tau must be > 0");
  if (mode == Mode::windowed && window < 1) throw InputError("windowed history needs window >= 1");
}

void HistoryState::push(const Snapshot& s) {
  if (s.dropoffs.rows() != grid_.rows || s.dropoffs.cols() != grid_.cols || !s.pickups.same_shape(s.dropoffs))
    throw InputError("history snapshot shape differs from grid");
  if (last_ && s.index != *last_ + 1) throw InputError("history snapshots must be pushed in index order");

  if (!first_) first_ = s.index;
  last_ = s.index;
  ++pushed_;

  auto acc = counts_.flat();
  auto d = s.dropoffs.flat();
  auto p = s.pickups.flat();

  if (mode_ == Mode::complete) {
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += d[k] + p[k];
    return;
  }

  Entry e{s.index, CountMatrix(grid_.rows, grid_.cols), {}};
  auto comb = e.combined.flat();
  for (std::size_t k = 0; k < acc.size(); ++k) {
    comb[k] = d[k] + p[k];
    acc[k] += comb[k];
  }
  if (!s.events.empty()) {
    e.events.reserve(s.events.size());
    for (const auto& ev : s.events) e.events.emplace_back(ev.cell, ev.time);
  } else {
    const double slot_start = static_cast<double>(s.slot) * tau_;
    for (std::size_t k = 0; k < comb.size(); ++k)
      for (std::int64_t j = 0; j < comb[k]; ++j)
        e.events.emplace_back(static_cast<std::uint32_t>(k),
                              slot_start + (static_cast<double>(j) + 0.5) * tau_ / static_cast<double>(comb[k]));
  }
  entries_.push_back(std::move(e));

  while (entries_.size() > static_cast<std::size_t>(window_)) {
    auto old = entries_.front().combined.flat();
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] -= old[k];
    entries_.pop_front();
    first_ = entries_.front().index;
  }
}

std::optional<std::pair<std::int64_t, std::int64_t>> HistoryState::window() const {
  if (!first_) return std::nullopt;
  return std::pair{*first_, *last_};
}

std::vector<double> HistoryState::event_times(std::size_t cell) const {
  if (mode_ != Mode::windowed) throw InputError("event times are only tracked in windowed mode");
  std::vector<double> times;
  for (const auto& e : entries_)
    for (const auto& [c, t] : e.events)
      if (c == cell) times.push_back(t);
  std::sort(times.begin(), times.end());
  return times;
}

std::vector<std::optional<double>> HistoryState::rate_estimates(int min_samples) const {
  if (mode_ != Mode::windowed) throw InputError("rate estimates need windowed history");
  const std::size_t n = grid_.cell_count();
  std::vector<std::optional<double>> rates(n);
  std::vector<std::vector<double>> times(n);
  auto m = counts_.flat();
  for (const auto& e : entries_)
    for (const auto& [c, t] : e.events)
      if (m[c] > min_samples) times[c].push_back(t);
  for (std::size_t k = 0; k < n; ++k) {
    if (times[k].empty()) continue;
    std::sort(times[k].begin(), times[k].end());
    rates[k] = rate_from_arrivals(times[k]);
  }
  return rates;
}

}  // namespace vplace
