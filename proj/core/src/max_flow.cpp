#include "vplace/max_flow.hpp"

#include <algorithm>
#include <queue>

#include "vplace/error.hpp"

namespace vplace {

MaxFlow::MaxFlow(int nodes) {
  if (nodes < 2) throw InputError("max flow graph needs at least 2 nodes");
  adjacency_.resize(static_cast<std::size_t>(nodes));
}

int MaxFlow::add_edge(int u, int v, std::int64_t capacity) {
  if (u < 0 || v < 0 || u >= node_count() || v >= node_count()) throw InputError("max flow edge endpoint out of range");
  if (capacity < 0) throw InputError("max flow capacity must be >= 0");
  const int id = static_cast<int>(edges_.size());
  edges_.push_back({v, capacity, capacity});
  edges_.push_back({u, 0, 0});
  adjacency_[static_cast<std::size_t>(u)].push_back(id);
  adjacency_[static_cast<std::size_t>(v)].push_back(id + 1);
  return id;
}

bool MaxFlow::build_levels(int source, int sink) {
  level_.assign(adjacency_.size(), -1);
  std::queue<int> q;
  level_[static_cast<std::size_t>(source)] = 0;
  q.push(source);
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int id : adjacency_[static_cast<std::size_t>(u)]) {
      const Edge& e = edges_[static_cast<std::size_t>(id)];
      if (e.capacity > 0 && level_[static_cast<std::size_t>(e.to)] < 0) {
        level_[static_cast<std::size_t>(e.to)] = level_[static_cast<std::size_t>(u)] + 1;
        q.push(e.to);
      }
    }
  }
  return level_[static_cast<std::size_t>(sink)] >= 0;
}

std::int64_t MaxFlow::push(int u, int sink, std::int64_t limit) {
  if (u == sink) return limit;
  auto& adj = adjacency_[static_cast<std::size_t>(u)];
  for (auto& i = cursor_[static_cast<std::size_t>(u)]; i < adj.size(); ++i) {
    const int id = adj[i];
    Edge& e = edges_[static_cast<std::size_t>(id)];
    if (e.capacity <= 0 || level_[static_cast<std::size_t>(e.to)] != level_[static_cast<std::size_t>(u)] + 1) continue;
    const std::int64_t pushed = push(e.to, sink, std::min(limit, e.capacity));
    if (pushed > 0) {
      e.capacity -= pushed;
      edges_[static_cast<std::size_t>(id ^ 1)].capacity += pushed;
      return pushed;
    }
  }
  return 0;
}

std::int64_t MaxFlow::solve(int source, int sink) {
  if (source == sink) throw InputError("max flow source equals sink");
  std::int64_t total = 0;
  while (build_levels(source, sink)) {
    cursor_.assign(adjacency_.size(), 0);
    while (const std::int64_t f = push(source, sink, kInfinite)) total += f;
  }
  return total;
}

std::int64_t MaxFlow::flow_on(int id) const {
  const Edge& e = edges_.at(static_cast<std::size_t>(id));
  return e.original - e.capacity;
}

}  // namespace vplace
