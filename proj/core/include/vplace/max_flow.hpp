#pragma once

#include <cstdint>
#include <limits>
#include <vector>

namespace vplace {

/// Dinic's algorithm on an integer-capacity directed graph.
class MaxFlow {
 public:
  static constexpr std::int64_t kInfinite = std::numeric_limits<std::int64_t>::max() / 4;

  explicit MaxFlow(int nodes);

  /// Adds edge u -> v; returns its id for flow_on().
  int add_edge(int u, int v, std::int64_t capacity);

  std::int64_t solve(int source, int sink);

  /// Flow routed through edge `id` after solve().
  std::int64_t flow_on(int id) const;

  int node_count() const noexcept { return static_cast<int>(adjacency_.size()); }

 private:
  struct Edge {
    int to;
    std::int64_t capacity;  // residual
    std::int64_t original;
  };

  bool build_levels(int source, int sink);
  std::int64_t push(int u, int sink, std::int64_t limit);

  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adjacency_;
  std::vector<int> level_;
  std::vector<std::size_t> cursor_;
};

}  // namespace vplace
