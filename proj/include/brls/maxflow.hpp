#pragma once

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <vector>

namespace brls {

/// Dinic max-flow with real-valued capacities. Residual capacities at or
/// below 1e-12 times the total capacity count as saturated, both while
/// augmenting and when extracting the minimum cut; this keeps the search
/// from chasing float dust.
class MaxFlowGraph {
 public:
  explicit MaxFlowGraph(int node_count)
      : adj_(node_count), level_(node_count), arc_(node_count) {}

  void add_edge(int from, int to, long double capacity) {
    if (capacity < 0) throw std::invalid_argument("negative capacity");
    adj_[from].push_back(static_cast<int>(edges_.size()));
    edges_.push_back({to, capacity});
    adj_[to].push_back(static_cast<int>(edges_.size()));
    edges_.push_back({from, 0.0L});
    total_capacity_ += capacity;
  }

  long double run(int source, int sink) {
    eps_ = 1e-12L * total_capacity_;
    source_ = source;
    long double flow = 0.0L;
    while (bfs_levels(source, sink)) {
      std::fill(arc_.begin(), arc_.end(), 0);
      for (;;) {
        const long double pushed = dfs_push(source, sink, std::numeric_limits<long double>::max());
        if (pushed <= 0.0L) break;
        flow += pushed;
      }
    }
    ran_ = true;
    return flow;
  }

  /// Nodes residual-reachable from the source after run(); the min cut
  /// separates them from the rest.
  std::vector<char> source_side() const {
    if (!ran_) throw std::logic_error("source_side queried before run()");
    std::vector<char> reach(adj_.size(), 0);
    std::vector<int> stack{source_};
    reach[source_] = 1;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      for (const int id : adj_[v]) {
        const Edge& e = edges_[id];
        if (e.cap > eps_ && !reach[e.to]) {
          reach[e.to] = 1;
          stack.push_back(e.to);
        }
      }
    }
    return reach;
  }

 private:
  struct Edge {
    int to;
    long double cap;  // residual capacity
  };

  bool bfs_levels(int s, int t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::vector<int> queue{s};
    level_[s] = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const int v = queue[head];
      for (const int id : adj_[v]) {
        const Edge& e = edges_[id];
        if (e.cap > eps_ && level_[e.to] < 0) {
          level_[e.to] = level_[v] + 1;
          queue.push_back(e.to);
        }
      }
    }
    return level_[t] >= 0;
  }

  long double dfs_push(int v, int t, long double limit) {
    if (v == t) return limit;
    for (int& i = arc_[v]; i < static_cast<int>(adj_[v].size()); ++i) {
      const int id = adj_[v][i];
      Edge& e = edges_[id];
      if (e.cap > eps_ && level_[e.to] == level_[v] + 1) {
        const long double pushed = dfs_push(e.to, t, std::min(limit, e.cap));
        if (pushed > 0.0L) {
          e.cap -= pushed;
          edges_[id ^ 1].cap += pushed;
          return pushed;
        }
      }
    }
    return 0.0L;
  }

  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adj_;
  std::vector<int> level_, arc_;
  long double total_capacity_ = 0.0L;
  long double eps_ = 0.0L;
  int source_ = 0;
  bool ran_ = false;
};

}  // namespace brls
