#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <set>
#include <vector>

#include "icac/intrinsic.hpp"
#include "icac/nets.hpp"

namespace icac {

double sq_dist(const Vec& a, const Vec& b);

// x strictly inside the sphere with diameter ab iff (x-a).(x-b) < 0.
bool thales_inside(const Vec& a, const Vec& b, const Vec& x);

// Map node: weight vector, symmetric adjacency, and the region's error
// stats and local models. Weights never move after creation.
struct ItmNode {
  int id = -1;
  Vec w;
  std::set<int> neighbors;
  NodeStats stats;
  LocalModelPair models;
};

struct MatchResult {
  int nearest = -1;
  int second = -1;  // -1 when the map has a single node
};

// Instantaneous topological map. Nodes are created by the adaptation rule
// only; ids are never reused. All ties break toward the smallest id.
class ItmMap {
 public:
  // Applied to every freshly created node (sets up stats windows and local
  // models). Defaults to leaving the node bare, which topology-only tests
  // rely on.
  using NodeInit = std::function<void(ItmNode&)>;

  explicit ItmMap(double e_max, NodeInit init = {});

  // Two connected nodes carrying the first two stimuli.
  static ItmMap initialize(const Vec& phi1, const Vec& phi2, double e_max,
                           NodeInit init = {});

  // Insert a bare, edgeless node. Training always goes through initialize()
  // and adapt(); this exists for fixtures and offline map surgery.
  int insert_node(const Vec& w);

  MatchResult find_matching(const Vec& phi) const;

  struct AdaptResult {
    int owner = -1;
    bool created = false;
    std::vector<int> removed;
  };

  // Matching, edge adaptation, node adaptation. Returns the node owning phi
  // after adaptation: the created node if any, else the nearest.
  AdaptResult adapt(const Vec& phi);

  const std::map<int, ItmNode>& nodes() const { return nodes_; }
  ItmNode& node(int id);
  const ItmNode& node(int id) const;
  bool has_node(int id) const { return nodes_.count(id) != 0; }
  size_t node_count() const { return nodes_.size(); }
  size_t edge_count() const;
  double e_max() const { return e_max_; }

  // Hash of ids, weights and edges; imagination must leave it unchanged.
  uint64_t topology_hash() const;

  // Text snapshot: nodes with weights and error stats, then edges.
  void write_snapshot(std::ostream& os) const;

 private:
  int add_node(const Vec& w);
  void remove_node(int id);
  void add_edge(int a, int b);
  void remove_edge(int a, int b);

  std::map<int, ItmNode> nodes_;
  double e_max_;
  int next_id_ = 0;
  NodeInit init_;
};

}  // namespace icac
