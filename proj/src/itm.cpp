#include "icac/itm.hpp"

#include <cmath>
#include <cstring>
#include <ostream>
#include <stdexcept>

namespace icac {

double sq_dist(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("sq_dist: dimension mismatch");
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

bool thales_inside(const Vec& a, const Vec& b, const Vec& x) {
  double dot = 0.0;
  for (size_t i = 0; i < x.size(); ++i) dot += (x[i] - a[i]) * (x[i] - b[i]);
  return dot < 0.0;
}

ItmMap::ItmMap(double e_max, NodeInit init) : e_max_(e_max), init_(std::move(init)) {}

ItmMap ItmMap::initialize(const Vec& phi1, const Vec& phi2, double e_max, NodeInit init) {
  for (double v : phi1)
    if (!std::isfinite(v)) throw std::invalid_argument("initialize: non-finite stimulus");
  for (double v : phi2)
    if (!std::isfinite(v)) throw std::invalid_argument("initialize: non-finite stimulus");
  ItmMap map(e_max, std::move(init));
  int a = map.add_node(phi1);
  int b = map.add_node(phi2);
  map.add_edge(a, b);
  return map;
}

int ItmMap::insert_node(const Vec& w) { return add_node(w); }

MatchResult ItmMap::find_matching(const Vec& phi) const {
  if (nodes_.empty()) throw std::runtime_error("find_matching: empty map");
  MatchResult r;
  double best = 0.0, second = 0.0;
  for (const auto& [id, node] : nodes_) {  // id order: ties go to smaller id
    double d = sq_dist(phi, node.w);
    if (r.nearest < 0 || d < best) {
      if (r.nearest >= 0) {
        r.second = r.nearest;
        second = best;
      }
      r.nearest = id;
      best = d;
    } else if (r.second < 0 || d < second) {
      r.second = id;
      second = d;
    }
  }
  return r;
}

ItmMap::AdaptResult ItmMap::adapt(const Vec& phi) {
  if (nodes_.empty()) throw std::runtime_error("adapt: empty map");
  AdaptResult res;

  // Step 1: matching.
  MatchResult m = find_matching(phi);
  int n = m.nearest, n2 = m.second;

  if (n2 >= 0) {
    // Step 2: edge adaptation. Connect n and n', then drop every edge n-m
    // whose endpoint m puts n' strictly inside the Thales sphere through m
    // and n; m itself goes too once edgeless.
    add_edge(n, n2);
    const Vec& wn = node(n).w;
    const Vec& wn2 = node(n2).w;
    std::vector<int> neigh(node(n).neighbors.begin(), node(n).neighbors.end());
    for (int mid : neigh) {
      // (w_m - w_n') . (w_m - w_n) < 0
      if (thales_inside(wn2, wn, node(mid).w)) {
        remove_edge(n, mid);
        if (node(mid).neighbors.empty()) {
          remove_node(mid);
          res.removed.push_back(mid);
        }
      }
    }

    // Step 3: node adaptation. phi outside the Thales sphere through n and
    // n' and farther than e_max from n spawns a new node edged to n.
    double dot = 0.0;
    for (size_t i = 0; i < phi.size(); ++i) dot += (wn[i] - phi[i]) * (wn2[i] - phi[i]);
    if (dot > 0.0 && sq_dist(phi, wn) > e_max_) {
      int v = add_node(phi);
      add_edge(v, n);
      res.owner = v;
      res.created = true;
      return res;
    }
  }

  res.owner = n;
  return res;
}

ItmNode& ItmMap::node(int id) {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw std::out_of_range("no such node: " + std::to_string(id));
  return it->second;
}

const ItmNode& ItmMap::node(int id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw std::out_of_range("no such node: " + std::to_string(id));
  return it->second;
}

size_t ItmMap::edge_count() const {
  size_t n = 0;
  for (const auto& [id, node] : nodes_) n += node.neighbors.size();
  return n / 2;
}

int ItmMap::add_node(const Vec& w) {
  int id = next_id_++;
  ItmNode node;
  node.id = id;
  node.w = w;
  if (init_) init_(node);
  nodes_.emplace(id, std::move(node));
  return id;
}

void ItmMap::remove_node(int id) {
  for (int nb : node(id).neighbors) nodes_.at(nb).neighbors.erase(id);
  nodes_.erase(id);
}

void ItmMap::add_edge(int a, int b) {
  if (a == b) return;
  nodes_.at(a).neighbors.insert(b);
  nodes_.at(b).neighbors.insert(a);
}

void ItmMap::remove_edge(int a, int b) {
  nodes_.at(a).neighbors.erase(b);
  nodes_.at(b).neighbors.erase(a);
}

uint64_t ItmMap::topology_hash() const {
  uint64_t h = 0xcbf29ce484222325ull;
  auto eat_u64 = [&h](uint64_t bits) {
    for (int k = 0; k < 8; ++k) {
      h ^= (bits >> (8 * k)) & 0xff;
      h *= 0x100000001b3ull;
    }
  };
  for (const auto& [id, node] : nodes_) {
    eat_u64(static_cast<uint64_t>(id));
    for (double v : node.w) {
      uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      eat_u64(bits);
    }
    for (int nb : node.neighbors) eat_u64(static_cast<uint64_t>(nb));
  }
  return h;
}

// Layout:
//   itm_snapshot 1
//   nodes <count>
//   <id> <avg_err> <lp> <train_count> <w...>
//   edges <count>
//   <id_a> <id_b>
void ItmMap::write_snapshot(std::ostream& os) const {
  os << "itm_snapshot 1\n";
  os << "nodes " << nodes_.size() << "\n";
  os.precision(17);
  for (const auto& [id, node] : nodes_) {
    os << id << " " << moving_average(node.stats) << " " << learning_progress(node.stats)
       << " " << node.stats.train_count;
    for (double v : node.w) os << " " << v;
    os << "\n";
  }
  os << "edges " << edge_count() << "\n";
  for (const auto& [id, node] : nodes_)
    for (int nb : node.neighbors)
      if (id < nb) os << id << " " << nb << "\n";
}

}  // namespace icac
