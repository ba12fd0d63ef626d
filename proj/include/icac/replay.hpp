#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "icac/nets.hpp"
#include "icac/rng.hpp"

namespace icac {

// Raw-observation transition. Observations are stored as float to halve the
// pixel buffer footprint; values are in [0,1] so the narrowing is harmless.
struct PixelTransition {
  std::vector<float> s;
  Vec a;
  double r = 0.0;
  std::vector<float> s_next;
  bool terminal = false;
};

// Latent-space transition; covers both real and imagined experiences.
// Imagined entries may only be produced by the imagination rollouts and keep
// their rollout depth for diagnostics.
struct LatentTransition {
  Vec phi;
  Vec a;
  double r = 0.0;
  Vec phi_next;
  bool terminal = false;
  bool imagined = false;
  int depth = 0;
};

// Proportional prioritized replay: fixed-capacity ring plus a sum-tree over
// p_i^alpha, stratified sampling, importance weights (N*P)^-beta normalized
// by the batch max. New items take the running max priority.
template <class T>
class PrioritizedBuffer {
 public:
  struct Ref {
    size_t slot = 0;
    uint64_t id = 0;
  };

  struct Batch {
    std::vector<const T*> items;
    std::vector<Ref> refs;
    std::vector<double> weights;
  };

  PrioritizedBuffer(size_t capacity, double alpha, double beta0)
      : capacity_(capacity), alpha_(alpha), beta0_(beta0), beta_(beta0) {
    if (capacity == 0) throw std::invalid_argument("PrioritizedBuffer: zero capacity");
    cap2_ = 1;
    while (cap2_ < capacity_) cap2_ <<= 1;
    tree_.assign(2 * cap2_, 0.0);
    data_.resize(capacity_);
    ids_.assign(capacity_, 0);
    prio_.assign(capacity_, 0.0);
  }

  Ref store(T item) {
    size_t slot = next_ % capacity_;
    next_++;
    size_ = std::min(size_ + 1, capacity_);
    data_[slot] = std::move(item);
    ids_[slot] = ++last_id_;
    prio_[slot] = max_prio_;
    set_leaf(slot, std::pow(max_prio_, alpha_));
    return {slot, ids_[slot]};
  }

  // Stratified draw of k items. P(i) = p_i^alpha / sum_j p_j^alpha.
  Batch sample(size_t k, Rng& rng) {
    if (size_ == 0) throw std::runtime_error("PrioritizedBuffer::sample: empty buffer");
    Batch out;
    out.items.reserve(k);
    out.refs.reserve(k);
    out.weights.reserve(k);
    const double total = tree_[1];
    double max_w = 0.0;
    for (size_t i = 0; i < k; ++i) {
      double u = (static_cast<double>(i) + rng.uniform()) / static_cast<double>(k) * total;
      size_t slot = descend(u);
      double p = tree_[cap2_ + slot] / total;
      double w = std::pow(static_cast<double>(size_) * std::max(p, 1e-300), -beta_);
      out.items.push_back(&data_[slot]);
      out.refs.push_back({slot, ids_[slot]});
      out.weights.push_back(w);
      max_w = std::max(max_w, w);
    }
    if (max_w > 0.0)
      for (double& w : out.weights) w /= max_w;
    return out;
  }

  // p_i <- |delta_i| + floor. Stale refs (slot overwritten since sampling)
  // are skipped and counted.
  void update_priorities(const std::vector<Ref>& refs, const std::vector<double>& abs_td) {
    if (refs.size() != abs_td.size())
      throw std::invalid_argument("update_priorities: size mismatch");
    for (size_t i = 0; i < refs.size(); ++i) {
      const Ref& r = refs[i];
      if (r.slot >= capacity_ || ids_[r.slot] != r.id) {
        stale_++;
        continue;
      }
      double p = std::fabs(abs_td[i]) + kPriorityFloor;
      prio_[r.slot] = p;
      max_prio_ = std::max(max_prio_, p);
      set_leaf(r.slot, std::pow(p, alpha_));
    }
  }

  // beta = beta0 + f*(1 - beta0), f clamped to [0,1].
  void set_progress(double f) {
    f = std::clamp(f, 0.0, 1.0);
    beta_ = beta0_ + f * (1.0 - beta0_);
  }

  size_t size() const { return size_; }
  size_t capacity() const { return capacity_; }
  double beta() const { return beta_; }
  double alpha() const { return alpha_; }
  double tree_root() const { return tree_[1]; }
  double priority(size_t slot) const { return prio_[slot]; }
  double leaf(size_t slot) const { return tree_[cap2_ + slot]; }
  const T& at(size_t slot) const { return data_[slot]; }
  uint64_t stale_update_count() const { return stale_; }
  double max_priority() const { return max_prio_; }

  static constexpr double kPriorityFloor = 1e-5;

 private:
  void set_leaf(size_t slot, double value) {
    size_t node = cap2_ + slot;
    tree_[node] = value;
    node >>= 1;
    while (node >= 1) {
      tree_[node] = tree_[2 * node] + tree_[2 * node + 1];
      if (node == 1) break;
      node >>= 1;
    }
  }

  size_t descend(double u) const {
    size_t node = 1;
    while (node < cap2_) {
      size_t left = 2 * node;
      if (u <= tree_[left] || tree_[left + 1] <= 0.0) {
        node = left;
      } else {
        u -= tree_[left];
        node = left + 1;
      }
    }
    size_t slot = node - cap2_;
    return std::min(slot, size_ - 1);
  }

  std::vector<double> tree_;
  std::vector<T> data_;
  std::vector<uint64_t> ids_;
  std::vector<double> prio_;
  size_t capacity_, cap2_, size_ = 0, next_ = 0;
  uint64_t last_id_ = 0, stale_ = 0;
  double alpha_, beta0_, beta_;
  double max_prio_ = 1.0;
};

}  // namespace icac
