#pragma once

#include <cstdint>
#include <vector>

#include "icac/nets.hpp"
#include "icac/rng.hpp"

namespace icac {

class ItmMap;

// Fixed-capacity ring of the most recent values.
class RingBuffer {
 public:
  RingBuffer() = default;
  explicit RingBuffer(size_t cap) : cap_(cap) { v_.reserve(cap); }

  void push(double x) {
    if (cap_ == 0) return;
    if (v_.size() < cap_) {
      v_.push_back(x);
    } else {
      v_[head_] = x;
      head_ = (head_ + 1) % cap_;
    }
  }

  size_t size() const { return v_.size(); }
  size_t capacity() const { return cap_; }

  // k = 0 is the newest entry.
  double from_back(size_t k) const {
    size_t idx = (head_ + v_.size() - 1 - k) % v_.size();
    return v_[idx];
  }

  double back() const { return from_back(0); }

  double mean() const {
    if (v_.empty()) return 0.0;
    double s = 0.0;
    for (double x : v_) s += x;
    return s / static_cast<double>(v_.size());
  }

  double max() const {
    if (v_.empty()) return 0.0;
    double m = v_[0];
    for (double x : v_) m = std::max(m, x);
    return m;
  }

 private:
  std::vector<double> v_;
  size_t cap_ = 0, head_ = 0;
};

// Per-region prediction-error bookkeeping: the sigma-window of recent
// combined errors, the history of their moving average (for learning
// progress over the last W pushes), and the last-W averages used by the
// imagination gate's max-scaling.
struct NodeStats {
  RingBuffer errors;
  RingBuffer avg_history;
  RingBuffer scale_history;
  uint64_t error_count = 0;
  uint64_t train_count = 0;

  NodeStats() = default;
  NodeStats(size_t sigma_window, size_t lp_window)
      : errors(sigma_window), avg_history(lp_window + 1), scale_history(lp_window) {}

  void push_error(double e) {
    errors.push(e);
    error_count++;
    double avg = errors.mean();
    avg_history.push(avg);
    scale_history.push(avg);
  }
};

// Mean of the up-to-sigma most recent errors; 0 with no history.
double moving_average(const NodeStats& stats);

// |<e> now - <e> W pushes ago|; 0 while the history is shorter than that.
double learning_progress(const NodeStats& stats);

// Local dynamics + reward model of one region. One hidden tanh trunk feeds
// a next-latent head and a reward head; both heads are realized as a single
// linear output layer of latent_dim+1 units, which is the same
// parameterization.
struct LocalModelPair {
  DenseNet net;
  AdamState opt;
  int latent_dim = 0;
  int action_dim = 0;

  bool valid() const { return !net.layers.empty(); }
};

LocalModelPair make_local_models(int latent_dim, int action_dim, int hidden, double lr,
                                 Rng& rng);

struct Prediction {
  Vec phi_next;
  double reward = 0.0;
};

// Single trunk evaluation, both heads.
Prediction predict(const LocalModelPair& pair, const Vec& phi, const Vec& action);

// Combined prediction error of the pair on one transition:
// ||M(phi,a) - phi_next||^2 + (R(phi,a) - r)^2, measured BEFORE the update
// (the deployed model's accuracy), then `steps` Adam steps on the summed
// head losses. Pushes the error into stats and returns it.
double train_local(LocalModelPair& pair, NodeStats& stats, const Vec& phi,
                   const Vec& action, double reward, const Vec& phi_next, int steps);

struct IntrinsicRewardResult {
  double raw = 0.0;     // LP + perception error
  double scaled = 0.0;  // mapped onto [-1, 1]
};

// r_int = LP + ||phi_next - w_m||^2 with m the nearest map node, normalized
// by the running maximum raw value seen so far (monotone, online).
//
// unit_max, the default, emits the normalized value in [0, 1]: a pure
// novelty/progress bonus. signed_max additionally maps it onto [-1, 1] via
// 2x-1; once the early novelty burst has pinned the running max, that
// variant degenerates into a near-constant -1 step penalty that drowns the
// sparse task reward, so it is kept only as a switch. raw skips scaling.
class IntrinsicReward {
 public:
  enum class Scaling { unit_max, signed_max, raw };

  explicit IntrinsicReward(Scaling mode = Scaling::unit_max) : mode_(mode) {}

  IntrinsicRewardResult compute(double lp, const Vec& phi_next, const ItmMap& map);

  double max_raw() const { return max_raw_; }

 private:
  Scaling mode_;
  double max_raw_ = 0.0;
};

}  // namespace icac
