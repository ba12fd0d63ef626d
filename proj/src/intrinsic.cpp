#include "icac/intrinsic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "icac/itm.hpp"

namespace icac {

double moving_average(const NodeStats& stats) { return stats.errors.mean(); }

double learning_progress(const NodeStats& stats) {
  size_t w = stats.scale_history.capacity();
  if (stats.avg_history.size() <= w) return 0.0;
  return std::fabs(stats.avg_history.back() - stats.avg_history.from_back(w));
}

LocalModelPair make_local_models(int latent_dim, int action_dim, int hidden, double lr,
                                 Rng& rng) {
  LocalModelPair p;
  p.latent_dim = latent_dim;
  p.action_dim = action_dim;
  p.net = make_net({latent_dim + action_dim, hidden, latent_dim + 1},
                   {Act::tanh, Act::linear}, rng);
  p.opt = AdamState::for_net(p.net, lr);
  return p;
}

namespace {

Vec join_input(const LocalModelPair& pair, const Vec& phi, const Vec& action) {
  if (static_cast<int>(phi.size()) != pair.latent_dim ||
      static_cast<int>(action.size()) != pair.action_dim)
    throw std::invalid_argument("local model: latent/action dimension mismatch");
  Vec in;
  in.reserve(phi.size() + action.size());
  in.insert(in.end(), phi.begin(), phi.end());
  in.insert(in.end(), action.begin(), action.end());
  return in;
}

}  // namespace

Prediction predict(const LocalModelPair& pair, const Vec& phi, const Vec& action) {
  Vec out = forward(pair.net, join_input(pair, phi, action));
  Prediction pred;
  pred.phi_next.assign(out.begin(), out.begin() + pair.latent_dim);
  pred.reward = out.back();
  return pred;
}

double train_local(LocalModelPair& pair, NodeStats& stats, const Vec& phi,
                   const Vec& action, double reward, const Vec& phi_next, int steps) {
  Vec in = join_input(pair, phi, action);
  if (static_cast<int>(phi_next.size()) != pair.latent_dim)
    throw std::invalid_argument("train_local: phi_next dimension mismatch");
  Vec target = phi_next;
  target.push_back(reward);

  // e_prd with the current parameters; the summed head losses coincide with
  // the squared error on the concatenated output.
  double e_prd = 0.0;
  {
    Vec out = forward(pair.net, in);
    for (size_t i = 0; i < out.size(); ++i) {
      double d = out[i] - target[i];
      e_prd += d * d;
    }
  }
  for (int s = 0; s < steps; ++s) {
    auto r = mse_and_grad(pair.net, in, target);
    adam_update(pair.net, r.grads, pair.opt);
  }
  stats.push_error(e_prd);
  stats.train_count++;
  return e_prd;
}

IntrinsicRewardResult IntrinsicReward::compute(double lp, const Vec& phi_next,
                                               const ItmMap& map) {
  auto match = map.find_matching(phi_next);
  double e_per = sq_dist(phi_next, map.node(match.nearest).w);
  IntrinsicRewardResult r;
  r.raw = lp + e_per;
  if (mode_ == Scaling::raw) {
    r.scaled = r.raw;
    return r;
  }
  max_raw_ = std::max(max_raw_, r.raw);
  double unit = max_raw_ > 0.0 ? std::clamp(r.raw / max_raw_, 0.0, 1.0) : 0.0;
  r.scaled = mode_ == Scaling::signed_max ? 2.0 * unit - 1.0 : unit;
  return r;
}

}  // namespace icac
