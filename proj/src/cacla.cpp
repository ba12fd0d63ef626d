#include "icac/cacla.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace icac {

ActorCritic make_actor_critic(int latent_dim, int action_dim, int hidden,
                              double lr_actor, double lr_critic, double gamma,
                              double tau, double sigma_policy, Rng& rng) {
  ActorCritic ac;
  ac.latent_dim = latent_dim;
  ac.action_dim = action_dim;
  ac.gamma = gamma;
  ac.tau = tau;
  ac.sigma_policy = sigma_policy;
  ac.actor = make_net({latent_dim, hidden, action_dim}, {Act::relu, Act::tanh}, rng);
  ac.critic = make_net({latent_dim, hidden, 1}, {Act::relu, Act::linear}, rng);
  ac.target_critic = ac.critic;
  ac.actor_opt = AdamState::for_net(ac.actor, lr_actor);
  ac.critic_opt = AdamState::for_net(ac.critic, lr_critic);
  return ac;
}

Vec policy_mean(const ActorCritic& ac, const Vec& phi) { return forward(ac.actor, phi); }

Vec policy_sample(const ActorCritic& ac, const Vec& phi, Rng& rng) {
  Vec a = forward(ac.actor, phi);
  for (double& v : a) {
    v += ac.sigma_policy * rng.normal();
    v = std::clamp(v, -1.0, 1.0);
  }
  return a;
}

TdResult td_error(const ActorCritic& ac, const LatentTransition& tr) {
  TdResult r;
  r.target = tr.r;
  if (!tr.terminal) r.target += ac.gamma * forward(ac.target_critic, tr.phi_next)[0];
  r.delta = r.target - forward(ac.critic, tr.phi)[0];
  return r;
}

namespace {

void pack(const std::vector<const LatentTransition*>& batch, bool next, int dim,
          Matrix& m) {
  m.reshape(static_cast<int>(batch.size()), dim);
  for (size_t i = 0; i < batch.size(); ++i) {
    const Vec& src = next ? batch[i]->phi_next : batch[i]->phi;
    if (static_cast<int>(src.size()) != dim)
      throw std::invalid_argument("latent batch: dimension mismatch");
    std::copy(src.begin(), src.end(), m.row(static_cast<int>(i)));
  }
}

struct CaclaScratch {
  Matrix x, xn, dy;
  BatchTrace trace;
  GradientSet grads;
  std::vector<const LatentTransition*> gated;
};

CaclaScratch& scratch() {
  static thread_local CaclaScratch ws;
  return ws;
}

}  // namespace

CriticUpdateResult critic_update(ActorCritic& ac,
                                 const std::vector<const LatentTransition*>& batch,
                                 const std::vector<double>& weights) {
  CriticUpdateResult res;
  if (batch.empty()) return res;
  if (weights.size() != batch.size())
    throw std::invalid_argument("critic_update: weight count mismatch");
  const int k = static_cast<int>(batch.size());
  CaclaScratch& ws = scratch();

  pack(batch, false, ac.latent_dim, ws.x);
  pack(batch, true, ac.latent_dim, ws.xn);
  Matrix vn = forward_batch(ac.target_critic, ws.xn);
  const Matrix& v = forward_batch(ac.critic, ws.x, ws.trace);

  ws.dy.reshape(k, 1);
  res.abs_td.resize(k);
  for (int i = 0; i < k; ++i) {
    double target = batch[i]->r;
    if (!batch[i]->terminal) target += ac.gamma * vn.at(i, 0);
    double err = v.at(i, 0) - target;
    res.loss += weights[i] * err * err;
    res.abs_td[i] = std::fabs(err);
    ws.dy.at(i, 0) = 2.0 * weights[i] * err / k;
  }
  res.loss /= k;

  ws.grads.reset_like(ac.critic);
  backward_batch(ac.critic, ws.trace, ws.dy, ws.grads, /*want_input_grad=*/false);
  adam_update(ac.critic, ws.grads, ac.critic_opt);
  return res;
}

ActorUpdateResult actor_update(ActorCritic& ac,
                               const std::vector<const LatentTransition*>& batch) {
  ActorUpdateResult res;
  if (batch.empty()) return res;
  CaclaScratch& ws = scratch();

  // Gate on the TD error under the current critic pair.
  pack(batch, false, ac.latent_dim, ws.x);
  pack(batch, true, ac.latent_dim, ws.xn);
  Matrix v = forward_batch(ac.critic, ws.x);
  Matrix vn = forward_batch(ac.target_critic, ws.xn);
  ws.gated.clear();
  for (size_t i = 0; i < batch.size(); ++i) {
    double target = batch[i]->r;
    if (!batch[i]->terminal) target += ac.gamma * vn.at(static_cast<int>(i), 0);
    if (target - v.at(static_cast<int>(i), 0) > 0.0) ws.gated.push_back(batch[i]);
  }
  res.updated = static_cast<int>(ws.gated.size());
  if (ws.gated.empty()) return res;

  const int m = static_cast<int>(ws.gated.size());
  pack(ws.gated, false, ac.latent_dim, ws.x);
  const Matrix& out = forward_batch(ac.actor, ws.x, ws.trace);

  ws.dy.reshape(m, ac.action_dim);
  for (int i = 0; i < m; ++i) {
    const Vec& a = ws.gated[i]->a;
    if (static_cast<int>(a.size()) != ac.action_dim)
      throw std::invalid_argument("actor_update: action dimension mismatch");
    for (int j = 0; j < ac.action_dim; ++j) {
      double err = out.at(i, j) - a[j];
      res.loss += err * err;
      ws.dy.at(i, j) = 2.0 * err / m;
    }
  }
  res.loss /= m;

  ws.grads.reset_like(ac.actor);
  backward_batch(ac.actor, ws.trace, ws.dy, ws.grads, /*want_input_grad=*/false);
  adam_update(ac.actor, ws.grads, ac.actor_opt);
  return res;
}

void soft_update(ActorCritic& ac) {
  soft_update_params(ac.target_critic, ac.critic, ac.tau);
}

void soft_update(ActorCritic& ac, const DenseNet& encoder, DenseNet& target_encoder) {
  soft_update_params(ac.target_critic, ac.critic, ac.tau);
  soft_update_params(target_encoder, encoder, ac.tau);
}

}  // namespace icac
