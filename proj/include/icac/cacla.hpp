#pragma once

#include <vector>

#include "icac/nets.hpp"
#include "icac/replay.hpp"
#include "icac/rng.hpp"

namespace icac {

// Continuous actor-critic learning automaton: tanh-output actor, linear
// scalar critic with a slowly tracking target copy, Gaussian exploration.
struct ActorCritic {
  DenseNet actor;
  DenseNet critic;
  DenseNet target_critic;
  AdamState actor_opt;
  AdamState critic_opt;
  double gamma = 0.99;
  double tau = 1e-3;
  double sigma_policy = 0.35;
  int latent_dim = 0;
  int action_dim = 0;
};

ActorCritic make_actor_critic(int latent_dim, int action_dim, int hidden,
                              double lr_actor, double lr_critic, double gamma,
                              double tau, double sigma_policy, Rng& rng);

// a = Ac(phi) + eps, eps ~ N(0, sigma^2 I), then clipped to [-1,1] per
// component. The environment owns the mapping to physical ranges.
Vec policy_sample(const ActorCritic& ac, const Vec& phi, Rng& rng);
Vec policy_mean(const ActorCritic& ac, const Vec& phi);

struct TdResult {
  double delta = 0.0;   // target - V(phi)
  double target = 0.0;  // r + gamma*V'(phi') when non-terminal, else r
};

TdResult td_error(const ActorCritic& ac, const LatentTransition& tr);

struct CriticUpdateResult {
  double loss = 0.0;           // importance-weighted mean, pre-update
  std::vector<double> abs_td;  // per sample, for priority refresh
};

// One Adam step on the critic minimizing the weighted mean squared TD
// target error. Empty batch is a no-op.
CriticUpdateResult critic_update(ActorCritic& ac,
                                 const std::vector<const LatentTransition*>& batch,
                                 const std::vector<double>& weights);

struct ActorUpdateResult {
  int updated = 0;     // samples with delta > 0
  double loss = 0.0;   // mean ||a - Ac(phi)||^2 over the gated samples
};

// Regression of the actor toward the taken actions, restricted to samples
// whose TD error is positive. No qualifying sample means no parameter
// change at all.
ActorUpdateResult actor_update(ActorCritic& ac,
                               const std::vector<const LatentTransition*>& batch);

// p' <- tau*p + (1-tau)*p' for the target critic (and the target encoder
// when given; both targets move at the same rate).
void soft_update(ActorCritic& ac);
void soft_update(ActorCritic& ac, const DenseNet& encoder, DenseNet& target_encoder);

}  // namespace icac
