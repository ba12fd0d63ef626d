#pragma once

#include "icac/cacla.hpp"
#include "icac/itm.hpp"
#include "icac/replay.hpp"
#include "icac/rng.hpp"

namespace icac {

// Current <e_prd> scaled to [0,1] by its maximum over the node's last-W
// window; 0 when that maximum is 0.
double scale_error(const NodeStats& stats);

struct ImaginationConfig {
  int d_max = 7;
  // Nodes with fewer recorded real errors than this are treated as fully
  // unreliable (gate closed); fresh models have no accuracy evidence.
  int warmup_errors = 5;
};

// Learning-adaptive rollout from phi_start in the region of node_id: while
// c ~ U[0,1] stays below 1 - scaled<e> and the depth budget remains, sample
// an action from the policy (exploration noise included), predict the next
// latent and reward with the current node's local models, store the imagined
// transition in the latent buffer, re-match the best node for the predicted
// latent (matching only; imagination never adapts the map), and continue.
// Returns the number of transitions generated (<= d_max).
int la_imagination(const Vec& phi_start, int node_id, const ItmMap& map,
                   const ActorCritic& policy, const ImaginationConfig& cfg, Rng& rng,
                   PrioritizedBuffer<LatentTransition>& latent_buffer);

// Ablation baseline: identical rollout mechanics with the acceptance test
// forced true, so exactly d_max transitions regardless of prediction errors.
int static_imagination(const Vec& phi_start, int node_id, const ItmMap& map,
                       const ActorCritic& policy, const ImaginationConfig& cfg, Rng& rng,
                       PrioritizedBuffer<LatentTransition>& latent_buffer);

}  // namespace icac
