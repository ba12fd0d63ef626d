#include "icac/imagination.hpp"

namespace icac {

double scale_error(const NodeStats& stats) {
  double peak = stats.scale_history.max();
  if (peak <= 0.0) return 0.0;
  return moving_average(stats) / peak;
}

namespace {

double gate_scale(const ItmNode& node, const ImaginationConfig& cfg) {
  if (node.stats.error_count < static_cast<uint64_t>(cfg.warmup_errors)) return 1.0;
  return scale_error(node.stats);
}

int rollout(const Vec& phi_start, int node_id, const ItmMap& map,
            const ActorCritic& policy, const ImaginationConfig& cfg, Rng& rng,
            PrioritizedBuffer<LatentTransition>& latent_buffer, bool adaptive) {
  if (cfg.d_max <= 0 || !map.has_node(node_id)) return 0;

  const ItmNode* node = &map.node(node_id);
  Vec phi = phi_start;
  int depth = 0;
  double scaled = adaptive ? gate_scale(*node, cfg) : 0.0;
  double c = adaptive ? rng.uniform() : 0.0;
  while ((!adaptive || c < 1.0 - scaled) && depth < cfg.d_max) {
    if (!node->models.valid()) break;
    Vec a = policy_sample(policy, phi, rng);
    Prediction pred = predict(node->models, phi, a);

    LatentTransition tr;
    tr.phi = phi;
    tr.a = std::move(a);
    tr.r = pred.reward;
    tr.phi_next = pred.phi_next;
    tr.imagined = true;
    tr.depth = depth;
    latent_buffer.store(std::move(tr));

    phi = std::move(pred.phi_next);
    node = &map.node(map.find_matching(phi).nearest);
    depth++;
    if (adaptive) {
      scaled = gate_scale(*node, cfg);
      c = rng.uniform();
    }
  }
  return depth;
}

}  // namespace

int la_imagination(const Vec& phi_start, int node_id, const ItmMap& map,
                   const ActorCritic& policy, const ImaginationConfig& cfg, Rng& rng,
                   PrioritizedBuffer<LatentTransition>& latent_buffer) {
  return rollout(phi_start, node_id, map, policy, cfg, rng, latent_buffer, true);
}

int static_imagination(const Vec& phi_start, int node_id, const ItmMap& map,
                       const ActorCritic& policy, const ImaginationConfig& cfg, Rng& rng,
                       PrioritizedBuffer<LatentTransition>& latent_buffer) {
  return rollout(phi_start, node_id, map, policy, cfg, rng, latent_buffer, false);
}

}  // namespace icac
