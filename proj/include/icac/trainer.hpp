#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "icac/cacla.hpp"
#include "icac/grasp_env.hpp"
#include "icac/imagination.hpp"
#include "icac/intrinsic.hpp"
#include "icac/itm.hpp"
#include "icac/replay.hpp"
#include "icac/representation.hpp"

namespace icac {

enum class ImaginationMode { none, static_depth, adaptive };

const char* imagination_mode_name(ImaginationMode m);
ImaginationMode imagination_mode_from_name(const std::string& s);

// Every run scalar in one place. Values marked (paper) are the published
// settings; the update cadences default to the desk-scale reductions and the
// paper's 15/10 cadence stays available through the config.
struct TrainConfig {
  double gamma = 0.99;          // (paper)
  double tau = 1e-3;            // (paper)
  double lambda_rec = 0.1;      // (paper)
  double lambda_critic = 1.0;   // (paper)
  int latent_dim = 16;          // (paper)
  int sigma_window = 40;        // (paper)
  int lp_window = 20;           // (paper)
  double e_max = 6.0;           // (paper)
  int d_max = 7;                // (paper)
  double lr_critic = 1e-3;      // (paper)
  double lr_models = 1e-3;      // (paper)
  double lr_actor = 1e-4;       // (paper)
  int batch = 64;               // (paper)
  size_t cap_pixel = 60000;     // (paper)
  size_t cap_latent = 200000;   // (paper)
  double per_alpha = 0.6;       // (paper)
  double per_beta0 = 0.4;       // (paper)
  double sigma_policy = 0.35;   // (paper)
  int model_hidden = 20;        // (paper)

  int actor_critic_steps = 4;   // paper: 15 per timestep
  int model_steps = 2;          // paper: 10 per timestep
  int encoder_steps = 1;
  int warmup_steps = 500;        // env steps before any gradient update
  int actor_warmup_steps = 1000;  // critic calibrates before the actor moves
  int uniform_action_steps = 3000;  // uniform exploration before the policy takes over
  int imagination_warmup_errors = 5;

  int enc_hidden = 64;
  int ac_hidden = 32;
  bool latent_tanh = true;

  int episodes = 600;
  int episode_len = 50;
  ImaginationMode mode = ImaginationMode::adaptive;
  uint64_t seed = 1;

  // Reward the local reward heads on the total (extrinsic + intrinsic)
  // reward, as the stored transitions do; switchable to extrinsic-only.
  bool models_use_total_reward = true;
  IntrinsicReward::Scaling intrinsic_scaling = IntrinsicReward::Scaling::unit_max;

  EnvConfig env;

  // Where to drop a checkpoint if a run aborts on a non-finite loss.
  std::string diagnostic_dir;

  void validate() const;  // throws std::invalid_argument
};

struct EpisodeMetrics {
  int episode = 0;
  double extrinsic_return = 0.0;
  double intrinsic_return = 0.0;
  int outcome = 0;  // +1 grasped, -1 toppled, 0 timeout
  int node_count = 0;
  int imagined_count = 0;
  double mean_rollout_depth = 0.0;
  double wall_ms = 0.0;
};

// Phases of one environment step, in execution order.
enum class Phase {
  encode,
  som_update,
  action,
  env_step,
  intrinsic_reward,
  total_reward,
  model_update,
  store,
  imagine,
  repr_update,
  ac_update,
  target_update,
};

struct RunHooks {
  std::function<void(Phase)> phase;
  std::function<void(const EpisodeMetrics&)> on_episode;
};

struct RunResult {
  std::vector<EpisodeMetrics> episodes;
  uint64_t env_steps = 0;
  uint64_t imagined_total = 0;
  uint64_t rollouts_launched = 0;
  uint64_t stale_priority_updates = 0;
  double wall_seconds = 0.0;
};

// The full training loop: per step encode, map adaptation, action, env step,
// intrinsic reward, total reward, local-model training, dual stores,
// imagination, representation and actor-critic updates, target updates.
class Trainer {
 public:
  explicit Trainer(const TrainConfig& cfg);

  RunResult run(const RunHooks& hooks = {});

  const ItmMap* map() const { return map_ ? &*map_ : nullptr; }
  const EncoderDecoder& encoder_decoder() const { return ed_; }
  const ActorCritic& actor_critic() const { return ac_; }
  const PrioritizedBuffer<PixelTransition>& pixel_buffer() const { return pixel_; }
  const PrioritizedBuffer<LatentTransition>& latent_buffer() const { return latent_; }

  void save_checkpoint(const std::string& dir) const;

 private:
  int step_imagination(const Vec& phi, int owner, uint64_t global_step);

  TrainConfig cfg_;
  GraspEnv env_;
  Rng env_rng_, policy_rng_, learn_rng_, init_rng_;
  EncoderDecoder ed_;
  ActorCritic ac_;
  std::optional<ItmMap> map_;
  std::optional<Vec> first_phi_;
  PrioritizedBuffer<PixelTransition> pixel_;
  PrioritizedBuffer<LatentTransition> latent_;
  IntrinsicReward intrinsic_;
};

RunResult run_training(const TrainConfig& cfg, const RunHooks& hooks = {});

struct AblationResult {
  std::vector<int> depths;
  std::vector<uint64_t> seeds;
  // runs[d][s]: depth depths[d], seed seeds[s]
  std::vector<std::vector<RunResult>> runs;
};

// One adaptive run per depth per seed; depth 0 degenerates to no imagination.
AblationResult run_ablation(const TrainConfig& base, const std::vector<int>& depths,
                            const std::vector<uint64_t>& seeds);

// Per-seed raw CSVs (metrics_seed<k><label>.csv) plus a cross-seed smoothed
// mean/std curve (curve_mean<label>.csv). Smoothing is a trailing moving
// average; window < 1 defaults to max(1, episodes/10).
void emit_curves(const std::vector<std::vector<EpisodeMetrics>>& per_seed, int window,
                 const std::string& out_dir, const std::string& label = "");

// Trailing moving average used by emit_curves.
std::vector<double> smooth_trailing(const std::vector<double>& raw, int window);

// key = value text file mirroring TrainConfig; '#' starts a comment.
TrainConfig load_config_file(const std::string& path);
void apply_config_kv(TrainConfig& cfg, const std::string& key, const std::string& value);

}  // namespace icac
