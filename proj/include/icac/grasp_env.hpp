#pragma once

#include <string>

#include "icac/nets.hpp"
#include "icac/rng.hpp"

namespace icac {

// 2-DoF sparse-reward grasping task: steer an arm ray toward an object on a
// ring, then close the hand. Closing aligned grasps (+10, done); closing
// slightly off topples the object (-10, done); anything else is 0 reward.
// Observations are rendered 16x16 grayscale images in [0,1].
struct EnvConfig {
  int image_size = 16;
  double theta_grasp = 0.15;   // |arm - object| below this at closure: success
  double theta_topple = 0.30;  // below this (but >= theta_grasp): topple
  double arm_limit = M_PI / 2.0;
  double arm_rate = 20.0 * M_PI / 180.0;  // max joint increment per step
  double closure_rate = 0.25;
  double closure_threshold = 0.8;
  double object_range = 1.2;  // object angle ~ U[-range, +range]
  int max_steps = 50;
  double grasp_reward = 10.0;
  double topple_reward = -10.0;

  int obs_dim() const { return image_size * image_size; }
};

struct EnvState {
  double arm_angle = 0.0;
  double hand_closure = 0.0;
  double object_angle = 0.0;
  int step_count = 0;
  bool done = false;
};

struct StepResult {
  Vec obs;
  double reward = 0.0;
  bool done = false;
};

class GraspEnv {
 public:
  explicit GraspEnv(EnvConfig cfg = {}) : cfg_(cfg) {}

  // New episode: object angle resampled uniformly over the graspable range,
  // arm centered, hand open.
  Vec reset(Rng& rng);

  // a[0] scaled to a bounded joint increment, a[1] to a closure increment.
  // Throws once the episode is done.
  StepResult step(const Vec& action);

  const EnvState& state() const { return state_; }
  const EnvConfig& config() const { return cfg_; }
  int obs_dim() const { return cfg_.obs_dim(); }

  // Pure function of the state: arm ray, closure-shaded hand, object blob.
  static Vec render(const EnvState& state, const EnvConfig& cfg);

 private:
  EnvConfig cfg_;
  EnvState state_;
};

// Oracle policy: steer toward the object, then close. Certifies solvability.
Vec scripted_action(const EnvState& state, const EnvConfig& cfg);

// Binary PGM frame dump for debugging.
void write_pgm(const Vec& obs, int width, int height, const std::string& path);

}  // namespace icac
