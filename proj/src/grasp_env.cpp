#include "icac/grasp_env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace icac {

namespace {

constexpr double kPivotY = 15.5;  // bottom-center pivot, y grows downward
constexpr double kRingRadius = 7.5;

struct Canvas {
  int size;
  Vec px;

  explicit Canvas(int n) : size(n), px(static_cast<size_t>(n) * n, 0.0) {}

  void add(int x, int y, double v) {
    if (x < 0 || y < 0 || x >= size || y >= size) return;
    px[static_cast<size_t>(y) * size + x] += v;
  }

  // Bilinear deposit at a continuous position.
  void splat(double cx, double cy, double v) {
    int x0 = static_cast<int>(std::floor(cx));
    int y0 = static_cast<int>(std::floor(cy));
    double fx = cx - x0, fy = cy - y0;
    add(x0, y0, v * (1 - fx) * (1 - fy));
    add(x0 + 1, y0, v * fx * (1 - fy));
    add(x0, y0 + 1, v * (1 - fx) * fy);
    add(x0 + 1, y0 + 1, v * fx * fy);
  }

  // Soft 3x3 blob.
  void blob(double cx, double cy, double peak, double sigma) {
    int x0 = static_cast<int>(std::floor(cx));
    int y0 = static_cast<int>(std::floor(cy));
    for (int y = y0 - 2; y <= y0 + 3; ++y)
      for (int x = x0 - 2; x <= x0 + 3; ++x) {
        double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        add(x, y, peak * std::exp(-d2 / (2.0 * sigma * sigma)));
      }
  }
};

inline double ring_x(double cx, double angle, double radius) {
  return cx + radius * std::sin(angle);
}

inline double ring_y(double angle, double radius) {
  return kPivotY - radius * std::cos(angle);
}

}  // namespace

Vec GraspEnv::render(const EnvState& state, const EnvConfig& cfg) {
  Canvas canvas(cfg.image_size);
  const double cx = cfg.image_size / 2.0;

  // Object blob on the reach ring.
  canvas.blob(ring_x(cx, state.object_angle, kRingRadius),
              ring_y(state.object_angle, kRingRadius), 0.9, 1.1);

  // Arm ray from the pivot toward the ring.
  for (double r : {2.0, 3.5, 5.0, 6.5})
    canvas.splat(ring_x(cx, state.arm_angle, r), ring_y(state.arm_angle, r), 0.4);

  // Hand at the ray tip; brightness encodes closure.
  canvas.blob(ring_x(cx, state.arm_angle, kRingRadius),
              ring_y(state.arm_angle, kRingRadius), 0.25 + 0.55 * state.hand_closure,
              1.1);

  // Gauge rows: a dense encoder reads a bar length far more readily than a
  // blob position, so the grip state and both angles are also shown as
  // fractional-length bars (closure row 0, arm row 2, object row 4).
  auto bar_row = [&](int row, double fraction, double intensity) {
    double len = std::clamp(fraction, 0.0, 1.0) * cfg.image_size;
    for (int x = 0; x < cfg.image_size; ++x)
      canvas.add(x, row, intensity * std::clamp(len - x, 0.0, 1.0));
  };
  bar_row(0, state.hand_closure, 0.7);
  bar_row(2, (state.arm_angle + cfg.arm_limit) / (2.0 * cfg.arm_limit), 0.55);
  bar_row(4, (state.object_angle + cfg.arm_limit) / (2.0 * cfg.arm_limit), 0.85);

  for (double& v : canvas.px) v = std::clamp(v, 0.0, 1.0);
  return canvas.px;
}

Vec GraspEnv::reset(Rng& rng) {
  state_ = EnvState{};
  state_.object_angle = rng.uniform(-cfg_.object_range, cfg_.object_range);
  return render(state_, cfg_);
}

StepResult GraspEnv::step(const Vec& action) {
  if (state_.done) throw std::runtime_error("GraspEnv::step: episode is done");
  if (action.size() != 2) throw std::invalid_argument("GraspEnv::step: need 2 actions");

  double a0 = std::clamp(action[0], -1.0, 1.0);
  double a1 = std::clamp(action[1], -1.0, 1.0);

  state_.arm_angle =
      std::clamp(state_.arm_angle + a0 * cfg_.arm_rate, -cfg_.arm_limit, cfg_.arm_limit);
  double prev_closure = state_.hand_closure;
  state_.hand_closure = std::clamp(state_.hand_closure + a1 * cfg_.closure_rate, 0.0, 1.0);

  StepResult res;
  bool crossed = prev_closure < cfg_.closure_threshold &&
                 state_.hand_closure >= cfg_.closure_threshold;
  if (crossed) {
    double off = std::fabs(state_.arm_angle - state_.object_angle);
    if (off < cfg_.theta_grasp) {
      res.reward = cfg_.grasp_reward;
      state_.done = true;
    } else if (off < cfg_.theta_topple) {
      res.reward = cfg_.topple_reward;
      state_.done = true;
    }
  }

  state_.step_count++;
  if (state_.step_count >= cfg_.max_steps) state_.done = true;

  res.done = state_.done;
  res.obs = render(state_, cfg_);
  return res;
}

Vec scripted_action(const EnvState& state, const EnvConfig& cfg) {
  double off = state.object_angle - state.arm_angle;
  if (std::fabs(off) > cfg.theta_grasp * 0.5)
    return {std::clamp(off / cfg.arm_rate, -1.0, 1.0), -1.0};
  return {0.0, 1.0};
}

void write_pgm(const Vec& obs, int width, int height, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_pgm: cannot open " + path);
  f << "P5\n" << width << " " << height << "\n255\n";
  for (double v : obs) {
    unsigned char byte =
        static_cast<unsigned char>(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5);
    f.write(reinterpret_cast<const char*>(&byte), 1);
  }
}

}  // namespace icac
