#include "icac/audit.hpp"

#include <cmath>
#include <functional>
#include <ostream>

#include "icac/grasp_env.hpp"
#include "icac/imagination.hpp"
#include "icac/itm.hpp"
#include "icac/replay.hpp"
#include "icac/trainer.hpp"

namespace icac {

namespace {

bool gradient_audit() {
  for (uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(mix_seed(0xAD17, seed));
    auto net = make_net({6, 8, 3}, {Act::tanh, Act::linear}, rng);
    Vec x(6), target(3);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    for (auto& v : target) v = rng.uniform(-1.0, 1.0);
    auto analytic = mse_and_grad(net, x, target);
    const double h = 1e-5;
    for (size_t li = 0; li < net.layers.size(); ++li) {
      auto& l = net.layers[li];
      for (size_t i = 0; i < l.w.a.size(); ++i) {
        double keep = l.w.a[i];
        auto loss = [&](double v) {
          l.w.a[i] = v;
          Vec y = forward(net, x);
          l.w.a[i] = keep;
          double s = 0.0;
          for (size_t j = 0; j < y.size(); ++j) s += (y[j] - target[j]) * (y[j] - target[j]);
          return s;
        };
        double fd = (loss(keep + h) - loss(keep - h)) / (2.0 * h);
        double a = analytic.grads.dw[li].a[i];
        double denom = std::max({std::fabs(a), std::fabs(fd), 1e-3});
        if (std::fabs(a - fd) / denom > 1e-4) return false;
      }
    }
  }
  return true;
}

bool itm_audit() {
  Rng rng(0x17a9);
  auto map = ItmMap::initialize({0.0, 0.0}, {0.1, 0.1}, 0.04);
  Vec phi = {0.0, 0.0};
  for (int i = 0; i < 5000; ++i) {
    for (auto& v : phi) v = std::clamp(v + rng.uniform(-0.2, 0.2), -2.0, 2.0);
    map.adapt(phi);
    if (i % 25 != 0) continue;
    for (const auto& [id, node] : map.nodes()) {
      if (node.neighbors.count(id)) return false;
      for (int nb : node.neighbors) {
        if (!map.has_node(nb)) return false;
        if (!map.node(nb).neighbors.count(id)) return false;
      }
    }
  }
  return map.node_count() > 2;
}

bool per_audit() {
  Rng rng(0x9e11);
  PrioritizedBuffer<int> buf(256, 0.6, 0.4);
  std::vector<PrioritizedBuffer<int>::Ref> refs;
  for (int i = 0; i < 5000; ++i) {
    if (refs.empty() || rng.uniform() < 0.5) {
      refs.push_back(buf.store(i));
      if (refs.size() > 128) refs.erase(refs.begin());
    } else {
      buf.update_priorities({refs[rng.integer(static_cast<int>(refs.size()))]},
                            {rng.uniform(0.0, 8.0)});
    }
  }
  double brute = 0.0;
  for (size_t i = 0; i < buf.size(); ++i) brute += std::pow(buf.priority(i), 0.6);
  return std::fabs(buf.tree_root() - brute) <= 1e-9 * std::max(1.0, brute);
}

bool gate_audit() {
  Rng rng(0x6a7e);
  ItmMap map(1.0);
  int id = map.insert_node({0.0, 0.0, 0.0});
  auto& node = map.node(id);
  node.models = make_local_models(3, 2, 10, 1e-3, rng);
  node.stats = NodeStats(1, 20);
  auto policy = make_actor_critic(3, 2, 8, 1e-4, 1e-3, 0.99, 1e-3, 0.35, rng);
  PrioritizedBuffer<LatentTransition> buf(4096, 0.6, 0.4);
  ImaginationConfig cfg;

  for (int i = 0; i < 6; ++i) node.stats.push_error(1.0);  // scaled <e> = 1
  if (la_imagination({0.0, 0.0, 0.0}, id, map, policy, cfg, rng, buf) != 0) return false;

  node.stats = NodeStats(1, 20);
  for (int i = 0; i < 6; ++i) node.stats.push_error(0.0);  // scaled <e> = 0
  if (la_imagination({0.0, 0.0, 0.0}, id, map, policy, cfg, rng, buf) != cfg.d_max)
    return false;
  uint64_t topo = map.topology_hash();
  static_imagination({0.0, 0.0, 0.0}, id, map, policy, cfg, rng, buf);
  return map.topology_hash() == topo;
}

bool env_audit() {
  GraspEnv env;
  Rng rng(0xE41);
  int scripted = 0, random = 0;
  for (int i = 0; i < 400; ++i) {
    env.reset(rng);
    while (true) {
      auto res = env.step(scripted_action(env.state(), env.config()));
      if (res.done) {
        if (res.reward > 0) scripted++;
        break;
      }
    }
  }
  for (int i = 0; i < 400; ++i) {
    env.reset(rng);
    while (true) {
      auto res = env.step({rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)});
      if (res.done) {
        if (res.reward > 0) random++;
        break;
      }
    }
  }
  return scripted >= 380 && random < 60;
}

bool determinism_audit() {
  TrainConfig cfg;
  cfg.env.image_size = 8;
  cfg.latent_dim = 4;
  cfg.enc_hidden = 16;
  cfg.ac_hidden = 8;
  cfg.model_hidden = 8;
  cfg.episodes = 2;
  cfg.episode_len = 6;
  cfg.batch = 8;
  cfg.warmup_steps = 4;
  cfg.actor_critic_steps = 1;
  cfg.model_steps = 1;
  cfg.seed = 321;
  auto a = run_training(cfg);
  auto b = run_training(cfg);
  if (a.episodes.size() != b.episodes.size()) return false;
  for (size_t i = 0; i < a.episodes.size(); ++i) {
    if (a.episodes[i].extrinsic_return != b.episodes[i].extrinsic_return) return false;
    if (a.episodes[i].intrinsic_return != b.episodes[i].intrinsic_return) return false;
  }
  return true;
}

}  // namespace

bool run_audits(std::ostream& os) {
  struct Entry {
    const char* name;
    std::function<bool()> fn;
  };
  const Entry entries[] = {
      {"gradients vs finite differences", gradient_audit},
      {"itm graph invariants", itm_audit},
      {"sum-tree consistency", per_audit},
      {"imagination gate", gate_audit},
      {"environment calibration", env_audit},
      {"run determinism", determinism_audit},
  };
  bool all = true;
  for (const auto& e : entries) {
    bool ok = e.fn();
    os << (ok ? "[ok]   " : "[FAIL] ") << e.name << "\n";
    all = all && ok;
  }
  return all;
}

}  // namespace icac
