#include "icac/trainer.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace icac {

const char* imagination_mode_name(ImaginationMode m) {
  switch (m) {
    case ImaginationMode::none: return "none";
    case ImaginationMode::static_depth: return "static";
    case ImaginationMode::adaptive: return "adaptive";
  }
  return "?";
}

ImaginationMode imagination_mode_from_name(const std::string& s) {
  if (s == "none") return ImaginationMode::none;
  if (s == "static") return ImaginationMode::static_depth;
  if (s == "adaptive") return ImaginationMode::adaptive;
  throw std::invalid_argument("unknown imagination mode: " + s);
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("TrainConfig: " + what);
  };
  if (gamma < 0.0 || gamma > 1.0) fail("gamma outside [0,1]");
  if (tau <= 0.0 || tau > 1.0) fail("tau outside (0,1]");
  if (lambda_rec < 0.0 || lambda_critic < 0.0) fail("negative loss weight");
  if (latent_dim < 1) fail("latent_dim < 1");
  if (sigma_window < 1 || lp_window < 1) fail("error windows must be positive");
  if (e_max < 0.0) fail("e_max < 0");
  if (d_max < 0) fail("d_max < 0");
  if (lr_critic <= 0.0 || lr_models <= 0.0 || lr_actor <= 0.0) fail("learning rates must be positive");
  if (batch < 1) fail("batch < 1");
  if (cap_pixel < 1 || cap_latent < 1) fail("buffer capacity < 1");
  if (per_alpha < 0.0) fail("per_alpha < 0");
  if (per_beta0 < 0.0 || per_beta0 > 1.0) fail("per_beta0 outside [0,1]");
  if (sigma_policy < 0.0) fail("sigma_policy < 0");
  if (model_hidden < 1 || enc_hidden < 1 || ac_hidden < 1) fail("hidden sizes must be positive");
  if (actor_critic_steps < 0 || model_steps < 0 || encoder_steps < 0) fail("negative update cadence");
  if (warmup_steps < 0) fail("warmup_steps < 0");
  if (actor_warmup_steps < 0) fail("actor_warmup_steps < 0");
  if (uniform_action_steps < 0) fail("uniform_action_steps < 0");
  if (imagination_warmup_errors < 0) fail("imagination_warmup_errors < 0");
  if (episodes < 1 || episode_len < 1) fail("episodes and episode_len must be positive");
  if (env.image_size < 4) fail("image_size < 4");
  if (env.max_steps < 1) fail("env.max_steps < 1");
  if (env.theta_grasp <= 0.0 || env.theta_topple < env.theta_grasp) fail("grasp/topple bands invalid");
}

namespace {

constexpr int kActionDim = 2;

std::vector<float> to_float(const Vec& v) {
  std::vector<float> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i]);
  return out;
}

// Validated copy with the env timeout pinned to the schedule's T.
TrainConfig normalized(TrainConfig cfg) {
  cfg.validate();
  cfg.env.max_steps = cfg.episode_len;
  return cfg;
}

}  // namespace

Trainer::Trainer(const TrainConfig& cfg)
    : cfg_(normalized(cfg)),
      env_(cfg_.env),
      env_rng_(mix_seed(cfg_.seed, 1)),
      policy_rng_(mix_seed(cfg_.seed, 2)),
      learn_rng_(mix_seed(cfg_.seed, 3)),
      init_rng_(mix_seed(cfg_.seed, 4)),
      ed_(make_encoder_decoder(cfg_.env.obs_dim(), cfg_.latent_dim, cfg_.enc_hidden,
                               cfg_.lambda_rec, cfg_.lambda_critic, cfg_.lr_critic,
                               init_rng_, cfg_.latent_tanh)),
      ac_(make_actor_critic(cfg_.latent_dim, kActionDim, cfg_.ac_hidden, cfg_.lr_actor,
                            cfg_.lr_critic, cfg_.gamma, cfg_.tau, cfg_.sigma_policy,
                            init_rng_)),
      pixel_(cfg_.cap_pixel, cfg_.per_alpha, cfg_.per_beta0),
      latent_(cfg_.cap_latent, cfg_.per_alpha, cfg_.per_beta0),
      intrinsic_(cfg_.intrinsic_scaling) {}

int Trainer::step_imagination(const Vec& phi, int owner, uint64_t global_step) {
  if (cfg_.mode == ImaginationMode::none || owner < 0 || !map_) return 0;
  ImaginationConfig icfg;
  icfg.d_max = cfg_.d_max;
  icfg.warmup_errors = cfg_.imagination_warmup_errors;
  // Dedicated per-step stream so rollout length never shifts the draws seen
  // by the environment or the real policy; paired-mode runs stay comparable.
  Rng imag_rng(mix_seed(cfg_.seed, 0x1a61, global_step));
  if (cfg_.mode == ImaginationMode::adaptive)
    return la_imagination(phi, owner, *map_, ac_, icfg, imag_rng, latent_);
  return static_imagination(phi, owner, *map_, ac_, icfg, imag_rng, latent_);
}

RunResult Trainer::run(const RunHooks& hooks) {
  auto t_run0 = std::chrono::steady_clock::now();
  RunResult result;
  auto ph = [&hooks](Phase p) {
    if (hooks.phase) hooks.phase(p);
  };
  auto abort_run = [this](const std::string& why) {
    if (!cfg_.diagnostic_dir.empty()) save_checkpoint(cfg_.diagnostic_dir);
    throw std::runtime_error("run aborted: " + why);
  };

  const uint64_t total_steps =
      static_cast<uint64_t>(cfg_.episodes) * static_cast<uint64_t>(cfg_.episode_len);
  uint64_t global_step = 0;

  auto node_init = [this](ItmNode& n) {
    n.stats = NodeStats(cfg_.sigma_window, cfg_.lp_window);
    n.models = make_local_models(cfg_.latent_dim, kActionDim, cfg_.model_hidden,
                                 cfg_.lr_models, init_rng_);
  };

  for (int ep = 0; ep < cfg_.episodes; ++ep) {
    auto t_ep0 = std::chrono::steady_clock::now();
    Vec obs = env_.reset(env_rng_);
    EpisodeMetrics em;
    em.episode = ep;
    int rollouts = 0;

    for (int t = 0; t < cfg_.episode_len; ++t) {
      ph(Phase::encode);
      Vec phi = encode(ed_, obs);

      ph(Phase::som_update);
      int owner = -1;
      if (!map_) {
        // The map seeds itself from the first two distinct encodings.
        if (!first_phi_) {
          first_phi_ = phi;
        } else if (phi != *first_phi_) {
          map_ = ItmMap::initialize(*first_phi_, phi, cfg_.e_max, node_init);
        }
      }
      if (map_) owner = map_->adapt(phi).owner;

      ph(Phase::action);
      Vec a;
      if (global_step < static_cast<uint64_t>(cfg_.uniform_action_steps)) {
        a = {policy_rng_.uniform(-1.0, 1.0), policy_rng_.uniform(-1.0, 1.0)};
      } else {
        a = policy_sample(ac_, phi, policy_rng_);
      }

      ph(Phase::env_step);
      StepResult sr = env_.step(a);
      Vec phi_next = encode(ed_, sr.obs);

      ph(Phase::intrinsic_reward);
      double r_int = 0.0;
      if (map_) {
        double lp = owner >= 0 ? learning_progress(map_->node(owner).stats) : 0.0;
        r_int = intrinsic_.compute(lp, phi_next, *map_).scaled;
      }

      ph(Phase::total_reward);
      double r_total = sr.reward + r_int;

      ph(Phase::model_update);
      if (owner >= 0) {
        auto& node = map_->node(owner);
        double model_r = cfg_.models_use_total_reward ? r_total : sr.reward;
        train_local(node.models, node.stats, phi, a, model_r, phi_next,
                    cfg_.model_steps);
      }

      ph(Phase::store);
      {
        // Success/topple are true terminals; a timeout only truncates the
        // episode (the observation carries no step counter, so masking at
        // timeouts would make identical states carry inconsistent targets).
        bool terminal = sr.done && sr.reward != 0.0;
        PixelTransition pt;
        pt.s = to_float(obs);
        pt.a = a;
        pt.r = r_total;
        pt.s_next = to_float(sr.obs);
        pt.terminal = terminal;
        pixel_.store(std::move(pt));

        LatentTransition lt;
        lt.phi = phi;
        lt.a = a;
        lt.r = r_total;
        lt.phi_next = phi_next;
        lt.terminal = terminal;
        latent_.store(std::move(lt));
      }

      ph(Phase::imagine);
      if (cfg_.mode != ImaginationMode::none && owner >= 0) {
        int n = step_imagination(phi, owner, global_step);
        em.imagined_count += n;
        result.imagined_total += n;
        rollouts++;
        result.rollouts_launched++;
      }

      global_step++;
      double progress = static_cast<double>(global_step) / total_steps;
      pixel_.set_progress(progress);
      latent_.set_progress(progress);
      bool learning = global_step >= static_cast<uint64_t>(cfg_.warmup_steps);

      ph(Phase::repr_update);
      if (learning && pixel_.size() >= static_cast<size_t>(cfg_.batch)) {
        for (int s = 0; s < cfg_.encoder_steps; ++s) {
          auto b = pixel_.sample(cfg_.batch, learn_rng_);
          auto res = combined_loss_step(ed_, ac_.critic, ac_.target_critic, cfg_.gamma,
                                        b.items);
          if (!std::isfinite(res.combined))
            abort_run("non-finite combined loss at step " + std::to_string(global_step));
          pixel_.update_priorities(b.refs, res.abs_td);
        }
      }

      ph(Phase::ac_update);
      if (learning && latent_.size() >= static_cast<size_t>(cfg_.batch)) {
        for (int s = 0; s < cfg_.actor_critic_steps; ++s) {
          auto b = latent_.sample(cfg_.batch, learn_rng_);
          auto cres = critic_update(ac_, b.items, b.weights);
          if (!std::isfinite(cres.loss))
            abort_run("non-finite critic loss at step " + std::to_string(global_step));
          latent_.update_priorities(b.refs, cres.abs_td);
          if (global_step >= static_cast<uint64_t>(cfg_.actor_warmup_steps)) {
            auto ares = actor_update(ac_, b.items);
            if (!std::isfinite(ares.loss))
              abort_run("non-finite actor loss at step " + std::to_string(global_step));
          }
        }
      }

      ph(Phase::target_update);
      soft_update(ac_, ed_.encoder, ed_.target_encoder);

      em.extrinsic_return += sr.reward;
      em.intrinsic_return += r_int;
      obs = std::move(sr.obs);
      if (sr.done) {
        if (sr.reward > 0.0) em.outcome = 1;
        else if (sr.reward < 0.0) em.outcome = -1;
        break;
      }
    }

    em.node_count = map_ ? static_cast<int>(map_->node_count()) : 0;
    em.mean_rollout_depth =
        rollouts > 0 ? static_cast<double>(em.imagined_count) / rollouts : 0.0;
    em.wall_ms = std::chrono::duration<double, std::milli>(
                     std::chrono::steady_clock::now() - t_ep0)
                     .count();
    if (hooks.on_episode) hooks.on_episode(em);
    result.episodes.push_back(em);
  }

  result.env_steps = global_step;
  result.stale_priority_updates =
      pixel_.stale_update_count() + latent_.stale_update_count();
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_run0).count();
  return result;
}

void Trainer::save_checkpoint(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  save_net_file(ed_.encoder, dir + "/encoder.txt");
  save_net_file(ed_.decoder, dir + "/decoder.txt");
  save_net_file(ac_.actor, dir + "/actor.txt");
  save_net_file(ac_.critic, dir + "/critic.txt");
  if (map_) {
    std::ofstream f(dir + "/itm_snapshot.txt");
    map_->write_snapshot(f);
  }
}

RunResult run_training(const TrainConfig& cfg, const RunHooks& hooks) {
  Trainer trainer(cfg);
  return trainer.run(hooks);
}

AblationResult run_ablation(const TrainConfig& base, const std::vector<int>& depths,
                            const std::vector<uint64_t>& seeds) {
  for (int d : depths)
    if (d < 0) throw std::invalid_argument("run_ablation: negative depth");
  AblationResult out;
  out.depths = depths;
  out.seeds = seeds;
  out.runs.resize(depths.size());
  for (size_t di = 0; di < depths.size(); ++di) {
    for (uint64_t seed : seeds) {
      TrainConfig cfg = base;
      cfg.mode = ImaginationMode::adaptive;
      cfg.d_max = depths[di];
      cfg.seed = seed;
      out.runs[di].push_back(run_training(cfg));
    }
  }
  return out;
}

std::vector<double> smooth_trailing(const std::vector<double>& raw, int window) {
  std::vector<double> out(raw.size(), 0.0);
  double acc = 0.0;
  for (size_t i = 0; i < raw.size(); ++i) {
    acc += raw[i];
    if (i >= static_cast<size_t>(window)) acc -= raw[i - window];
    size_t n = std::min(i + 1, static_cast<size_t>(window));
    out[i] = acc / static_cast<double>(n);
  }
  return out;
}

void emit_curves(const std::vector<std::vector<EpisodeMetrics>>& per_seed, int window,
                 const std::string& out_dir, const std::string& label) {
  if (per_seed.empty() || per_seed.front().empty())
    throw std::invalid_argument("emit_curves: empty metrics stream");
  const size_t episodes = per_seed.front().size();
  for (const auto& s : per_seed)
    if (s.size() != episodes)
      throw std::invalid_argument("emit_curves: seed streams differ in length");
  if (window < 1) window = std::max<int>(1, static_cast<int>(episodes) / 10);

  std::filesystem::create_directories(out_dir);
  std::vector<std::vector<double>> smoothed;
  for (size_t k = 0; k < per_seed.size(); ++k) {
    std::ofstream f(out_dir + "/metrics_seed" + std::to_string(k) + label + ".csv");
    f << "episode,extrinsic_return,intrinsic_return,outcome,node_count,"
         "imagined_count,mean_rollout_depth\n";
    std::vector<double> raw;
    raw.reserve(episodes);
    for (const auto& em : per_seed[k]) {
      f << em.episode << "," << em.extrinsic_return << "," << em.intrinsic_return << ","
        << em.outcome << "," << em.node_count << "," << em.imagined_count << ","
        << em.mean_rollout_depth << "\n";
      raw.push_back(em.extrinsic_return);
    }
    smoothed.push_back(smooth_trailing(raw, window));
  }

  std::ofstream f(out_dir + "/curve_mean" + label + ".csv");
  f << "episode,mean,std\n";
  for (size_t i = 0; i < episodes; ++i) {
    double mean = 0.0;
    for (const auto& s : smoothed) mean += s[i];
    mean /= smoothed.size();
    double var = 0.0;
    for (const auto& s : smoothed) var += (s[i] - mean) * (s[i] - mean);
    var /= smoothed.size();
    f << i << "," << mean << "," << std::sqrt(var) << "\n";
  }
}

void apply_config_kv(TrainConfig& cfg, const std::string& key, const std::string& value) {
  auto as_d = [&] { return std::stod(value); };
  auto as_i = [&] { return std::stoi(value); };
  auto as_u = [&] { return static_cast<uint64_t>(std::stoull(value)); };
  auto as_b = [&] {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw std::invalid_argument("bad boolean: " + value);
  };
  if (key == "gamma") cfg.gamma = as_d();
  else if (key == "tau") cfg.tau = as_d();
  else if (key == "lambda_rec") cfg.lambda_rec = as_d();
  else if (key == "lambda_critic") cfg.lambda_critic = as_d();
  else if (key == "latent_dim") cfg.latent_dim = as_i();
  else if (key == "sigma_window") cfg.sigma_window = as_i();
  else if (key == "lp_window") cfg.lp_window = as_i();
  else if (key == "e_max") cfg.e_max = as_d();
  else if (key == "d_max") cfg.d_max = as_i();
  else if (key == "lr_critic") cfg.lr_critic = as_d();
  else if (key == "lr_models") cfg.lr_models = as_d();
  else if (key == "lr_actor") cfg.lr_actor = as_d();
  else if (key == "batch") cfg.batch = as_i();
  else if (key == "cap_pixel") cfg.cap_pixel = as_u();
  else if (key == "cap_latent") cfg.cap_latent = as_u();
  else if (key == "per_alpha") cfg.per_alpha = as_d();
  else if (key == "per_beta0") cfg.per_beta0 = as_d();
  else if (key == "sigma_policy") cfg.sigma_policy = as_d();
  else if (key == "model_hidden") cfg.model_hidden = as_i();
  else if (key == "actor_critic_steps") cfg.actor_critic_steps = as_i();
  else if (key == "model_steps") cfg.model_steps = as_i();
  else if (key == "encoder_steps") cfg.encoder_steps = as_i();
  else if (key == "warmup_steps") cfg.warmup_steps = as_i();
  else if (key == "actor_warmup_steps") cfg.actor_warmup_steps = as_i();
  else if (key == "uniform_action_steps") cfg.uniform_action_steps = as_i();
  else if (key == "latent_tanh") cfg.latent_tanh = as_b();
  else if (key == "imagination_warmup_errors") cfg.imagination_warmup_errors = as_i();
  else if (key == "enc_hidden") cfg.enc_hidden = as_i();
  else if (key == "ac_hidden") cfg.ac_hidden = as_i();
  else if (key == "episodes") cfg.episodes = as_i();
  else if (key == "episode_len") cfg.episode_len = as_i();
  else if (key == "imagination_mode") cfg.mode = imagination_mode_from_name(value);
  else if (key == "seed") cfg.seed = as_u();
  else if (key == "models_use_total_reward") cfg.models_use_total_reward = as_b();
  else if (key == "intrinsic_scaling") {
    if (value == "raw") cfg.intrinsic_scaling = IntrinsicReward::Scaling::raw;
    else if (value == "unit_max") cfg.intrinsic_scaling = IntrinsicReward::Scaling::unit_max;
    else if (value == "signed_max") cfg.intrinsic_scaling = IntrinsicReward::Scaling::signed_max;
    else throw std::invalid_argument("bad intrinsic_scaling: " + value);
  }
  else if (key == "image_size") cfg.env.image_size = as_i();
  else if (key == "theta_grasp") cfg.env.theta_grasp = as_d();
  else if (key == "theta_topple") cfg.env.theta_topple = as_d();
  else if (key == "arm_rate") cfg.env.arm_rate = as_d();
  else if (key == "closure_rate") cfg.env.closure_rate = as_d();
  else if (key == "object_range") cfg.env.object_range = as_d();
  else if (key == "env_max_steps") cfg.env.max_steps = as_i();
  else throw std::invalid_argument("unknown config key: " + key);
}

TrainConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config: " + path);
  TrainConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    lineno++;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      bool blank = line.find_first_not_of(" \t\r") == std::string::npos;
      if (blank) continue;
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    }
    auto trim = [](std::string s) {
      size_t b = s.find_first_not_of(" \t\r");
      size_t e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": empty key or value");
    apply_config_kv(cfg, key, value);
  }
  return cfg;
}

}  // namespace icac
