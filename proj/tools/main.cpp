#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "icac/audit.hpp"
#include "icac/trainer.hpp"

namespace {

using namespace icac;

std::vector<std::vector<EpisodeMetrics>> collect(const std::vector<RunResult>& runs) {
  std::vector<std::vector<EpisodeMetrics>> out;
  out.reserve(runs.size());
  for (const auto& r : runs) out.push_back(r.episodes);
  return out;
}

int cmd_train(TrainConfig cfg, int runs, const std::string& out_dir, int window) {
  std::filesystem::create_directories(out_dir);
  std::vector<RunResult> results;
  uint64_t base_seed = cfg.seed;
  for (int k = 0; k < runs; ++k) {
    TrainConfig run_cfg = cfg;
    run_cfg.seed = base_seed + static_cast<uint64_t>(k);
    run_cfg.diagnostic_dir = out_dir + "/diagnostic";
    std::cout << "run " << k << " (seed " << run_cfg.seed << ", mode "
              << imagination_mode_name(run_cfg.mode) << ")..." << std::flush;
    Trainer trainer(run_cfg);
    RunResult res = trainer.run();
    std::cout << " " << res.episodes.size() << " episodes, "
              << res.imagined_total << " imagined transitions, "
              << static_cast<int>(res.wall_seconds) << "s\n";
    if (k == runs - 1) {
      trainer.save_checkpoint(out_dir);
      if (trainer.map()) {
        std::ofstream f(out_dir + "/itm_snapshot.txt");
        trainer.map()->write_snapshot(f);
      }
    }
    results.push_back(std::move(res));
  }
  emit_curves(collect(results), window, out_dir);
  std::cout << "wrote " << out_dir << "/curve_mean.csv\n";
  return 0;
}

int cmd_ablate(TrainConfig cfg, const std::vector<int>& depths, int runs,
               const std::string& out_dir, int window) {
  std::filesystem::create_directories(out_dir);
  std::vector<uint64_t> seeds;
  for (int k = 0; k < runs; ++k) seeds.push_back(cfg.seed + static_cast<uint64_t>(k));
  for (int depth : depths) {
    TrainConfig run_cfg = cfg;
    run_cfg.mode = ImaginationMode::adaptive;
    run_cfg.d_max = depth;
    std::cout << "depth " << depth << ": " << std::flush;
    std::vector<RunResult> results;
    for (uint64_t seed : seeds) {
      run_cfg.seed = seed;
      results.push_back(run_training(run_cfg));
      std::cout << "." << std::flush;
    }
    std::cout << "\n";
    emit_curves(collect(results), window, out_dir, "_depth" + std::to_string(depth));
  }
  std::cout << "wrote per-depth curves under " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"intrinsically motivated actor-critic with adaptive imagination"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", mode_str, depths_str = "0,1,2,7";
  uint64_t seed = 1;
  bool seed_set = false;
  int runs = 1, window = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value config file");
    sub->add_option("--seed", seed, "base seed")->each([&](const std::string&) {
      seed_set = true;
    });
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--runs", runs, "independent seeds to run")->check(CLI::PositiveNumber);
    sub->add_option("--window", window, "smoothing window (0 = episodes/10)");
  };

  auto* train = app.add_subcommand("train", "run the training loop");
  add_common(train);
  train->add_option("--mode", mode_str, "none|static|adaptive");

  auto* ablate = app.add_subcommand("ablate", "imagination-depth ablation");
  add_common(ablate);
  ablate->add_option("--depths", depths_str, "comma-separated depth list");

  auto* audit = app.add_subcommand("audit", "run the invariant suites");

  CLI11_PARSE(app, argc, argv);

  try {
    if (audit->parsed()) {
      bool ok = icac::run_audits(std::cout);
      std::cout << (ok ? "all audits passed\n" : "audit failures\n");
      return ok ? 0 : 1;
    }

    icac::TrainConfig cfg;
    if (!config_path.empty()) cfg = icac::load_config_file(config_path);
    if (seed_set) cfg.seed = seed;

    if (train->parsed()) {
      if (!mode_str.empty()) cfg.mode = icac::imagination_mode_from_name(mode_str);
      return cmd_train(cfg, runs, out_dir, window);
    }

    std::vector<int> depths;
    std::string item;
    std::stringstream ss(depths_str);
    while (std::getline(ss, item, ',')) depths.push_back(std::stoi(item));
    return cmd_ablate(cfg, depths, runs, out_dir, window);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
