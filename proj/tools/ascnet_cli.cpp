#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "commands.hpp"

using namespace ascnet;

int main(int argc, char** argv) {
  CLI::App app{"Teacher-student graph network for early action prediction"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  std::string config_path;
  std::string out_dir = "out";
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  int jobs = 0;
  std::string checkpoint;
  app.add_option("--config", config_path, "key = value config file");
  app.add_option("--out", out_dir, "output directory");
  auto* seed_opt = app.add_option("--seed", seed, "seed for training and synthetic data");
  app.add_option("--set", overrides, "override one key: --set train.epochs=5");
  app.add_option("--jobs", jobs, "parallel ablation runs");
  app.add_option("--checkpoint", checkpoint, "checkpoint path for eval");

  struct Entry {
    const char* name;
    const char* help;
    int (*fn)(const cli::Context&);
  };
  const Entry entries[] = {
      {"synth", "generate synthetic train/test feature containers", cli::cmd_synth},
      {"train", "train a model and keep the best checkpoint", cli::cmd_train},
      {"eval", "evaluate a checkpoint on the test container", cli::cmd_eval},
      {"ablate", "train and evaluate every ablation variant per seed", cli::cmd_ablate},
      {"gradcheck", "finite-difference check of all model gradients", cli::cmd_gradcheck},
  };
  for (const auto& e : entries) app.add_subcommand(e.name, e.help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kUsage;
  }

  cli::Context ctx;
  ctx.out_dir = out_dir;
  ctx.log = &std::cout;
  try {
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ConfigError("cannot read config file " + config_path);
      std::stringstream ss;
      ss << in.rdbuf();
      ctx.config = RunConfig::parse(ss.str());
    }
    if (*seed_opt) {
      ctx.config.train.seed = seed;
      ctx.config.synth.seed = seed;
    }
    if (jobs > 0) ctx.config.jobs = jobs;
    if (!checkpoint.empty()) ctx.config.checkpoint = checkpoint;
    for (const auto& o : overrides) {
      const auto eq = o.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + o + "'");
      ctx.config.set(o.substr(0, eq), o.substr(eq + 1));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kUsage;
  }

  for (const auto& e : entries) {
    if (app.got_subcommand(e.name)) return cli::run_guarded(e.fn, ctx, std::cerr);
  }
  return cli::kUsage;
}
