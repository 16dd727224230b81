#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

#include "ascnet/checkpoint.hpp"
#include "ascnet/verification.hpp"

namespace ascnet::cli {

namespace fs = std::filesystem;

namespace {

fs::path resolve(const Context& ctx, const std::string& configured, const char* fallback) {
  return configured.empty() ? ctx.out_dir / fallback : fs::path(configured);
}

void ensure_out_dir(const Context& ctx) {
  std::error_code ec;
  fs::create_directories(ctx.out_dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + ctx.out_dir.string() + ": " + ec.message());
}

void echo_config(const Context& ctx) {
  std::ofstream out(ctx.out_dir / "config.resolved");
  out << ctx.config.to_text();
  if (!out) throw std::runtime_error("cannot write " + (ctx.out_dir / "config.resolved").string());
}

Dataset load_split(const fs::path& path, Split split) {
  if (!fs::exists(path)) throw ConfigError("data file not found: " + path.string());
  return load_features(path, split);
}

template <typename Fn>
auto with_precision(Precision p, Fn&& fn) {
  if (p == Precision::Float) return fn(float{});
  return fn(double{});
}

void write_text(const fs::path& path, auto&& writer) {
  std::ofstream out(path);
  writer(out);
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

int cmd_synth(const Context& ctx) {
  auto& log = *ctx.log;
  ensure_out_dir(ctx);
  const auto data = generate_synthetic(ctx.config.synth);
  const auto train_path = resolve(ctx, ctx.config.data_train, "train.ascf");
  const auto test_path = resolve(ctx, ctx.config.data_test, "test.ascf");
  const auto train_bytes = write_features(data.train, train_path);
  const auto test_bytes = write_features(data.test, test_path);
  echo_config(ctx);
  log << "wrote " << train_path.string() << " (" << data.train.size() << " samples, " << train_bytes << " bytes)\n";
  log << "wrote " << test_path.string() << " (" << data.test.size() << " samples, " << test_bytes << " bytes)\n";
  const auto train_counts = data.train.class_counts();
  const auto test_counts = data.test.class_counts();
  log << "class,train,test\n";
  for (std::size_t c = 0; c < train_counts.size(); ++c) {
    log << c << ',' << train_counts[c] << ',' << test_counts[c] << '\n';
  }
  return kOk;
}

int cmd_train(const Context& ctx) {
  auto& log = *ctx.log;
  const auto train_data = load_split(resolve(ctx, ctx.config.data_train, "train.ascf"), Split::Train);
  const auto test_data = load_split(resolve(ctx, ctx.config.data_test, "test.ascf"), Split::Test);
  if (train_data.empty() || test_data.empty()) throw ConfigError("train and test data must both be non-empty");
  if (train_data.n_levels != test_data.n_levels || train_data.feat_dim != test_data.feat_dim ||
      train_data.n_classes != test_data.n_classes) {
    throw ConfigError("train and test containers disagree on N, D or class count");
  }
  ensure_out_dir(ctx);

  Context resolved = ctx;
  auto& rc = resolved.config;
  rc.model.n_levels = train_data.n_levels;
  rc.model.feat_dim = train_data.feat_dim;
  rc.model.n_classes = train_data.n_classes;
  echo_config(resolved);

  const auto start = std::chrono::steady_clock::now();
  return with_precision(rc.model.precision, [&](auto tag) {
    using Scalar = decltype(tag);
    Rng init = Rng(rc.train.seed).stream("init");
    auto net = build<Scalar>(rc.resolved_model(), init);
    auto result = train<Scalar>(std::move(net), train_data, rc.train, rc.resolved_loss(),
                                [&](const AscNet<Scalar>& m) { return evaluate(m, test_data).auc; });
    Checkpoint<Scalar> ckpt{result.best, result.best_optimizer,
                            static_cast<std::uint32_t>(result.best_epoch < 0 ? 0 : result.best_epoch + 1)};
    const auto ckpt_path = resolve(ctx, rc.checkpoint, "checkpoint.ascc");
    save_checkpoint(ckpt, ckpt_path);
    write_text(ctx.out_dir / "train_log.csv", [&](std::ostream& out) { write_training_log_csv(out, result.log); });
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log << "variant " << variant_name(rc.variant) << ", " << rc.train.epochs << " epochs, "
        << result.best.parameter_count() << " parameters\n";
    if (result.best_epoch >= 0) {
      char line[96];
      std::snprintf(line, sizeof line, "best AUC=%.6f at epoch %d\n", result.best_auc, result.best_epoch);
      log << line;
    }
    log << "checkpoint " << ckpt_path.string() << " (" << secs << " s)\n";
    return static_cast<int>(kOk);
  });
}

int cmd_eval(const Context& ctx) {
  auto& log = *ctx.log;
  const auto ckpt_path = resolve(ctx, ctx.config.checkpoint, "checkpoint.ascc");
  if (!fs::exists(ckpt_path)) throw ConfigError("checkpoint not found: " + ckpt_path.string());
  const auto bytes = read_bytes(ckpt_path);
  const auto test_data = load_split(resolve(ctx, ctx.config.data_test, "test.ascf"), Split::Test);
  const ModelConfig mc = peek_checkpoint_config(bytes);
  ensure_out_dir(ctx);
  const EvalReport report = with_precision(mc.precision, [&](auto tag) {
    using Scalar = decltype(tag);
    const auto ckpt = decode_checkpoint<Scalar>(bytes);
    return evaluate(ckpt.model, test_data);
  });
  write_text(ctx.out_dir / "curve.csv", [&](std::ostream& out) { write_curve_csv(out, report); });
  char line[64];
  std::snprintf(line, sizeof line, "AUC=%.6f\n", report.auc);
  log << line;
  return kOk;
}

int cmd_ablate(const Context& ctx) {
  auto& log = *ctx.log;
  const auto& rc = ctx.config;
  const auto train_data = load_split(resolve(ctx, rc.data_train, "train.ascf"), Split::Train);
  const auto test_data = load_split(resolve(ctx, rc.data_test, "test.ascf"), Split::Test);
  ensure_out_dir(ctx);
  echo_config(ctx);

  AblationSettings settings;
  settings.model = rc.model;
  settings.model.n_levels = train_data.n_levels;
  settings.model.feat_dim = train_data.feat_dim;
  settings.model.n_classes = train_data.n_classes;
  settings.train = rc.train;
  settings.loss = rc.loss;
  settings.variants = rc.ablate_variants;
  settings.seeds = rc.ablate_seeds;
  settings.jobs = rc.jobs;

  const auto reports = with_precision(rc.model.precision, [&](auto tag) {
    return ablation_suite<decltype(tag)>(train_data, test_data, settings);
  });
  write_text(ctx.out_dir / "ablation.csv", [&](std::ostream& out) { write_ablation_csv(out, reports); });
  fs::create_directories(ctx.out_dir / "curves");
  for (const auto& r : reports) {
    const auto name = std::string(variant_name(r.variant)) + "_seed" + std::to_string(r.seed) + ".csv";
    write_text(ctx.out_dir / "curves" / name, [&](std::ostream& out) { write_curve_csv(out, r); });
  }
  for (const auto& s : summarize(reports)) {
    char line[128];
    std::snprintf(line, sizeof line, "%-26s AUC %.4f +- %.4f (%zu seeds)\n", variant_name(s.variant), s.mean_auc,
                  s.std_auc, s.runs);
    log << line;
  }
  return kOk;
}

int cmd_gradcheck(const Context& ctx) {
  auto& log = *ctx.log;
  const auto start = std::chrono::steady_clock::now();
  ModelConfig mc = tiny_model_config();
  mc.similarity_stop_gradient = ctx.config.model.similarity_stop_gradient;
  mc.share_aprime = ctx.config.model.share_aprime;
  mc.dgc_share_weights = ctx.config.model.dgc_share_weights;
  LossFlags flags = ctx.config.loss;
  apply_ablation(ctx.config.variant, mc, flags);
  const auto result = check_model_gradients(mc, flags, ctx.config.train.seed, ctx.config.gradcheck_eps);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool pass = result.max_relative_error < 1e-4;
  char line[160];
  std::snprintf(line, sizeof line, "max relative error %.3e over %zu entries (%.2f s): %s\n",
                result.max_relative_error, result.checked_entries, secs, pass ? "PASS" : "FAIL");
  log << line;
  return pass ? kOk : kVerificationFailed;
}

int run_guarded(int (*command)(const Context&), const Context& ctx, std::ostream& err) {
  try {
    return command(ctx);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ShapeError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DeterminismError& e) {
    err << "error: " << e.what() << '\n';
    return kVerificationFailed;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInternal;
  }
}

}  // namespace ascnet::cli
