#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ascnet/checkpoint.hpp"
#include "commands.hpp"

using namespace ascnet;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("ascnet_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    ctx_.out_dir = dir_;
    ctx_.log = &log_;
    // Small data keeps each command fast.
    ctx_.config.set("synth.samples_per_class", "10");
    ctx_.config.set("synth.n_levels", "4");
    ctx_.config.set("synth.feat_dim", "8");
    ctx_.config.set("model.hidden", "8");
    ctx_.config.set("train.epochs", "2");
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(int (*cmd)(const cli::Context&)) { return cli::run_guarded(cmd, ctx_, err_); }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
  cli::Context ctx_;
  std::ostringstream log_, err_;
};

}  // namespace

TEST_F(CliTest, SynthWritesLoadableDeterministicFiles) {
  ASSERT_EQ(run(cli::cmd_synth), 0) << err_.str();
  const auto train = load_features(dir_ / "train.ascf");
  EXPECT_EQ(train.size(), 6u * 8);
  EXPECT_NE(log_.str().find("class,train,test"), std::string::npos);
  const auto first = slurp(dir_ / "train.ascf");
  ASSERT_EQ(run(cli::cmd_synth), 0);
  EXPECT_EQ(slurp(dir_ / "train.ascf"), first);
  EXPECT_EQ(RunConfig::parse(slurp(dir_ / "config.resolved")), ctx_.config);
}

TEST_F(CliTest, SynthRejectsEmptyClasses) {
  ctx_.config.set("synth.samples_per_class", "0");
  EXPECT_EQ(run(cli::cmd_synth), cli::kUsage);
  EXPECT_NE(err_.str().find("samples_per_class"), std::string::npos);
}

TEST_F(CliTest, TrainEvalPipelineIsDeterministic) {
  ASSERT_EQ(run(cli::cmd_synth), 0);
  ASSERT_EQ(run(cli::cmd_train), 0) << err_.str();
  const auto ckpt = slurp(dir_ / "checkpoint.ascc");
  const auto log_csv = slurp(dir_ / "train_log.csv");
  ASSERT_EQ(run(cli::cmd_train), 0);
  EXPECT_EQ(slurp(dir_ / "checkpoint.ascc"), ckpt);
  EXPECT_EQ(slurp(dir_ / "train_log.csv"), log_csv);

  log_.str("");
  ASSERT_EQ(run(cli::cmd_eval), 0) << err_.str();
  EXPECT_EQ(log_.str().rfind("AUC=", 0), 0u) << log_.str();
  const auto curve = slurp(dir_ / "curve.csv");
  EXPECT_EQ(curve.substr(0, curve.find('\n')), "level,ratio,accuracy");
  ASSERT_EQ(run(cli::cmd_eval), 0);
  EXPECT_EQ(slurp(dir_ / "curve.csv"), curve);
}

TEST_F(CliTest, TrainWithoutDataIsUsageError) {
  EXPECT_EQ(run(cli::cmd_train), cli::kUsage);
  EXPECT_NE(err_.str().find("not found"), std::string::npos);
}

TEST_F(CliTest, EvalOnWrongClassCountIsShapeError) {
  ASSERT_EQ(run(cli::cmd_synth), 0);
  ASSERT_EQ(run(cli::cmd_train), 0);
  ctx_.config.set("synth.n_classes", "7");
  ctx_.config.set("synth.ambiguity_pairs", "0-1");
  ctx_.config.set("data.test", (dir_ / "seven.ascf").string());
  ctx_.config.set("data.train", (dir_ / "seven_train.ascf").string());
  ASSERT_EQ(run(cli::cmd_synth), 0);
  EXPECT_EQ(run(cli::cmd_eval), cli::kUsage);
  EXPECT_NE(err_.str().find("C=7"), std::string::npos) << err_.str();
}

TEST_F(CliTest, SeparableDataReachesPerfectAuc) {
  ctx_.config.set("synth.noise_sigma", "0");
  ctx_.config.set("synth.convergence_rate", "1");
  ctx_.config.set("train.epochs", "30");
  ctx_.config.set("train.lr_init", "0.001");
  ASSERT_EQ(run(cli::cmd_synth), 0);
  ASSERT_EQ(run(cli::cmd_train), 0);
  log_.str("");
  ASSERT_EQ(run(cli::cmd_eval), 0);
  EXPECT_EQ(log_.str(), "AUC=1.000000\n");
}

TEST_F(CliTest, AblateWritesTableAndCurves) {
  ctx_.config.set("ablate.variants", "student_only,full");
  ctx_.config.set("ablate.seeds", "0,1");
  ASSERT_EQ(run(cli::cmd_synth), 0);
  ASSERT_EQ(run(cli::cmd_ablate), 0) << err_.str();
  std::istringstream table(slurp(dir_ / "ablation.csv"));
  std::string line;
  int rows = 0;
  while (std::getline(table, line)) ++rows;
  EXPECT_EQ(rows, 5);
  EXPECT_TRUE(fs::exists(dir_ / "curves" / "full_seed1.csv"));
  EXPECT_NE(log_.str().find("student_only"), std::string::npos);
}

TEST_F(CliTest, GradcheckPasses) {
  EXPECT_EQ(run(cli::cmd_gradcheck), 0) << err_.str();
  EXPECT_NE(log_.str().find("PASS"), std::string::npos);
}

TEST_F(CliTest, GradcheckFailsWithHugeStep) {
  ctx_.config.set("gradcheck.eps", "0.5");
  EXPECT_EQ(run(cli::cmd_gradcheck), cli::kVerificationFailed);
}

TEST(Config, FileOverridesDefaultsAndEchoRoundTrips) {
  const auto rc = RunConfig::parse("# desk run\ntrain.epochs = 12\nsynth.ambiguity_pairs = 0-1, 2-3\n");
  EXPECT_EQ(rc.train.epochs, 12);
  EXPECT_EQ(rc.synth.ambiguity_pairs.size(), 2u);
  EXPECT_EQ(RunConfig::parse(rc.to_text()), rc);
  RunConfig d;
  EXPECT_EQ(RunConfig::parse(d.to_text()), d);
}

TEST(Config, Errors) {
  RunConfig rc;
  EXPECT_THROW(rc.set("train.nope", "1"), ConfigError);
  EXPECT_THROW(rc.set("train.epochs", "ten"), ConfigError);
  EXPECT_THROW(rc.set("model.use_teacher", "false"), ConfigError);
  EXPECT_THROW(rc.set("train.variant", "bogus"), ConfigError);
  EXPECT_THROW(RunConfig::parse("just words\n"), ConfigError);
}

TEST(Config, VariantResolvesStructure) {
  RunConfig rc;
  rc.set("train.variant", "student_only");
  EXPECT_FALSE(rc.resolved_model().use_teacher);
  EXPECT_FALSE(rc.resolved_loss().use_teacher_ce);
}
