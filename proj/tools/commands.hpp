#pragma once

#include <filesystem>
#include <ostream>

#include "ascnet/config.hpp"

namespace ascnet::cli {

enum ExitCode : int { kOk = 0, kInternal = 1, kUsage = 2, kVerificationFailed = 3 };

struct Context {
  RunConfig config;
  std::filesystem::path out_dir = "out";
  std::ostream* log = nullptr;
};

int cmd_synth(const Context& ctx);
int cmd_train(const Context& ctx);
int cmd_eval(const Context& ctx);
int cmd_ablate(const Context& ctx);
int cmd_gradcheck(const Context& ctx);

/// Runs one command and maps exceptions onto exit codes, printing the
/// message to `err`.
int run_guarded(int (*command)(const Context&), const Context& ctx, std::ostream& err);

}  // namespace ascnet::cli
