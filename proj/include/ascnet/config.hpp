#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ascnet/data.hpp"
#include "ascnet/eval.hpp"

namespace ascnet {

/// Bad config text, unknown key or unparsable value. The CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
/// Later duplicates override earlier ones.
std::map<std::string, std::string> parse_key_values(const std::string& text);

bool parse_bool(const std::string& key, const std::string& v);
long long parse_int(const std::string& key, const std::string& v);
std::uint64_t parse_u64(const std::string& key, const std::string& v);
double parse_real(const std::string& key, const std::string& v);
std::vector<std::string> split_list(const std::string& v);

/// Everything one CLI invocation needs. Precedence: defaults < config file < --set / flags.
struct RunConfig {
  ModelConfig model = desk_model();
  TrainConfig train;
  LossFlags loss;
  SyntheticSpec synth;
  AblationVariant variant = AblationVariant::Full;
  std::vector<AblationVariant> ablate_variants = all_variants();
  std::vector<std::uint64_t> ablate_seeds{0, 1, 2, 3, 4};
  int jobs = 1;
  std::string data_train;  ///< empty: <out>/train.ascf
  std::string data_test;   ///< empty: <out>/test.ascf
  std::string checkpoint;  ///< empty: <out>/checkpoint.ascc
  double gradcheck_eps = 1e-6;

  static ModelConfig desk_model();

  void set(const std::string& key, const std::string& value);
  void apply(const std::map<std::string, std::string>& kv);
  std::map<std::string, std::string> to_map() const;
  std::string to_text() const;
  static RunConfig parse(const std::string& text);

  /// Model structure for the configured ablation variant.
  ModelConfig resolved_model() const;
  LossFlags resolved_loss() const;

  bool operator==(const RunConfig&) const = default;
};

}  // namespace ascnet
