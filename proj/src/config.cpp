#include "ascnet/config.hpp"

#include <cerrno>
#include <cmath>
#include <sstream>

#include "text.hpp"

namespace ascnet {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

template <typename T>
std::string join(const std::vector<T>& items, auto&& to_string) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ',';
    out += to_string(items[i]);
  }
  return out;
}

}  // namespace

std::map<std::string, std::string> parse_key_values(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    kv[key] = trim(line.substr(eq + 1));
  }
  return kv;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

long long parse_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  try {
    const long long x = std::stoll(v, &used);
    if (used == v.size()) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected an integer, got '" + v + "'");
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  try {
    if (!v.empty() && v[0] != '-') {
      const unsigned long long x = std::stoull(v, &used);
      if (used == v.size()) return x;
    }
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected an unsigned integer, got '" + v + "'");
}

double parse_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  try {
    const double x = std::stod(v, &used);
    if (used == v.size() && std::isfinite(x)) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a finite number, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::istringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

ModelConfig RunConfig::desk_model() {
  ModelConfig m;
  m.n_levels = 10;
  m.feat_dim = 32;
  m.hidden = 64;
  m.n_classes = 6;
  m.precision = Precision::Float;
  return m;
}

void RunConfig::set(const std::string& key, const std::string& v) {
  try {
    if (key.rfind("model.", 0) == 0) {
      const std::string sub = key.substr(6);
      // Structure switches follow train.variant and are not set directly.
      if (sub == "teacher_mask" || sub == "student_mask" || sub == "use_teacher" || sub == "dense_connections") {
        throw ConfigError(key + " is derived from train.variant");
      }
      auto kv = model.to_map();
      if (!kv.count(sub)) throw ConfigError("unknown key '" + key + "'");
      kv[sub] = v;
      model = ModelConfig::from_map(kv);
    } else if (key == "loss.detach_teacher_in_distill") {
      loss.detach_teacher_in_distill = parse_bool(key, v);
    } else if (key == "train.epochs") {
      train.epochs = static_cast<int>(parse_int(key, v));
    } else if (key == "train.batch_size") {
      train.batch_size = static_cast<int>(parse_int(key, v));
    } else if (key == "train.lr_init") {
      train.lr_init = parse_real(key, v);
    } else if (key == "train.lr_decay") {
      train.lr_decay = parse_real(key, v);
    } else if (key == "train.lr_milestones") {
      train.lr_milestones.clear();
      for (const auto& item : split_list(v)) train.lr_milestones.push_back(static_cast<int>(parse_int(key, item)));
    } else if (key == "train.momentum") {
      train.momentum = parse_real(key, v);
    } else if (key == "train.seed") {
      train.seed = parse_u64(key, v);
    } else if (key == "train.eval_every") {
      train.eval_every = static_cast<int>(parse_int(key, v));
    } else if (key == "train.variant") {
      variant = parse_variant(v);
    } else if (key == "synth.n_classes") {
      synth.n_classes = static_cast<int>(parse_int(key, v));
    } else if (key == "synth.n_levels") {
      synth.n_levels = parse_int(key, v);
    } else if (key == "synth.feat_dim") {
      synth.feat_dim = parse_int(key, v);
    } else if (key == "synth.samples_per_class") {
      synth.samples_per_class = static_cast<int>(parse_int(key, v));
    } else if (key == "synth.ambiguity_pairs") {
      synth.ambiguity_pairs.clear();
      for (const auto& item : split_list(v)) {
        const auto dash = item.find('-');
        if (dash == std::string::npos) throw ConfigError(key + ": pairs are written a-b, got '" + item + "'");
        synth.ambiguity_pairs.emplace_back(static_cast<int>(parse_int(key, item.substr(0, dash))),
                                           static_cast<int>(parse_int(key, item.substr(dash + 1))));
      }
    } else if (key == "synth.noise_sigma") {
      synth.noise_sigma = parse_real(key, v);
    } else if (key == "synth.convergence_rate") {
      synth.convergence_rate = parse_real(key, v);
    } else if (key == "synth.seed") {
      synth.seed = parse_u64(key, v);
    } else if (key == "ablate.variants") {
      ablate_variants.clear();
      if (v == "all") {
        ablate_variants = all_variants();
      } else {
        for (const auto& item : split_list(v)) ablate_variants.push_back(parse_variant(item));
      }
    } else if (key == "ablate.seeds") {
      ablate_seeds.clear();
      for (const auto& item : split_list(v)) ablate_seeds.push_back(parse_u64(key, item));
    } else if (key == "ablate.jobs") {
      jobs = static_cast<int>(parse_int(key, v));
    } else if (key == "data.train") {
      data_train = v;
    } else if (key == "data.test") {
      data_test = v;
    } else if (key == "eval.checkpoint") {
      checkpoint = v;
    } else if (key == "gradcheck.eps") {
      gradcheck_eps = parse_real(key, v);
    } else {
      throw ConfigError("unknown key '" + key + "'");
    }
  } catch (const ParameterError& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

void RunConfig::apply(const std::map<std::string, std::string>& kv) {
  for (const auto& [k, v] : kv) set(k, v);
}

std::map<std::string, std::string> RunConfig::to_map() const {
  std::map<std::string, std::string> kv;
  for (const auto& [k, v] : model.to_map()) {
    if (k == "teacher_mask" || k == "student_mask" || k == "use_teacher" || k == "dense_connections") continue;
    kv["model." + k] = v;
  }
  kv["loss.detach_teacher_in_distill"] = loss.detach_teacher_in_distill ? "true" : "false";
  kv["train.epochs"] = std::to_string(train.epochs);
  kv["train.batch_size"] = std::to_string(train.batch_size);
  kv["train.lr_init"] = text::exact(train.lr_init);
  kv["train.lr_decay"] = text::exact(train.lr_decay);
  kv["train.lr_milestones"] = join(train.lr_milestones, [](int m) { return std::to_string(m); });
  kv["train.momentum"] = text::exact(train.momentum);
  kv["train.seed"] = std::to_string(train.seed);
  kv["train.eval_every"] = std::to_string(train.eval_every);
  kv["train.variant"] = variant_name(variant);
  kv["synth.n_classes"] = std::to_string(synth.n_classes);
  kv["synth.n_levels"] = std::to_string(synth.n_levels);
  kv["synth.feat_dim"] = std::to_string(synth.feat_dim);
  kv["synth.samples_per_class"] = std::to_string(synth.samples_per_class);
  kv["synth.ambiguity_pairs"] = join(synth.ambiguity_pairs, [](const std::pair<int, int>& p) {
    return std::to_string(p.first) + "-" + std::to_string(p.second);
  });
  kv["synth.noise_sigma"] = text::exact(synth.noise_sigma);
  kv["synth.convergence_rate"] = text::exact(synth.convergence_rate);
  kv["synth.seed"] = std::to_string(synth.seed);
  kv["ablate.variants"] = join(ablate_variants, [](AblationVariant a) { return std::string(variant_name(a)); });
  kv["ablate.seeds"] = join(ablate_seeds, [](std::uint64_t s) { return std::to_string(s); });
  kv["ablate.jobs"] = std::to_string(jobs);
  kv["data.train"] = data_train;
  kv["data.test"] = data_test;
  kv["eval.checkpoint"] = checkpoint;
  kv["gradcheck.eps"] = text::exact(gradcheck_eps);
  return kv;
}

std::string RunConfig::to_text() const {
  std::string out = "# resolved configuration\n";
  for (const auto& [k, v] : to_map()) out += k + " = " + v + "\n";
  return out;
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig c;
  c.apply(parse_key_values(text));
  return c;
}

ModelConfig RunConfig::resolved_model() const {
  ModelConfig m = model;
  LossFlags l = loss;
  apply_ablation(variant, m, l);
  return m;
}

LossFlags RunConfig::resolved_loss() const {
  ModelConfig m = model;
  LossFlags l = loss;
  apply_ablation(variant, m, l);
  return l;
}

}  // namespace ascnet
