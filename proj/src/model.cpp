#include "ascnet/model.hpp"

#include "ascnet/config.hpp"
#include "ascnet/loss.hpp"
#include "text.hpp"

namespace ascnet {

const char* mask_kind_name(MaskKind kind) {
  switch (kind) {
    case MaskKind::TeacherBidirectional: return "bidirectional";
    case MaskKind::StudentCausal: return "causal";
    case MaskKind::Diagonal: return "diagonal";
  }
  return "unknown";
}

MaskKind parse_mask_kind(const std::string& name) {
  for (auto k : {MaskKind::TeacherBidirectional, MaskKind::StudentCausal, MaskKind::Diagonal}) {
    if (name == mask_kind_name(k)) return k;
  }
  throw ParameterError("unknown mask kind '" + name + "'");
}

void ModelConfig::validate() const {
  if (n_levels < 1) throw ParameterError("model: n_levels must be >= 1");
  if (feat_dim < 1) throw ParameterError("model: feat_dim must be >= 1");
  if (hidden < 1) throw ParameterError("model: hidden must be >= 1, got " + std::to_string(hidden));
  if (n_classes < 1) throw ParameterError("model: n_classes must be >= 1");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw ParameterError("model: dropout_p must lie in [0, 1)");
  if (!(bn_eps > 0.0)) throw ParameterError("model: bn_eps must be positive");
  if (!(bn_momentum >= 0.0 && bn_momentum <= 1.0)) throw ParameterError("model: bn_momentum must lie in [0, 1]");
}

std::map<std::string, std::string> ModelConfig::to_map() const {
  auto b = [](bool v) { return std::string(v ? "true" : "false"); };
  return {
      {"n_levels", std::to_string(n_levels)},
      {"feat_dim", std::to_string(feat_dim)},
      {"hidden", std::to_string(hidden)},
      {"n_classes", std::to_string(n_classes)},
      {"dropout_p", text::exact(dropout_p)},
      {"precision", precision_name(precision)},
      {"teacher_mask", mask_kind_name(teacher_mask)},
      {"student_mask", mask_kind_name(student_mask)},
      {"use_teacher", b(use_teacher)},
      {"dense_connections", b(dense_connections)},
      {"similarity_stop_gradient", b(similarity_stop_gradient)},
      {"share_aprime", b(share_aprime)},
      {"dgc_share_weights", b(dgc_share_weights)},
      {"bn_eps", text::exact(bn_eps)},
      {"bn_momentum", text::exact(bn_momentum)},
  };
}

ModelConfig ModelConfig::from_map(const std::map<std::string, std::string>& kv) {
  ModelConfig c;
  for (const auto& [key, v] : kv) {
    if (key == "n_levels") c.n_levels = parse_int(key, v);
    else if (key == "feat_dim") c.feat_dim = parse_int(key, v);
    else if (key == "hidden") c.hidden = parse_int(key, v);
    else if (key == "n_classes") c.n_classes = parse_int(key, v);
    else if (key == "dropout_p") c.dropout_p = parse_real(key, v);
    else if (key == "precision") c.precision = parse_precision(v);
    else if (key == "teacher_mask") c.teacher_mask = parse_mask_kind(v);
    else if (key == "student_mask") c.student_mask = parse_mask_kind(v);
    else if (key == "use_teacher") c.use_teacher = parse_bool(key, v);
    else if (key == "dense_connections") c.dense_connections = parse_bool(key, v);
    else if (key == "similarity_stop_gradient") c.similarity_stop_gradient = parse_bool(key, v);
    else if (key == "share_aprime") c.share_aprime = parse_bool(key, v);
    else if (key == "dgc_share_weights") c.dgc_share_weights = parse_bool(key, v);
    else if (key == "bn_eps") c.bn_eps = parse_real(key, v);
    else if (key == "bn_momentum") c.bn_momentum = parse_real(key, v);
    else throw ConfigError("unknown model key '" + key + "'");
  }
  return c;
}

std::vector<int> expand_labels(const std::vector<int>& labels, Index n_levels) {
  std::vector<int> rows;
  rows.reserve(labels.size() * static_cast<std::size_t>(n_levels));
  for (int y : labels) rows.insert(rows.end(), static_cast<std::size_t>(n_levels), y);
  return rows;
}

}  // namespace ascnet
