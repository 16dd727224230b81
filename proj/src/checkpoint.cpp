#include "ascnet/checkpoint.hpp"

#include <cmath>

#include "ascnet/config.hpp"
#include "binary_io.hpp"
#include "text.hpp"

namespace ascnet {

namespace {

template <typename Derived>
void put_record(io::ByteWriter& w, const std::string& name, const Eigen::MatrixBase<Derived>& m) {
  w.str(name);
  w.u32(static_cast<std::uint32_t>(m.rows()));
  w.u32(static_cast<std::uint32_t>(m.cols()));
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) w.f64(static_cast<double>(m(r, c)));
  }
}

struct Record {
  std::string name;
  Matrix<double> value;
  std::size_t offset = 0;
};

Record get_record(io::ByteReader& r) {
  Record rec;
  rec.offset = r.offset();
  rec.name = r.str("record name");
  const std::uint32_t rows = r.u32("record rows");
  const std::uint32_t cols = r.u32("record cols");
  r.require(static_cast<std::size_t>(rows) * cols * 8, "record values");
  rec.value.resize(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i) {
    for (std::uint32_t j = 0; j < cols; ++j) rec.value(i, j) = r.f64("record value");
  }
  if (!rec.value.allFinite()) {
    throw ParseError(ParseError::Kind::NonFinite, rec.offset, "record '" + rec.name + "' holds non-finite values");
  }
  return rec;
}

std::vector<Record> get_section(io::ByteReader& r, const char* what) {
  const std::uint32_t n = r.u32(what);
  std::vector<Record> out;
  for (std::uint32_t i = 0; i < n; ++i) out.push_back(get_record(r));
  return out;
}

template <typename Scalar>
void assign(Matrix<Scalar>& target, const Record& rec, const std::string& expected) {
  if (rec.name != expected) {
    throw ParseError(ParseError::Kind::BadRecord, rec.offset, "expected record '" + expected + "', found '" + rec.name + "'");
  }
  if (rec.value.rows() != target.rows() || rec.value.cols() != target.cols()) {
    throw ParseError(ParseError::Kind::BadRecord, rec.offset,
                     "record '" + rec.name + "' has shape " + shape_string(rec.value) + ", model expects " +
                         shape_string(target));
  }
  target = rec.value.cast<Scalar>();
}

struct Header {
  std::uint32_t epoch = 0;
  ModelConfig model;
  double lr = 0.0;
  double momentum = 0.0;
};

Header get_header(io::ByteReader& r) {
  if (r.raw(4, "magic") != "ASCC") throw ParseError(ParseError::Kind::BadMagic, 0, "not an ASCC checkpoint");
  const std::uint32_t version = r.u32("version");
  if (version != kAsccVersion) {
    throw ParseError(ParseError::Kind::BadVersion, 4, "unsupported ASCC version " + std::to_string(version));
  }
  Header h;
  h.epoch = r.u32("epoch");
  const std::size_t config_at = r.offset();
  auto kv = parse_key_values(r.str("config block"));
  std::map<std::string, std::string> model_kv;
  try {
    h.lr = parse_real("optimizer.lr", kv.at("optimizer.lr"));
    h.momentum = parse_real("optimizer.momentum", kv.at("optimizer.momentum"));
    for (const auto& [k, v] : kv) {
      if (k.rfind("model.", 0) == 0) model_kv[k.substr(6)] = v;
    }
    h.model = ModelConfig::from_map(model_kv);
    h.model.validate();
  } catch (const std::exception& e) {
    throw ParseError(ParseError::Kind::BadRecord, config_at, std::string("bad config block: ") + e.what());
  }
  return h;
}

}  // namespace

template <typename Scalar>
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint<Scalar>& ckpt) {
  const auto& net = ckpt.model;
  if (ckpt.optimizer.velocity.size() != net.params.size()) {
    throw ShapeError("checkpoint: " + std::to_string(ckpt.optimizer.velocity.size()) + " velocity buffers for " +
                     std::to_string(net.params.size()) + " parameters");
  }
  io::ByteWriter w;
  w.raw("ASCC", 4);
  w.u32(kAsccVersion);
  w.u32(ckpt.epoch);
  std::string config;
  for (const auto& [k, v] : net.config.to_map()) config += "model." + k + " = " + v + "\n";
  config += "optimizer.lr = " + text::exact(ckpt.optimizer.lr) + "\n";
  config += "optimizer.momentum = " + text::exact(ckpt.optimizer.momentum) + "\n";
  w.str(config);

  w.u32(static_cast<std::uint32_t>(net.params.size()));
  for (const auto& p : net.params) put_record(w, p.name, p.value);
  w.u32(static_cast<std::uint32_t>(net.params.size()));
  for (std::size_t i = 0; i < net.params.size(); ++i) {
    put_record(w, "velocity/" + net.params[i].name, ckpt.optimizer.velocity[i]);
  }
  w.u32(static_cast<std::uint32_t>(2 * net.stats.size()));
  for (const auto& s : net.stats) {
    put_record(w, s.name + ".running_mean", s.mean);
    put_record(w, s.name + ".running_var", s.var);
  }
  return std::move(w.bytes());
}

ModelConfig peek_checkpoint_config(const std::vector<std::uint8_t>& bytes) {
  io::ByteReader r(bytes);
  return get_header(r).model;
}

template <typename Scalar>
Checkpoint<Scalar> decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  io::ByteReader r(bytes);
  const Header h = get_header(r);

  Checkpoint<Scalar> ckpt;
  ckpt.epoch = h.epoch;
  Rng unused(0);
  ckpt.model = build<Scalar>(h.model, unused);
  auto& net = ckpt.model;
  ckpt.optimizer = OptimizerState<Scalar>::zeros_like(net.params, h.lr, h.momentum);

  const std::size_t params_at = r.offset();
  const auto params = get_section(r, "parameter count");
  if (params.size() != net.params.size()) {
    throw ParseError(ParseError::Kind::BadRecord, params_at,
                     "checkpoint holds " + std::to_string(params.size()) + " parameters, model has " +
                         std::to_string(net.params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) assign(net.params[i].value, params[i], net.params[i].name);

  const std::size_t velocity_at = r.offset();
  const auto velocity = get_section(r, "velocity count");
  if (velocity.size() != net.params.size()) {
    throw ParseError(ParseError::Kind::BadRecord, velocity_at, "velocity count does not match parameter count");
  }
  for (std::size_t i = 0; i < velocity.size(); ++i) {
    assign(ckpt.optimizer.velocity[i], velocity[i], "velocity/" + net.params[i].name);
  }

  const std::size_t stats_at = r.offset();
  const auto stats = get_section(r, "statistics count");
  if (stats.size() != 2 * net.stats.size()) {
    throw ParseError(ParseError::Kind::BadRecord, stats_at, "running statistics count does not match the model");
  }
  for (std::size_t i = 0; i < net.stats.size(); ++i) {
    auto& s = net.stats[i];
    Matrix<Scalar> mean = s.mean;
    Matrix<Scalar> var = s.var;
    assign(mean, stats[2 * i], s.name + ".running_mean");
    assign(var, stats[2 * i + 1], s.name + ".running_var");
    s.mean = mean;
    s.var = var;
  }
  if (r.remaining() != 0) {
    throw ParseError(ParseError::Kind::BadRecord, r.offset(), "trailing bytes after the last record");
  }
  return ckpt;
}

template <typename Scalar>
void save_checkpoint(const Checkpoint<Scalar>& ckpt, const std::filesystem::path& path) {
  io::write_file(path, encode_checkpoint(ckpt));
}

template <typename Scalar>
Checkpoint<Scalar> load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint<Scalar>(io::read_file(path));
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) { return io::read_file(path); }

template std::vector<std::uint8_t> encode_checkpoint<float>(const Checkpoint<float>&);
template std::vector<std::uint8_t> encode_checkpoint<double>(const Checkpoint<double>&);
template Checkpoint<float> decode_checkpoint<float>(const std::vector<std::uint8_t>&);
template Checkpoint<double> decode_checkpoint<double>(const std::vector<std::uint8_t>&);
template void save_checkpoint<float>(const Checkpoint<float>&, const std::filesystem::path&);
template void save_checkpoint<double>(const Checkpoint<double>&, const std::filesystem::path&);
template Checkpoint<float> load_checkpoint<float>(const std::filesystem::path&);
template Checkpoint<double> load_checkpoint<double>(const std::filesystem::path&);

}  // namespace ascnet
