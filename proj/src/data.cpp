#include "ascnet/data.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "ascnet/rng.hpp"
#include "binary_io.hpp"

namespace ascnet {

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(std::max(n_classes, 0)), 0);
  for (const auto& s : samples) {
    if (s.label >= 0 && s.label < n_classes) ++counts[static_cast<std::size_t>(s.label)];
  }
  return counts;
}

void Dataset::validate() const {
  if (n_levels < 1 || feat_dim < 1 || n_classes < 1) {
    throw ParameterError("dataset: N, D and n_classes must be positive");
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.features.rows() != n_levels || s.features.cols() != feat_dim) {
      throw ParameterError("dataset: sample " + std::to_string(i) + " has shape " + shape_string(s.features) +
                           ", expected " + shape_string(n_levels, feat_dim));
    }
    if (s.label < 0 || s.label >= n_classes) {
      throw ParameterError("dataset: sample " + std::to_string(i) + " has label " + std::to_string(s.label));
    }
    if (!s.features.allFinite()) throw ParameterError("dataset: sample " + std::to_string(i) + " is not finite");
  }
}

double progress_ratio(Index level, Index n_levels) {
  if (n_levels < 1 || level < 1 || level > n_levels) {
    throw ParameterError("progress_ratio: level " + std::to_string(level) + " outside [1, " +
                         std::to_string(n_levels) + "]");
  }
  return static_cast<double>(level) / static_cast<double>(n_levels);
}

std::uint64_t source_id_hash(const std::string& source_id) {
  if (source_id.size() == 16 &&
      source_id.find_first_not_of("0123456789abcdef") == std::string::npos) {
    return std::stoull(source_id, nullptr, 16);
  }
  return fnv1a64(source_id);
}

std::string source_id_from_hash(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return buf;
}

std::vector<std::uint8_t> encode_features(const Dataset& dataset) {
  dataset.validate();
  io::ByteWriter w;
  w.raw("ASCF", 4);
  w.u32(kAscfVersion);
  w.u32(static_cast<std::uint32_t>(dataset.samples.size()));
  w.u32(static_cast<std::uint32_t>(dataset.n_levels));
  w.u32(static_cast<std::uint32_t>(dataset.feat_dim));
  w.u32(static_cast<std::uint32_t>(dataset.n_classes));
  for (const auto& s : dataset.samples) {
    w.u32(static_cast<std::uint32_t>(s.label));
    w.u64(source_id_hash(s.source_id));
    for (Index i = 0; i < s.features.size(); ++i) w.f32(static_cast<float>(s.features.data()[i]));
  }
  return std::move(w.bytes());
}

Dataset decode_features(const std::vector<std::uint8_t>& bytes, Split split) {
  io::ByteReader r(bytes);
  if (r.raw(4, "magic") != "ASCF") throw ParseError(ParseError::Kind::BadMagic, 0, "not an ASCF container");
  const std::uint32_t version = r.u32("version");
  if (version != kAscfVersion) {
    throw ParseError(ParseError::Kind::BadVersion, 4, "unsupported ASCF version " + std::to_string(version));
  }
  const std::uint32_t count = r.u32("sample count");
  Dataset d;
  d.split = split;
  d.n_levels = r.u32("N");
  d.feat_dim = r.u32("D");
  d.n_classes = static_cast<int>(r.u32("class count"));
  if (d.n_levels < 1 || d.feat_dim < 1 || d.n_classes < 1) {
    throw ParseError(ParseError::Kind::BadRecord, 12, "header declares an empty dimension");
  }
  const std::size_t values = static_cast<std::size_t>(d.n_levels * d.feat_dim);
  d.samples.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::size_t label_at = r.offset();
    VideoSample s;
    const std::uint32_t label = r.u32("sample label");
    if (label >= static_cast<std::uint32_t>(d.n_classes)) {
      throw ParseError(ParseError::Kind::LabelOutOfRange, label_at,
                       "label " + std::to_string(label) + " of sample " + std::to_string(k) + " exceeds class count " +
                           std::to_string(d.n_classes));
    }
    s.label = static_cast<int>(label);
    s.source_id = source_id_from_hash(r.u64("source id"));
    r.require(values * 4, "sample features");
    const std::size_t features_at = r.offset();
    s.features.resize(d.n_levels, d.feat_dim);
    for (std::size_t i = 0; i < values; ++i) {
      const float v = r.f32("feature");
      if (!std::isfinite(v)) {
        throw ParseError(ParseError::Kind::NonFinite, features_at + 4 * i, "non-finite feature value");
      }
      s.features.data()[i] = v;
    }
    d.samples.push_back(std::move(s));
  }
  if (r.remaining() != 0) {
    throw ParseError(ParseError::Kind::BadRecord, r.offset(),
                     std::to_string(r.remaining()) + " trailing bytes after the declared samples");
  }
  return d;
}

std::size_t write_features(const Dataset& dataset, const std::filesystem::path& path) {
  const auto bytes = encode_features(dataset);
  io::write_file(path, bytes);
  return bytes.size();
}

Dataset load_features(const std::filesystem::path& path, Split split) {
  return decode_features(io::read_file(path), split);
}

void SyntheticSpec::validate() const {
  if (n_classes < 1) throw ParameterError("synthetic: n_classes must be >= 1");
  if (n_levels < 1) throw ParameterError("synthetic: n_levels must be >= 1");
  if (feat_dim < 1) throw ParameterError("synthetic: feat_dim must be >= 1");
  if (samples_per_class < 2) {
    throw ParameterError("synthetic: samples_per_class must be >= 2 so both splits are populated, got " +
                         std::to_string(samples_per_class));
  }
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) throw ParameterError("synthetic: noise_sigma must be >= 0");
  if (!(convergence_rate > 0.0 && convergence_rate <= 1.0)) {
    throw ParameterError("synthetic: convergence_rate must lie in (0, 1]");
  }
  std::set<int> used;
  for (auto [a, b] : ambiguity_pairs) {
    if (a < 0 || b < 0 || a >= n_classes || b >= n_classes || a == b) {
      throw ParameterError("synthetic: invalid ambiguity pair (" + std::to_string(a) + ", " + std::to_string(b) + ")");
    }
    if (!used.insert(a).second || !used.insert(b).second) {
      throw ParameterError("synthetic: a class may belong to at most one ambiguity pair");
    }
  }
}

namespace {

RowVector<double> unit_gaussian(Index dim, Rng& rng) {
  RowVector<double> v(dim);
  do {
    for (Index i = 0; i < dim; ++i) v(i) = rng.normal();
  } while (v.norm() < 1e-12);
  return v / v.norm();
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  SyntheticData out;
  out.prototypes.resize(spec.n_classes, spec.feat_dim);
  for (int c = 0; c < spec.n_classes; ++c) out.prototypes.row(c) = unit_gaussian(spec.feat_dim, rng);
  const RowVector<double> shared_start = unit_gaussian(spec.feat_dim, rng);

  Matrix<double> starts(spec.n_classes, spec.feat_dim);
  for (int c = 0; c < spec.n_classes; ++c) starts.row(c) = shared_start;
  for (auto [a, b] : spec.ambiguity_pairs) {
    RowVector<double> mid = out.prototypes.row(a) + out.prototypes.row(b);
    // Antipodal prototypes have no midpoint direction; fall back to the shared start.
    if (mid.norm() >= 1e-12) mid /= mid.norm(); else mid = shared_start;
    starts.row(a) = mid;
    starts.row(b) = mid;
  }

  std::vector<double> alpha(static_cast<std::size_t>(spec.n_levels));
  for (Index n = 1; n <= spec.n_levels; ++n) {
    alpha[static_cast<std::size_t>(n - 1)] = 1.0 - std::pow(1.0 - spec.convergence_rate, static_cast<double>(n));
  }

  for (Dataset* d : {&out.train, &out.test}) {
    d->n_levels = spec.n_levels;
    d->feat_dim = spec.feat_dim;
    d->n_classes = spec.n_classes;
  }
  out.train.split = Split::Train;
  out.test.split = Split::Test;

  const int n_test = std::max(1, spec.samples_per_class / 5);
  const int n_train = spec.samples_per_class - n_test;
  for (int c = 0; c < spec.n_classes; ++c) {
    for (int k = 0; k < spec.samples_per_class; ++k) {
      VideoSample s;
      s.label = c;
      s.source_id = source_id_from_hash(
          fnv1a64("synthetic/" + std::to_string(spec.seed) + "/" + std::to_string(c) + "/" + std::to_string(k)));
      s.features.resize(spec.n_levels, spec.feat_dim);
      for (Index n = 0; n < spec.n_levels; ++n) {
        const double a = alpha[static_cast<std::size_t>(n)];
        RowVector<double> v = (1.0 - a) * starts.row(c) + a * out.prototypes.row(c);
        const double norm = v.norm();
        if (norm >= 1e-12) v /= norm;
        for (Index j = 0; j < spec.feat_dim; ++j) {
          const double noisy = spec.noise_sigma > 0.0 ? v(j) + rng.normal(0.0, spec.noise_sigma) : v(j);
          s.features(n, j) = static_cast<double>(static_cast<float>(noisy));
        }
      }
      (k < n_train ? out.train : out.test).samples.push_back(std::move(s));
    }
  }
  return out;
}

}  // namespace ascnet
