#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ascnet/core.hpp"

namespace ascnet {

/// One video: row n holds the feature of the partial video made of the
/// first n+1 of N uniform segments.
struct VideoSample {
  Matrix<double> features;
  int label = 0;
  std::string source_id;

  bool operator==(const VideoSample& o) const {
    return label == o.label && source_id == o.source_id && features.rows() == o.features.rows() &&
           features.cols() == o.features.cols() && features == o.features;
  }
};

enum class Split { Train, Test };

struct Dataset {
  std::vector<VideoSample> samples;
  Index n_levels = 0;
  Index feat_dim = 0;
  int n_classes = 0;
  Split split = Split::Train;

  bool empty() const { return samples.empty(); }
  std::size_t size() const { return samples.size(); }
  std::vector<std::size_t> class_counts() const;
  /// Throws ParameterError on a shape/label/finiteness violation.
  void validate() const;
};

/// Observation ratio n / N of progress level n (1-based).
double progress_ratio(Index level, Index n_levels);

/// ASCF container, little-endian:
///   "ASCF" | u32 version=1 | u32 sample_count | u32 N | u32 D | u32 n_classes
///   per sample: u32 label | u64 source-id hash | N*D float32, row-major
inline constexpr std::size_t kAscfHeaderBytes = 24;
inline constexpr std::uint32_t kAscfVersion = 1;

/// 8-byte on-disk form of a source id. A 16-digit lowercase hex id is taken
/// verbatim, anything else is hashed, so loaded ids survive a rewrite.
std::uint64_t source_id_hash(const std::string& source_id);
std::string source_id_from_hash(std::uint64_t hash);

std::vector<std::uint8_t> encode_features(const Dataset& dataset);
Dataset decode_features(const std::vector<std::uint8_t>& bytes, Split split = Split::Train);

/// Returns the number of bytes written.
std::size_t write_features(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_features(const std::filesystem::path& path, Split split = Split::Train);

struct SyntheticSpec {
  int n_classes = 6;
  Index n_levels = 10;
  Index feat_dim = 32;
  int samples_per_class = 200;
  std::vector<std::pair<int, int>> ambiguity_pairs{{0, 1}, {2, 3}, {4, 5}};
  double noise_sigma = 0.15;
  double convergence_rate = 0.35;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const SyntheticSpec&) const = default;
};

struct SyntheticData {
  Dataset train;
  Dataset test;
  Matrix<double> prototypes;  ///< n_classes x feat_dim, unit rows
};

/// Each class c gets a unit prototype p_c. Classes in an ambiguity pair (a, b)
/// start from the normalized midpoint of p_a and p_b; other classes start
/// from one shared random direction. Level n (1-based) is
///   normalize((1 - a_n) start_c + a_n p_c) + N(0, sigma^2),  a_n = 1 - (1 - rate)^n,
/// rounded to float32. Per class, the last max(1, spc / 5) samples form the test split.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

}  // namespace ascnet
