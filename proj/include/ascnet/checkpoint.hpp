#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "ascnet/training.hpp"

namespace ascnet {

/// ASCC checkpoint, little-endian:
///   "ASCC" | u32 version=1 | u32 epoch
///   config block: u32 length | `key = value` lines (model structure + optimizer lr/momentum)
///   u32 count | records        parameters
///   u32 count | records        optimizer velocity, one per parameter
///   u32 count | records        BN running statistics (<unit>.running_mean / .running_var)
///   record: u32 name length | name | u32 rows | u32 cols | rows*cols f64, row-major
inline constexpr std::uint32_t kAsccVersion = 1;

template <typename Scalar>
struct Checkpoint {
  AscNet<Scalar> model;
  OptimizerState<Scalar> optimizer;
  std::uint32_t epoch = 0;
};

template <typename Scalar>
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint<Scalar>& ckpt);

template <typename Scalar>
Checkpoint<Scalar> decode_checkpoint(const std::vector<std::uint8_t>& bytes);

/// Model structure stored in a checkpoint, without materializing parameters.
ModelConfig peek_checkpoint_config(const std::vector<std::uint8_t>& bytes);

template <typename Scalar>
void save_checkpoint(const Checkpoint<Scalar>& ckpt, const std::filesystem::path& path);

template <typename Scalar>
Checkpoint<Scalar> load_checkpoint(const std::filesystem::path& path);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);

extern template std::vector<std::uint8_t> encode_checkpoint<float>(const Checkpoint<float>&);
extern template std::vector<std::uint8_t> encode_checkpoint<double>(const Checkpoint<double>&);
extern template Checkpoint<float> decode_checkpoint<float>(const std::vector<std::uint8_t>&);
extern template Checkpoint<double> decode_checkpoint<double>(const std::vector<std::uint8_t>&);
extern template void save_checkpoint<float>(const Checkpoint<float>&, const std::filesystem::path&);
extern template void save_checkpoint<double>(const Checkpoint<double>&, const std::filesystem::path&);
extern template Checkpoint<float> load_checkpoint<float>(const std::filesystem::path&);
extern template Checkpoint<double> load_checkpoint<double>(const std::filesystem::path&);

}  // namespace ascnet
