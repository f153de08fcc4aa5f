// SPDX-License-Identifier: Apache-2.0
//
// Named learnable tensors and their on-disk checkpoint format.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "s2sum/tensor.hpp"

namespace s2sum {

enum class Init { kUniform, kZero };

/// Ordered collection of learnable tensors. Registration order is fixed by
/// the model configuration, which makes seeded initialization and
/// checkpoints reproducible.
class ParamStore {
 public:
  /// Registers a new leaf tensor that requires gradients. Names are unique.
  Tensor add(const std::string& name, Shape shape, Init init = Init::kUniform);

  /// Uniform(-scale, scale) for kUniform tensors, zeros for kZero tensors,
  /// drawn in registration order from a generator seeded with `seed`.
  void initialize(std::uint64_t seed, double scale = 0.1);

  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;
  std::size_t size() const { return entries_.size(); }
  std::size_t parameter_count() const;

  struct Entry {
    std::string name;
    Tensor tensor;
    Init init;
  };
  const std::vector<Entry>& entries() const { return entries_; }

  void zero_grad();
  double grad_norm() const;
  bool all_finite() const;

  /// Deep copy of all values, in registration order.
  std::vector<std::vector<double>> snapshot() const;
  void restore(const std::vector<std::vector<double>>& values);

 private:
  std::vector<Entry> entries_;
};

/// Checkpoint layout, little endian:
///   "S2SMCKv1" | u32 version | u32 config_len | config JSON bytes
///   | u32 tensor_count | per tensor: u32 name_len, name, u32 ndim, u64 dims...,
///     u64 offset (bytes into the blob area)
///   | blob area: raw float64 values
void save_checkpoint(const std::filesystem::path& path, const ParamStore& params, const std::string& config_json);

struct CheckpointData {
  std::string config_json;
  std::vector<std::string> names;
  std::vector<Shape> shapes;
  std::vector<std::vector<double>> values;
};
CheckpointData read_checkpoint(const std::filesystem::path& path);

/// Copies checkpoint values into a store with the same manifest.
void load_into(const CheckpointData& data, ParamStore& params);

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit draw.
double unit_uniform(std::uint64_t bits);

}  // namespace s2sum
