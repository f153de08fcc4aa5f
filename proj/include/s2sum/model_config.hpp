// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "json.hpp"

namespace s2sum {

struct ModelConfig {
  std::size_t source_vocab = 0;
  std::size_t target_vocab = 0;
  std::size_t word_dim = 100;
  std::size_t hidden = 200;
  std::size_t attention_dim = 0;  // 0 = same as hidden

  bool features = false;
  bool pointer = false;  // switching generator-pointer
  bool hierarchical = false;
  bool temporal = false;
  bool separate_pointer_attention = false;

  std::size_t pos_tags = 11;
  std::size_t ner_tags = 3;
  std::size_t feature_bins = 10;
  std::size_t pos_dim = 20;
  std::size_t ner_dim = 15;
  std::size_t tf_dim = 10;
  std::size_t idf_dim = 10;

  std::size_t sentence_positions = 64;
  std::size_t sentence_position_dim = 16;

  double init_scale = 0.1;

  std::size_t attn_dim() const { return attention_dim ? attention_dim : hidden; }
  std::size_t encoder_input_dim() const {
    return features ? word_dim + pos_dim + ner_dim + tf_dim + idf_dim : word_dim;
  }
  std::size_t context_dim() const { return 2 * hidden; }

  /// Throws std::invalid_argument for inconsistent settings.
  void validate() const;

  nlohmann::ordered_json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

}  // namespace s2sum
