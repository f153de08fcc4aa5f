// SPDX-License-Identifier: Apache-2.0

#include "s2sum/model_config.hpp"

#include <stdexcept>
#include <string>

namespace s2sum {

void ModelConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument("model config: " + what);
  };
  require(source_vocab >= 4, "source_vocab must cover the 4 special tokens");
  require(target_vocab >= 4, "target_vocab must cover the 4 special tokens");
  require(word_dim >= 1 && hidden >= 1, "word_dim and hidden must be positive");
  require(!(hierarchical && temporal), "hierarchical and temporal attention are mutually exclusive");
  require(!separate_pointer_attention || pointer, "separate_pointer_attention requires pointer");
  require(init_scale > 0.0, "init_scale must be positive");
  if (features) {
    require(pos_tags >= 1 && ner_tags >= 1 && feature_bins >= 1, "feature tables must be nonempty");
    require(pos_dim >= 1 && ner_dim >= 1 && tf_dim >= 1 && idf_dim >= 1, "feature dims must be positive");
  }
  if (hierarchical) require(sentence_positions >= 1, "sentence_positions must be positive");
}

nlohmann::ordered_json ModelConfig::to_json() const {
  nlohmann::ordered_json j;
  j["source_vocab"] = source_vocab;
  j["target_vocab"] = target_vocab;
  j["word_dim"] = word_dim;
  j["hidden"] = hidden;
  j["attention_dim"] = attention_dim;
  j["features"] = features;
  j["pointer"] = pointer;
  j["hierarchical"] = hierarchical;
  j["temporal"] = temporal;
  j["separate_pointer_attention"] = separate_pointer_attention;
  j["pos_tags"] = pos_tags;
  j["ner_tags"] = ner_tags;
  j["feature_bins"] = feature_bins;
  j["pos_dim"] = pos_dim;
  j["ner_dim"] = ner_dim;
  j["tf_dim"] = tf_dim;
  j["idf_dim"] = idf_dim;
  j["sentence_positions"] = sentence_positions;
  j["sentence_position_dim"] = sentence_position_dim;
  j["init_scale"] = init_scale;
  return j;
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("source_vocab", c.source_vocab);
  get("target_vocab", c.target_vocab);
  get("word_dim", c.word_dim);
  get("hidden", c.hidden);
  get("attention_dim", c.attention_dim);
  get("features", c.features);
  get("pointer", c.pointer);
  get("hierarchical", c.hierarchical);
  get("temporal", c.temporal);
  get("separate_pointer_attention", c.separate_pointer_attention);
  get("pos_tags", c.pos_tags);
  get("ner_tags", c.ner_tags);
  get("feature_bins", c.feature_bins);
  get("pos_dim", c.pos_dim);
  get("ner_dim", c.ner_dim);
  get("tf_dim", c.tf_dim);
  get("idf_dim", c.idf_dim);
  get("sentence_positions", c.sentence_positions);
  get("sentence_position_dim", c.sentence_position_dim);
  get("init_scale", c.init_scale);
  return c;
}

}  // namespace s2sum
