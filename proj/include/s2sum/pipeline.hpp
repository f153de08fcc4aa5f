// SPDX-License-Identifier: Apache-2.0
//
// Corpus preprocessing end to end: vocabularies and feature statistics fit
// on a training corpus, then examples built in parallel.

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "s2sum/example.hpp"
#include "s2sum/features.hpp"
#include "s2sum/text.hpp"

namespace s2sum {

struct PipelineConfig {
  std::size_t source_vocab_size = 150000;
  std::size_t decoder_vocab_size = 69000;
  std::size_t min_count = 1;  // words seen fewer times map to UNK
  std::size_t feature_bins = FeatureStats::kDefaultBins;
  PipelineOptions limits;
  std::map<std::string, std::string> entity_lexicon;
};

struct Preprocessed {
  Vocabulary source;
  Vocabulary decoder;
  FeatureStats stats;

  /// Writes source.vocab, decoder.vocab and features.json into `dir`.
  void save(const std::filesystem::path& dir) const;
  static Preprocessed load(const std::filesystem::path& dir);
};

Preprocessed fit_preprocessing(const std::vector<RawPair>& train, const PipelineConfig& config);

/// Builds examples in input order using up to `threads` workers.
std::vector<Example> build_examples(const Preprocessed& prep, const std::vector<RawPair>& pairs,
                                    const PipelineConfig& config, std::size_t threads = 1);

/// Worker count from S2SM_THREADS, default 1, at least 1.
std::size_t pipeline_threads();

}  // namespace s2sum
