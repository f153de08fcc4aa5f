// SPDX-License-Identifier: Apache-2.0
//
// Linguistic features for the feature-rich encoder: POS and NER tags from a
// pluggable tagger, and binned TF / IDF statistics.

#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "s2sum/text.hpp"

namespace s2sum {

class AnnotationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TermStats {
  double tf = 0.0;
  double idf = 0.0;
};

/// tf(w) = count(w in doc) / len(doc); idf(w) = ln(corpus_size / (1 + df(w))).
/// One entry per token of the flattened document.
std::vector<TermStats> compute_tfidf(const SentenceList& doc, const std::map<std::string, std::uint64_t>& doc_freq,
                                     std::uint64_t corpus_size);

/// Maps a continuous statistic to one of a fixed number of bins.
class FeatureBinner {
 public:
  FeatureBinner() = default;
  /// Boundaries must be strictly increasing.
  explicit FeatureBinner(std::vector<double> boundaries);

  /// Equal-frequency quantile boundaries over the observed values. Duplicate
  /// quantiles collapse, so the result may have fewer than `bins` bins.
  static FeatureBinner fit(std::vector<double> values, std::size_t bins);

  /// Index of the bin holding value: the number of boundaries <= value.
  int bin(double value) const;
  std::size_t bin_count() const { return boundaries_.size() + 1; }
  const std::vector<double>& boundaries() const { return boundaries_; }

 private:
  std::vector<double> boundaries_;
};

struct TokenTags {
  std::string pos;
  std::string ner;
};

/// Produces one POS and one NER tag per token of a sentence given in its
/// original casing.
class Tagger {
 public:
  virtual ~Tagger() = default;
  virtual std::vector<TokenTags> tag(const Sentence& cased_tokens) const = 0;
  virtual const std::vector<std::string>& pos_tags() const = 0;
  virtual const std::vector<std::string>& ner_tags() const = 0;
};

/// Deterministic suffix/shape rules standing in for a statistical tagger.
/// Capitalized tokens are tagged ENT, everything else O.
class RuleTagger : public Tagger {
 public:
  std::vector<TokenTags> tag(const Sentence& cased_tokens) const override;
  const std::vector<std::string>& pos_tags() const override;
  const std::vector<std::string>& ner_tags() const override;
};

/// Corpus-level statistics needed to annotate any document consistently.
struct FeatureStats {
  std::map<std::string, std::uint64_t> doc_freq;
  std::uint64_t corpus_size = 0;
  FeatureBinner tf_binner;
  FeatureBinner idf_binner;

  static constexpr std::size_t kDefaultBins = 10;

  /// Document frequencies and quantile bins over a lowercased corpus.
  static FeatureStats fit(const std::vector<SentenceList>& documents, std::size_t bins = kDefaultBins);

  nlohmann::json to_json() const;
  static FeatureStats from_json(const nlohmann::json& j);
};

struct FeatureIds {
  std::vector<int> pos;
  std::vector<int> ner;
  std::vector<int> tf_bin;
  std::vector<int> idf_bin;
};

/// Per-token categorical feature ids for a document. `cased_doc` drives the
/// tagger; TF/IDF are computed over its lowercased form.
FeatureIds annotate_features(const SentenceList& cased_doc, const Tagger& tagger, const FeatureStats& stats);

}  // namespace s2sum
