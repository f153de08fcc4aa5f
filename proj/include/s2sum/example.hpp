// SPDX-License-Identifier: Apache-2.0
//
// Training examples and the corpus pipeline that produces them.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "s2sum/features.hpp"
#include "s2sum/text.hpp"

namespace s2sum {

/// A raw document/summary pair as read from a JSONL corpus.
struct RawPair {
  std::string id;
  std::string document;
  std::string summary;
};

struct Example {
  std::string id;
  std::vector<int> doc_tokens;            // source-vocabulary ids
  std::vector<std::string> doc_surface;   // lowercased source tokens
  std::vector<int> pos_ids;
  std::vector<int> ner_ids;
  std::vector<int> tf_bin;
  std::vector<int> idf_bin;
  std::vector<int> sent_ids;              // s(j), nondecreasing from 0
  std::vector<int> summary_tokens;        // decoder-vocabulary ids, BOS ... EOS
  std::vector<std::string> summary_surface;  // summary tokens without BOS/EOS
  std::vector<std::uint8_t> switch_targets;  // g_i per summary_tokens position
  std::vector<int> pointer_targets;       // p(i) where g_i == 0, else -1

  std::size_t doc_length() const { return doc_tokens.size(); }
  std::size_t sentence_count() const { return sent_ids.empty() ? 0 : static_cast<std::size_t>(sent_ids.back()) + 1; }

  /// Throws DataError when the per-token sequences disagree in length or
  /// the supervision violates its invariants.
  void validate() const;

  bool operator==(const Example&) const = default;
};

struct PointerSupervision {
  std::vector<int> summary_tokens;
  std::vector<std::uint8_t> switch_targets;
  std::vector<int> pointer_targets;
};

/// Builds decoder targets for a summary (without BOS/EOS). A word that is
/// out of the decoder vocabulary but present in the source is pointed to at
/// its first source occurrence (g = 0). Every other word is generated
/// (g = 1), out-of-vocabulary words as UNK. BOS and EOS are added with g = 1.
PointerSupervision build_pointer_supervision(const std::vector<std::string>& doc_surface,
                                             const std::vector<std::string>& summary_surface,
                                             const Vocabulary& decoder_vocab);

/// Replaces lexicon entities with document-specific placeholders
/// "@entityK", K numbered from 0 in order of first appearance in the
/// document, then in the summary.
void anonymize_entities(SentenceList& doc, SentenceList& summary,
                        const std::map<std::string, std::string>& entity_lexicon);

/// Decoder vocabulary ids for one mini-batch under the large-vocabulary
/// trick: the specials, every decoder-vocabulary word of the batch sources,
/// then the most frequent decoder words until min(lvt_size, |V|) ids. When the
/// sources alone exceed lvt_size they are all kept. Sorted ascending.
std::vector<int> lvt_batch_vocab(const std::vector<const Example*>& batch, const Vocabulary& decoder_vocab,
                                 std::size_t lvt_size);

struct PipelineOptions {
  std::size_t max_doc_tokens = 0;     // 0 = unlimited
  std::size_t max_doc_sentences = 0;  // 0 = unlimited
  std::size_t max_summary_tokens = 0;
};

/// Turns raw pairs into Examples against fixed vocabularies and statistics.
class ExampleBuilder {
 public:
  ExampleBuilder(const Vocabulary& source_vocab, const Vocabulary& decoder_vocab, const Tagger& tagger,
                 const FeatureStats& stats, PipelineOptions options = {});

  void set_entity_lexicon(std::map<std::string, std::string> lexicon) { lexicon_ = std::move(lexicon); }

  Example build(const RawPair& pair) const;

  /// Cased and lowercased sentence lists after truncation and anonymization.
  struct Tokenized {
    SentenceList doc_cased;
    SentenceList doc;
    SentenceList summary;
  };
  Tokenized tokenize_pair(const RawPair& pair) const;

 private:
  const Vocabulary& source_vocab_;
  const Vocabulary& decoder_vocab_;
  const Tagger& tagger_;
  const FeatureStats& stats_;
  PipelineOptions options_;
  std::map<std::string, std::string> lexicon_;
};

/// Reads {"document": ..., "summary": ...} objects, one per line. A missing
/// "id" defaults to the zero-based line number.
std::vector<RawPair> read_corpus(const std::filesystem::path& path);
void write_corpus(const std::filesystem::path& path, const std::vector<RawPair>& pairs);

/// Binary example shards: 16-byte header ("S2SMEXv1", u32 version, u32
/// count), then one u32 length-prefixed record per example. Little endian.
void write_shard(const std::filesystem::path& path, const std::vector<Example>& examples);
std::vector<Example> read_shard(const std::filesystem::path& path);
std::string serialize_example(const Example& ex);
Example deserialize_example(std::string_view bytes);

}  // namespace s2sum
