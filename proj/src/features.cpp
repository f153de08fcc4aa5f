// SPDX-License-Identifier: Apache-2.0

#include "s2sum/features.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_map>

namespace s2sum {

std::vector<TermStats> compute_tfidf(const SentenceList& doc, const std::map<std::string, std::uint64_t>& doc_freq,
                                     std::uint64_t corpus_size) {
  if (corpus_size < 1) throw std::invalid_argument("compute_tfidf: corpus_size must be at least 1");
  const auto tokens = flatten(doc);
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& t : tokens) ++counts[t];

  std::vector<TermStats> out;
  out.reserve(tokens.size());
  const double len = static_cast<double>(tokens.size());
  for (const auto& t : tokens) {
    auto it = doc_freq.find(t);
    const double df = it == doc_freq.end() ? 0.0 : static_cast<double>(it->second);
    out.push_back({static_cast<double>(counts[t]) / len, std::log(static_cast<double>(corpus_size) / (1.0 + df))});
  }
  return out;
}

// ---------------------------------------------------------------------------

FeatureBinner::FeatureBinner(std::vector<double> boundaries) : boundaries_(std::move(boundaries)) {
  for (std::size_t i = 1; i < boundaries_.size(); ++i) {
    if (!(boundaries_[i] > boundaries_[i - 1])) {
      throw std::invalid_argument("FeatureBinner: boundaries must be strictly increasing");
    }
  }
}

FeatureBinner FeatureBinner::fit(std::vector<double> values, std::size_t bins) {
  if (bins < 1) throw std::invalid_argument("FeatureBinner: need at least one bin");
  std::vector<double> boundaries;
  if (values.empty()) return FeatureBinner(boundaries);
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  for (std::size_t i = 1; i < bins; ++i) {
    const double q = values[std::min(n - 1, i * n / bins)];
    if (boundaries.empty() || q > boundaries.back()) boundaries.push_back(q);
  }
  return FeatureBinner(std::move(boundaries));
}

int FeatureBinner::bin(double value) const {
  return static_cast<int>(std::upper_bound(boundaries_.begin(), boundaries_.end(), value) - boundaries_.begin());
}

// ---------------------------------------------------------------------------

namespace {

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() > suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

std::string rule_pos(const std::string& cased) {
  static const std::set<std::string> determiners{"the", "a", "an", "this", "that", "these", "those"};
  static const std::set<std::string> pronouns{"i", "you", "he", "she", "it", "we", "they", "him",
                                              "her", "them", "his", "its", "their", "our", "my"};
  static const std::set<std::string> adpositions{"in", "on", "at", "of", "for", "with", "by", "from",
                                                 "to", "into", "over", "under", "about", "after", "before"};
  static const std::set<std::string> conjunctions{"and", "or", "but", "nor", "yet", "so"};

  const std::string w = lowercase(cased);
  const bool all_punct = std::all_of(w.begin(), w.end(), [](unsigned char c) { return std::ispunct(c) != 0; });
  if (all_punct) return "PUNCT";
  const bool all_digit = std::all_of(w.begin(), w.end(), [](unsigned char c) {
    return std::isdigit(c) != 0 || c == '.' || c == ',';
  });
  if (all_digit) return "NUM";
  if (determiners.contains(w)) return "DET";
  if (pronouns.contains(w)) return "PRON";
  if (adpositions.contains(w)) return "ADP";
  if (conjunctions.contains(w)) return "CONJ";
  if (ends_with(w, "ly")) return "ADV";
  if (ends_with(w, "ing") || ends_with(w, "ed")) return "VERB";
  if (ends_with(w, "ous") || ends_with(w, "ful") || ends_with(w, "ive") || ends_with(w, "able")) return "ADJ";
  return "NOUN";
}

int tag_index(const std::vector<std::string>& tags, const std::string& tag) {
  auto it = std::find(tags.begin(), tags.end(), tag);
  if (it == tags.end()) throw AnnotationError("tagger produced unknown tag '" + tag + "'");
  return static_cast<int>(it - tags.begin());
}

}  // namespace

std::vector<TokenTags> RuleTagger::tag(const Sentence& cased_tokens) const {
  std::vector<TokenTags> out;
  out.reserve(cased_tokens.size());
  for (const auto& tok : cased_tokens) {
    const bool capitalized = !tok.empty() && tok[0] >= 'A' && tok[0] <= 'Z';
    out.push_back({rule_pos(tok), capitalized ? "ENT" : "O"});
  }
  return out;
}

const std::vector<std::string>& RuleTagger::pos_tags() const {
  static const std::vector<std::string> tags{"<pad>", "NOUN", "VERB", "ADJ", "ADV", "DET",
                                             "PRON",  "ADP",  "CONJ", "NUM", "PUNCT"};
  return tags;
}

const std::vector<std::string>& RuleTagger::ner_tags() const {
  static const std::vector<std::string> tags{"<pad>", "O", "ENT"};
  return tags;
}

// ---------------------------------------------------------------------------

FeatureStats FeatureStats::fit(const std::vector<SentenceList>& documents, std::size_t bins) {
  FeatureStats stats;
  stats.corpus_size = documents.size();
  for (const auto& doc : documents) {
    const auto tokens = flatten(doc);
    std::set<std::string> unique(tokens.begin(), tokens.end());
    for (const auto& t : unique) ++stats.doc_freq[t];
  }
  std::vector<double> tfs, idfs;
  if (stats.corpus_size > 0) {
    for (const auto& doc : documents) {
      for (const auto& s : compute_tfidf(doc, stats.doc_freq, stats.corpus_size)) {
        tfs.push_back(s.tf);
        idfs.push_back(s.idf);
      }
    }
  }
  stats.tf_binner = FeatureBinner::fit(std::move(tfs), bins);
  stats.idf_binner = FeatureBinner::fit(std::move(idfs), bins);
  return stats;
}

nlohmann::json FeatureStats::to_json() const {
  nlohmann::json j;
  j["corpus_size"] = corpus_size;
  j["doc_freq"] = doc_freq;
  j["tf_boundaries"] = tf_binner.boundaries();
  j["idf_boundaries"] = idf_binner.boundaries();
  return j;
}

FeatureStats FeatureStats::from_json(const nlohmann::json& j) {
  FeatureStats stats;
  try {
    stats.corpus_size = j.at("corpus_size").get<std::uint64_t>();
    stats.doc_freq = j.at("doc_freq").get<std::map<std::string, std::uint64_t>>();
    stats.tf_binner = FeatureBinner(j.at("tf_boundaries").get<std::vector<double>>());
    stats.idf_binner = FeatureBinner(j.at("idf_boundaries").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("feature statistics: ") + e.what());
  }
  return stats;
}

FeatureIds annotate_features(const SentenceList& cased_doc, const Tagger& tagger, const FeatureStats& stats) {
  FeatureIds ids;
  SentenceList lowered;
  for (const auto& sentence : cased_doc) {
    const auto tags = tagger.tag(sentence);
    if (tags.size() != sentence.size()) {
      throw AnnotationError("tagger returned " + std::to_string(tags.size()) + " tags for a sentence of " +
                            std::to_string(sentence.size()) + " tokens");
    }
    for (const auto& t : tags) {
      ids.pos.push_back(tag_index(tagger.pos_tags(), t.pos));
      ids.ner.push_back(tag_index(tagger.ner_tags(), t.ner));
    }
    Sentence low;
    for (const auto& tok : sentence) low.push_back(lowercase(tok));
    lowered.push_back(std::move(low));
  }
  for (const auto& s : compute_tfidf(lowered, stats.doc_freq, std::max<std::uint64_t>(stats.corpus_size, 1))) {
    ids.tf_bin.push_back(stats.tf_binner.bin(s.tf));
    ids.idf_bin.push_back(stats.idf_binner.bin(s.idf));
  }
  return ids;
}

}  // namespace s2sum
