// SPDX-License-Identifier: Apache-2.0

#include "s2sum/example.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "json.hpp"

namespace s2sum {

void Example::validate() const {
  const std::size_t n = doc_tokens.size();
  auto check_len = [&](std::size_t len, const char* name) {
    if (len != n) {
      throw DataError("example " + id + ": " + name + " has " + std::to_string(len) + " entries for " +
                      std::to_string(n) + " document tokens");
    }
  };
  check_len(doc_surface.size(), "doc_surface");
  check_len(pos_ids.size(), "pos_ids");
  check_len(ner_ids.size(), "ner_ids");
  check_len(tf_bin.size(), "tf_bin");
  check_len(idf_bin.size(), "idf_bin");
  check_len(sent_ids.size(), "sent_ids");
  if (n > 0 && sent_ids.front() != 0) throw DataError("example " + id + ": sent_ids must start at 0");
  for (std::size_t j = 1; j < n; ++j) {
    if (sent_ids[j] < sent_ids[j - 1] || sent_ids[j] > sent_ids[j - 1] + 1) {
      throw DataError("example " + id + ": sent_ids must be nondecreasing without gaps");
    }
  }
  const std::size_t m = summary_tokens.size();
  if (switch_targets.size() != m || pointer_targets.size() != m) {
    throw DataError("example " + id + ": supervision length does not match summary length");
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (switch_targets[i] == 0) {
      const int p = pointer_targets[i];
      if (p < 0 || static_cast<std::size_t>(p) >= n) {
        throw DataError("example " + id + ": pointer target out of range at summary position " + std::to_string(i));
      }
    }
  }
}

PointerSupervision build_pointer_supervision(const std::vector<std::string>& doc_surface,
                                             const std::vector<std::string>& summary_surface,
                                             const Vocabulary& decoder_vocab) {
  PointerSupervision out;
  out.summary_tokens.push_back(Vocabulary::kBos);
  out.switch_targets.push_back(1);
  out.pointer_targets.push_back(-1);
  for (const auto& word : summary_surface) {
    const auto id = decoder_vocab.find(word);
    int position = -1;
    if (!id) {
      auto it = std::find(doc_surface.begin(), doc_surface.end(), word);
      if (it != doc_surface.end()) position = static_cast<int>(it - doc_surface.begin());
    }
    out.summary_tokens.push_back(id.value_or(Vocabulary::kUnk));
    out.switch_targets.push_back(position < 0 ? 1 : 0);
    out.pointer_targets.push_back(position);
  }
  out.summary_tokens.push_back(Vocabulary::kEos);
  out.switch_targets.push_back(1);
  out.pointer_targets.push_back(-1);
  return out;
}

void anonymize_entities(SentenceList& doc, SentenceList& summary,
                        const std::map<std::string, std::string>& entity_lexicon) {
  std::map<std::string, int> assigned;
  auto rewrite = [&](SentenceList& text) {
    for (auto& sentence : text) {
      for (auto& tok : sentence) {
        auto hit = entity_lexicon.find(tok);
        if (hit == entity_lexicon.end()) continue;
        auto [it, inserted] = assigned.emplace(hit->second, static_cast<int>(assigned.size()));
        tok = "@entity" + std::to_string(it->second);
      }
    }
  };
  rewrite(doc);
  rewrite(summary);
}

std::vector<int> lvt_batch_vocab(const std::vector<const Example*>& batch, const Vocabulary& decoder_vocab,
                                 std::size_t lvt_size) {
  if (lvt_size < static_cast<std::size_t>(Vocabulary::kNumSpecials)) {
    throw std::invalid_argument("lvt_batch_vocab: lvt_size must be at least 4");
  }
  std::set<int> ids;
  for (int s = 0; s < Vocabulary::kNumSpecials; ++s) ids.insert(s);
  for (const Example* ex : batch) {
    for (const auto& word : ex->doc_surface) {
      if (auto id = decoder_vocab.find(word)) ids.insert(*id);
    }
  }
  const std::size_t target = std::min(lvt_size, decoder_vocab.size());
  for (int id = Vocabulary::kNumSpecials; ids.size() < target && static_cast<std::size_t>(id) < decoder_vocab.size();
       ++id) {
    ids.insert(id);
  }
  return {ids.begin(), ids.end()};
}

// ---------------------------------------------------------------------------

ExampleBuilder::ExampleBuilder(const Vocabulary& source_vocab, const Vocabulary& decoder_vocab, const Tagger& tagger,
                               const FeatureStats& stats, PipelineOptions options)
    : source_vocab_(source_vocab), decoder_vocab_(decoder_vocab), tagger_(tagger), stats_(stats), options_(options) {}

ExampleBuilder::Tokenized ExampleBuilder::tokenize_pair(const RawPair& pair) const {
  Tokenized t;
  t.doc_cased = tokenize(pair.document, /*keep_case=*/true);
  if (options_.max_doc_sentences > 0 && t.doc_cased.size() > options_.max_doc_sentences) {
    t.doc_cased.resize(options_.max_doc_sentences);
  }
  if (options_.max_doc_tokens > 0) {
    std::size_t kept = 0;
    SentenceList truncated;
    for (auto& sentence : t.doc_cased) {
      if (kept >= options_.max_doc_tokens) break;
      if (kept + sentence.size() > options_.max_doc_tokens) sentence.resize(options_.max_doc_tokens - kept);
      kept += sentence.size();
      truncated.push_back(std::move(sentence));
    }
    t.doc_cased = std::move(truncated);
  }
  for (const auto& sentence : t.doc_cased) {
    Sentence low;
    for (const auto& tok : sentence) low.push_back(lowercase(tok));
    t.doc.push_back(std::move(low));
  }
  t.summary = tokenize(pair.summary);
  if (options_.max_summary_tokens > 0) {
    std::size_t kept = 0;
    SentenceList truncated;
    for (auto& sentence : t.summary) {
      if (kept >= options_.max_summary_tokens) break;
      if (kept + sentence.size() > options_.max_summary_tokens) sentence.resize(options_.max_summary_tokens - kept);
      kept += sentence.size();
      truncated.push_back(std::move(sentence));
    }
    t.summary = std::move(truncated);
  }
  if (!lexicon_.empty()) {
    anonymize_entities(t.doc, t.summary, lexicon_);
    for (std::size_t s = 0; s < t.doc.size(); ++s)
      for (std::size_t k = 0; k < t.doc[s].size(); ++k)
        if (t.doc[s][k].starts_with("@entity")) t.doc_cased[s][k] = t.doc[s][k];
  }
  return t;
}

Example ExampleBuilder::build(const RawPair& pair) const {
  Tokenized t = tokenize_pair(pair);
  Example ex;
  ex.id = pair.id;
  ex.doc_surface = flatten(t.doc);
  if (ex.doc_surface.empty()) throw DataError("example " + pair.id + ": empty document");
  ex.doc_tokens = source_vocab_.encode(ex.doc_surface);
  for (std::size_t s = 0; s < t.doc.size(); ++s) ex.sent_ids.insert(ex.sent_ids.end(), t.doc[s].size(), static_cast<int>(s));

  FeatureIds features = annotate_features(t.doc_cased, tagger_, stats_);
  ex.pos_ids = std::move(features.pos);
  ex.ner_ids = std::move(features.ner);
  ex.tf_bin = std::move(features.tf_bin);
  ex.idf_bin = std::move(features.idf_bin);

  ex.summary_surface = flatten(t.summary);
  PointerSupervision sup = build_pointer_supervision(ex.doc_surface, ex.summary_surface, decoder_vocab_);
  ex.summary_tokens = std::move(sup.summary_tokens);
  ex.switch_targets = std::move(sup.switch_targets);
  ex.pointer_targets = std::move(sup.pointer_targets);
  ex.validate();
  return ex;
}

// ---------------------------------------------------------------------------

std::vector<RawPair> read_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus " + path.string());
  std::vector<RawPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      RawPair p;
      p.document = j.at("document").get<std::string>();
      p.summary = j.at("summary").get<std::string>();
      if (j.contains("id")) {
        p.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
      } else {
        p.id = std::to_string(pairs.size());
      }
      pairs.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return pairs;
}

void write_corpus(const std::filesystem::path& path, const std::vector<RawPair>& pairs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write corpus " + path.string());
  for (const auto& p : pairs) {
    nlohmann::ordered_json j;
    j["id"] = p.id;
    j["document"] = p.document;
    j["summary"] = p.summary;
    out << j.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Shards

namespace {

constexpr char kShardMagic[8] = {'S', '2', 'S', 'M', 'E', 'X', 'v', '1'};
constexpr std::uint32_t kShardVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_string(std::string& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out += s;
}

void put_ints(std::string& out, const std::vector<int>& v) {
  put_u32(out, static_cast<std::uint32_t>(v.size()));
  for (int x : v) put_u32(out, static_cast<std::uint32_t>(x));
}

void put_strings(std::string& out, const std::vector<std::string>& v) {
  put_u32(out, static_cast<std::uint32_t>(v.size()));
  for (const auto& s : v) put_string(out, s);
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::vector<int> ints() {
    const std::uint32_t n = u32();
    std::vector<int> v(n);
    for (auto& x : v) x = static_cast<int>(u32());
    return v;
  }
  std::vector<std::string> strs() {
    const std::uint32_t n = u32();
    std::vector<std::string> v;
    v.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) v.push_back(str());
    return v;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw DataError("example record truncated");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_example(const Example& ex) {
  std::string out;
  put_string(out, ex.id);
  put_ints(out, ex.doc_tokens);
  put_strings(out, ex.doc_surface);
  put_ints(out, ex.pos_ids);
  put_ints(out, ex.ner_ids);
  put_ints(out, ex.tf_bin);
  put_ints(out, ex.idf_bin);
  put_ints(out, ex.sent_ids);
  put_ints(out, ex.summary_tokens);
  put_strings(out, ex.summary_surface);
  put_ints(out, std::vector<int>(ex.switch_targets.begin(), ex.switch_targets.end()));
  put_ints(out, ex.pointer_targets);
  return out;
}

Example deserialize_example(std::string_view bytes) {
  Reader r(bytes);
  Example ex;
  ex.id = r.str();
  ex.doc_tokens = r.ints();
  ex.doc_surface = r.strs();
  ex.pos_ids = r.ints();
  ex.ner_ids = r.ints();
  ex.tf_bin = r.ints();
  ex.idf_bin = r.ints();
  ex.sent_ids = r.ints();
  ex.summary_tokens = r.ints();
  ex.summary_surface = r.strs();
  for (int g : r.ints()) ex.switch_targets.push_back(static_cast<std::uint8_t>(g));
  ex.pointer_targets = r.ints();
  if (!r.done()) throw DataError("example record has trailing bytes");
  ex.validate();
  return ex;
}

void write_shard(const std::filesystem::path& path, const std::vector<Example>& examples) {
  std::string out(kShardMagic, sizeof(kShardMagic));
  put_u32(out, kShardVersion);
  put_u32(out, static_cast<std::uint32_t>(examples.size()));
  for (const auto& ex : examples) put_string(out, serialize_example(ex));
  std::ofstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot write shard " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
}

std::vector<Example> read_shard(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot open shard " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  if (bytes.size() < 16 || bytes.compare(0, 8, std::string(kShardMagic, 8)) != 0) {
    throw DataError(path.string() + ": not an example shard");
  }
  Reader header(std::string_view(bytes).substr(8, 8));
  const std::uint32_t version = header.u32();
  const std::uint32_t count = header.u32();
  if (version != kShardVersion) throw DataError(path.string() + ": unsupported shard version " + std::to_string(version));
  Reader body(std::string_view(bytes).substr(16));
  std::vector<Example> examples;
  examples.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) examples.push_back(deserialize_example(body.str()));
  if (!body.done()) throw DataError(path.string() + ": trailing bytes after " + std::to_string(count) + " examples");
  return examples;
}

}  // namespace s2sum
