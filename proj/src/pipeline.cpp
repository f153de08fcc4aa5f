// SPDX-License-Identifier: Apache-2.0

#include "s2sum/pipeline.hpp"

#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>
#include <unordered_map>

namespace s2sum {

namespace {

std::vector<std::vector<std::string>> drop_rare(std::vector<std::vector<std::string>> corpus, std::size_t min_count) {
  if (min_count <= 1) return corpus;
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& seq : corpus)
    for (const auto& t : seq) ++counts[t];
  for (auto& seq : corpus) std::erase_if(seq, [&](const std::string& t) { return counts[t] < min_count; });
  return corpus;
}

}  // namespace

Preprocessed fit_preprocessing(const std::vector<RawPair>& train, const PipelineConfig& config) {
  const Vocabulary empty;
  const RuleTagger tagger;
  const FeatureStats no_stats;
  ExampleBuilder tokenizer(empty, empty, tagger, no_stats, config.limits);
  tokenizer.set_entity_lexicon(config.entity_lexicon);

  std::vector<std::vector<std::string>> sources, summaries;
  std::vector<SentenceList> documents;
  for (const RawPair& pair : train) {
    ExampleBuilder::Tokenized t = tokenizer.tokenize_pair(pair);
    sources.push_back(flatten(t.doc));
    summaries.push_back(flatten(t.summary));
    documents.push_back(std::move(t.doc));
  }
  Preprocessed p;
  p.source = Vocabulary::build(drop_rare(std::move(sources), config.min_count), config.source_vocab_size);
  p.decoder = Vocabulary::build(drop_rare(std::move(summaries), config.min_count), config.decoder_vocab_size);
  p.stats = FeatureStats::fit(documents, config.feature_bins);
  return p;
}

void Preprocessed::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  source.save(dir / "source.vocab");
  decoder.save(dir / "decoder.vocab");
  std::ofstream out(dir / "features.json");
  if (!out) throw DataError("cannot write " + (dir / "features.json").string());
  out << stats.to_json().dump() << '\n';
}

Preprocessed Preprocessed::load(const std::filesystem::path& dir) {
  Preprocessed p;
  p.source = Vocabulary::load(dir / "source.vocab");
  p.decoder = Vocabulary::load(dir / "decoder.vocab");
  std::ifstream in(dir / "features.json");
  if (!in) throw DataError("cannot open " + (dir / "features.json").string());
  try {
    p.stats = FeatureStats::from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed features.json: " + std::string(e.what()));
  }
  return p;
}

std::vector<Example> build_examples(const Preprocessed& prep, const std::vector<RawPair>& pairs,
                                    const PipelineConfig& config, std::size_t threads) {
  const RuleTagger tagger;
  ExampleBuilder builder(prep.source, prep.decoder, tagger, prep.stats, config.limits);
  builder.set_entity_lexicon(config.entity_lexicon);

  std::vector<Example> out(pairs.size());
  threads = std::max<std::size_t>(1, std::min(threads, pairs.size()));
  if (threads == 1) {
    for (std::size_t i = 0; i < pairs.size(); ++i) out[i] = builder.build(pairs[i]);
    return out;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < threads; ++w) {
    workers.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < pairs.size(); i += threads) out[i] = builder.build(pairs[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::size_t pipeline_threads() {
  const char* env = std::getenv("S2SM_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1) return 1;
  return static_cast<std::size_t>(n);
}

}  // namespace s2sum
