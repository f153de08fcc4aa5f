// SPDX-License-Identifier: Apache-2.0

#include "s2sum/text.hpp"

#include <algorithm>
#include <fstream>
#include <map>

namespace s2sum {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

// Characters peeled off word edges. '@' and '#' stay attached so that
// placeholders such as "@entity3" survive tokenization.
bool is_peelable(char c) {
  switch (c) {
    case '.': case ',': case '!': case '?': case ';': case ':': case '"': case '\'':
    case '(': case ')': case '[': case ']': case '{': case '}': case '`':
      return true;
    default:
      return false;
  }
}

bool is_terminal(char c) { return c == '.' || c == '!' || c == '?'; }

}  // namespace

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

SentenceList tokenize(std::string_view text, bool keep_case) {
  SentenceList sentences;
  Sentence current;
  auto emit = [&](std::string_view tok) { current.emplace_back(keep_case ? std::string(tok) : lowercase(tok)); };

  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    if (i >= text.size()) break;
    std::size_t end = i;
    while (end < text.size() && !is_space(text[end])) ++end;
    std::string_view word = text.substr(i, end - i);
    i = end;

    std::size_t lead = 0;
    while (lead < word.size() && is_peelable(word[lead])) ++lead;
    std::size_t trail = word.size();
    while (trail > lead && is_peelable(word[trail - 1])) --trail;

    for (std::size_t k = 0; k < lead; ++k) emit(word.substr(k, 1));
    if (trail > lead) emit(word.substr(lead, trail - lead));
    for (std::size_t k = std::max(trail, lead); k < word.size(); ++k) emit(word.substr(k, 1));

    if (is_terminal(word.back()) && !current.empty()) {
      sentences.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) sentences.push_back(std::move(current));
  return sentences;
}

std::vector<std::string> flatten(const SentenceList& sentences) {
  std::vector<std::string> out;
  for (const auto& s : sentences) out.insert(out.end(), s.begin(), s.end());
  return out;
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& Vocabulary::special_tokens() {
  static const std::vector<std::string> specials{"<pad>", "<unk>", "<s>", "</s>"};
  return specials;
}

Vocabulary::Vocabulary() {
  for (const auto& s : special_tokens()) append(s, 0);
}

void Vocabulary::append(std::string token, std::uint64_t frequency) {
  index_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(std::move(token));
  frequencies_.push_back(frequency);
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& corpus, std::size_t max_size) {
  if (max_size < kNumSpecials + 1) {
    throw std::invalid_argument("build_vocabulary: max_size must be at least 5, got " + std::to_string(max_size));
  }
  std::map<std::string, std::uint64_t> counts;
  for (const auto& seq : corpus)
    for (const auto& tok : seq) ++counts[tok];
  for (const auto& s : special_tokens()) counts.erase(s);

  std::vector<std::pair<std::string, std::uint64_t>> ranked(counts.begin(), counts.end());
  // std::map iteration is already lexicographic, so a stable sort on
  // frequency keeps the tie-break.
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

  Vocabulary vocab;
  for (auto& [tok, freq] : ranked) {
    if (vocab.size() >= max_size) break;
    vocab.append(tok, freq);
  }
  return vocab;
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open vocabulary file " + path.string());
  return read(in);
}

Vocabulary Vocabulary::read(std::istream& in) {
  Vocabulary vocab;
  vocab.tokens_.clear();
  vocab.frequencies_.clear();
  vocab.index_.clear();
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (vocab.index_.contains(line)) throw DataError("vocabulary: duplicate token '" + line + "'");
    vocab.append(line, 0);
  }
  const auto& specials = special_tokens();
  if (vocab.size() < specials.size() ||
      !std::equal(specials.begin(), specials.end(), vocab.tokens_.begin())) {
    throw DataError("vocabulary: the first four lines must be the reserved special tokens");
  }
  return vocab;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write vocabulary file " + path.string());
  write(out);
}

void Vocabulary::write(std::ostream& out) const {
  for (const auto& tok : tokens_) out << tok << '\n';
}

bool Vocabulary::contains(std::string_view token) const { return find(token).has_value(); }

std::optional<int> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int Vocabulary::id(std::string_view token) const { return find(token).value_or(kUnk); }

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw std::out_of_range("vocabulary: id " + std::to_string(id) + " out of range");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::uint64_t Vocabulary::frequency(int id) const {
  token(id);
  return frequencies_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

}  // namespace s2sum
