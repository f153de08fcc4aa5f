// SPDX-License-Identifier: Apache-2.0
//
// Tokenization and vocabularies.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace s2sum {

using Sentence = std::vector<std::string>;
using SentenceList = std::vector<Sentence>;

/// Input data could not be read or is malformed.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Splits text into sentences of tokens. Sentences end at a token carrying
/// terminal punctuation (. ! ?) that is followed by whitespace or the end of
/// input. Tokens are whitespace-separated words with leading and trailing
/// punctuation peeled off into tokens of their own. Output is lowercased
/// unless keep_case is set.
SentenceList tokenize(std::string_view text, bool keep_case = false);

std::vector<std::string> flatten(const SentenceList& sentences);

/// ASCII lowercase; bytes outside ASCII are left untouched.
std::string lowercase(std::string_view s);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;
  static constexpr int kNumSpecials = 4;

  static const std::vector<std::string>& special_tokens();

  /// Creates a vocabulary holding only the four specials.
  Vocabulary();

  /// The four specials followed by the max_size - 4 most frequent tokens,
  /// ties broken lexicographically.
  static Vocabulary build(const std::vector<std::vector<std::string>>& corpus, std::size_t max_size);

  /// One token per line, line number = id.
  static Vocabulary load(const std::filesystem::path& path);
  static Vocabulary read(std::istream& in);
  void save(const std::filesystem::path& path) const;
  void write(std::ostream& out) const;

  std::size_t size() const { return tokens_.size(); }
  bool contains(std::string_view token) const;
  std::optional<int> find(std::string_view token) const;
  /// Id of the token, or kUnk when absent.
  int id(std::string_view token) const;
  const std::string& token(int id) const;
  /// Corpus frequency recorded at build time; zero for specials and for
  /// vocabularies read from disk.
  std::uint64_t frequency(int id) const;

  std::vector<int> encode(const std::vector<std::string>& tokens) const;

 private:
  void append(std::string token, std::uint64_t frequency);

  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> frequencies_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace s2sum
