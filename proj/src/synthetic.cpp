// SPDX-License-Identifier: Apache-2.0

#include "s2sum/synthetic.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "s2sum/rng.hpp"

namespace s2sum {

namespace {

const std::vector<std::string> kCommon = {
    "the",   "a",     "of",     "in",    "on",     "and",    "market", "city",  "report", "people",
    "said",  "new",   "year",   "week",  "state",  "group",  "plan",   "price", "water",  "school",
    "local", "night", "police", "team",  "season", "office", "public", "house", "street", "money"};

const std::vector<std::string> kNouns = {"bridge", "school", "budget", "station", "museum", "hospital",
                                         "stadium", "library", "airport", "factory", "park", "harbor"};
const std::vector<std::string> kVerbs = {"opened", "closed", "funded", "visited", "praised", "criticized",
                                         "inspected", "expanded"};
const std::vector<std::string> kCities = {"Avalon", "Brookfield", "Carston", "Dunmore", "Elmwood",
                                          "Fairhaven", "Glenrock", "Harwick"};
const std::vector<std::string> kDays = {"monday", "tuesday", "wednesday", "thursday", "friday"};
const std::vector<std::string> kAdjectives = {"new", "old", "large", "small", "public", "private", "local",
                                              "modern"};
const std::vector<std::string> kFillers = {"officials said the event drew a large crowd .",
                                           "the plan was announced last week .",
                                           "residents welcomed the news .",
                                           "critics raised concerns about the cost ."};

template <class T>
const T& pick(const std::vector<T>& pool, Rng& rng) {
  return pool[rng.below(pool.size())];
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += w;
  }
  return out;
}

// Lowercase letters, unique within one generator call.
std::string fresh_word(Rng& rng, std::set<std::string>& used, const std::string& prefix, std::size_t letters) {
  for (;;) {
    std::string w = prefix;
    for (std::size_t i = 0; i < letters; ++i) w.push_back(static_cast<char>('a' + rng.below(26)));
    if (used.insert(w).second) return w;
  }
}

std::string capitalized(std::string w) {
  if (!w.empty() && w[0] >= 'a' && w[0] <= 'z') w[0] = static_cast<char>(w[0] - 'a' + 'A');
  return w;
}

}  // namespace

std::vector<RawPair> gen_copy(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::set<std::string> used;
  std::vector<RawPair> out;
  for (std::size_t n = 0; n < count; ++n) {
    const std::size_t length = 8 + rng.below(7);
    std::vector<std::string> words(length);
    for (auto& w : words) w = pick(kCommon, rng);
    const auto order = shuffled_indices(length, rng);
    std::vector<std::size_t> chosen = {order[0], order[1], order[2]};
    std::sort(chosen.begin(), chosen.end());
    std::vector<std::string> summary;
    for (std::size_t pos : chosen) {
      words[pos] = fresh_word(rng, used, "zq", 5);
      summary.push_back(words[pos]);
    }
    out.push_back({std::to_string(n), join(words) + " .", join(summary)});
  }
  return out;
}

std::vector<RawPair> gen_template(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::set<std::string> used;
  std::vector<RawPair> out;
  for (std::size_t n = 0; n < count; ++n) {
    const std::string name = capitalized(fresh_word(rng, used, "", 6));
    const std::string& verb = pick(kVerbs, rng);
    const std::string& noun = pick(kNouns, rng);
    const std::string& city = pick(kCities, rng);
    const std::string& day = pick(kDays, rng);
    std::string doc = name + " " + verb + " the " + pick(kAdjectives, rng) + " " + noun + " in " + city + " on " +
                      day + " .";
    const std::size_t extra = 1 + rng.below(2);
    for (std::size_t k = 0; k < extra; ++k) doc += " " + pick(kFillers, rng);
    out.push_back({std::to_string(n), doc, name + " " + verb + " " + noun + " in " + city + " ."});
  }
  return out;
}

std::vector<RawPair> gen_highlights(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::set<std::string> used;
  std::vector<RawPair> out;
  for (std::size_t n = 0; n < count; ++n) {
    const std::size_t sentences = 5 + rng.below(2);
    std::vector<std::string> doc, highlights;
    for (std::size_t s = 0; s < sentences; ++s) {
      const std::string name = capitalized(fresh_word(rng, used, "", 6));
      const std::string& verb = pick(kVerbs, rng);
      const std::string& noun = pick(kNouns, rng);
      doc.push_back(name + " " + verb + " the " + pick(kAdjectives, rng) + " " + noun + " in " + pick(kCities, rng) +
                    " .");
      if (s < 4) highlights.push_back(name + " " + verb + " " + noun + " .");
    }
    out.push_back({std::to_string(n), join(doc), join(highlights)});
  }
  return out;
}

double repeated_trigram_rate(std::span<const std::string> tokens) {
  if (tokens.size() < 3) return 0.0;
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  std::size_t repeats = 0, total = 0;
  for (std::size_t i = 0; i + 3 <= tokens.size(); ++i) {
    ++total;
    if (!seen.emplace(tokens[i], tokens[i + 1], tokens[i + 2]).second) ++repeats;
  }
  return static_cast<double>(repeats) / static_cast<double>(total);
}

}  // namespace s2sum
