// SPDX-License-Identifier: Apache-2.0
//
// Small generated corpora for smoke runs and behavioural checks.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "s2sum/example.hpp"

namespace s2sum {

/// Documents of common words with three one-off rare tokens; the summary is
/// those rare tokens in document order.
std::vector<RawPair> gen_copy(std::size_t count, std::uint64_t seed);

/// Templated event sentences around rare capitalized names; the summary
/// restates the lead event.
std::vector<RawPair> gen_template(std::size_t count, std::uint64_t seed);

/// Multi-sentence documents, one rare name per sentence; the summary has
/// four highlights restating the first four sentences.
std::vector<RawPair> gen_highlights(std::size_t count, std::uint64_t seed);

/// Share of the trigrams in `tokens` that already occurred earlier in it.
double repeated_trigram_rate(std::span<const std::string> tokens);

}  // namespace s2sum
