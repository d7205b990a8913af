// SPDX-License-Identifier: Apache-2.0
//
// IO tagging: gold spans to per-token tags and back.
#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace adr {

// Values double as the tag head's class indices.
enum class TagLabel : int { kIAdr = 0, kIInd = 1, kO = 2, kPad = 3 };
inline constexpr std::size_t kTagCount = 4;

std::string_view tag_name(TagLabel tag);           // "I-ADR", "I-IND", "O", "<PAD>"
TagLabel parse_tag(std::string_view name);         // throws DataError on anything else
inline int tag_index(TagLabel tag) { return static_cast<int>(tag); }
TagLabel tag_from_index(std::size_t index);

using TagSequence = std::vector<TagLabel>;

enum class EntityLabel { kAdr, kIndication };

struct Span {
  std::size_t start = 0;  // inclusive
  std::size_t end = 0;    // exclusive
  EntityLabel label = EntityLabel::kAdr;

  friend bool operator==(const Span&, const Span&) = default;
};

std::string to_string(const Span& span);

// Throws DataError for out-of-range or overlapping spans.
TagSequence encode(std::size_t length, std::span<const Span> spans);

// Maximal runs of the same I-* tag. O and PAD end a run.
std::vector<Span> decode_spans(std::span<const TagLabel> tags);

struct LabeledTweet {
  std::string id;
  std::vector<std::string> tokens;
  TagSequence tags;
};

// "token<TAB>tag" per line, blank line between tweets. Tags must be I-ADR,
// I-IND or O. Records are identified by their 1-based ordinal and first line.
std::vector<LabeledTweet> read_labeled_tsv(const std::string& path);
void write_labeled_tsv(const std::string& path, std::span<const LabeledTweet> tweets);

}  // namespace adr
