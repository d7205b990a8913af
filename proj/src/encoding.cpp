// SPDX-License-Identifier: Apache-2.0
#include "adr/encoding.hpp"

#include <algorithm>
#include <fstream>

#include "adr/error.hpp"

namespace adr {

std::string_view tag_name(TagLabel tag) {
  switch (tag) {
    case TagLabel::kIAdr: return "I-ADR";
    case TagLabel::kIInd: return "I-IND";
    case TagLabel::kO: return "O";
    case TagLabel::kPad: return "<PAD>";
  }
  return "?";
}

TagLabel parse_tag(std::string_view name) {
  if (name == "I-ADR") return TagLabel::kIAdr;
  if (name == "I-IND") return TagLabel::kIInd;
  if (name == "O") return TagLabel::kO;
  throw DataError("unknown tag \"" + std::string(name) + "\" (expected I-ADR, I-IND or O)");
}

TagLabel tag_from_index(std::size_t index) {
  if (index >= kTagCount) throw UsageError("tag index out of range: " + std::to_string(index));
  return static_cast<TagLabel>(index);
}

std::string to_string(const Span& span) {
  return "(" + std::to_string(span.start) + "," + std::to_string(span.end) + "," +
         (span.label == EntityLabel::kAdr ? "ADR" : "IND") + ")";
}

TagSequence encode(std::size_t length, std::span<const Span> spans) {
  TagSequence tags(length, TagLabel::kO);
  std::vector<const Span*> owner(length, nullptr);
  for (const Span& s : spans) {
    if (s.start >= s.end || s.end > length) {
      throw DataError("span " + to_string(s) + " out of bounds for " + std::to_string(length) +
                      " tokens");
    }
    for (std::size_t i = s.start; i < s.end; ++i) {
      if (owner[i] != nullptr) {
        throw DataError("overlapping spans " + to_string(*owner[i]) + " and " + to_string(s));
      }
      owner[i] = &s;
      tags[i] = s.label == EntityLabel::kAdr ? TagLabel::kIAdr : TagLabel::kIInd;
    }
  }
  return tags;
}

std::vector<Span> decode_spans(std::span<const TagLabel> tags) {
  std::vector<Span> spans;
  std::size_t i = 0;
  while (i < tags.size()) {
    const TagLabel t = tags[i];
    if (t != TagLabel::kIAdr && t != TagLabel::kIInd) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    while (j < tags.size() && tags[j] == t) ++j;
    spans.push_back({i, j, t == TagLabel::kIAdr ? EntityLabel::kAdr : EntityLabel::kIndication});
    i = j;
  }
  return spans;
}

std::vector<LabeledTweet> read_labeled_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open labeled file: " + path);
  std::vector<LabeledTweet> out;
  LabeledTweet current;
  std::string line;
  std::size_t line_no = 0;
  auto flush = [&] {
    if (!current.tokens.empty()) out.push_back(std::move(current));
    current = LabeledTweet{};
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) {
      flush();
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || line.find('\t', tab + 1) != std::string::npos) {
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": expected \"token<TAB>tag\", got \"" + line + "\"");
    }
    if (current.tokens.empty()) {
      current.id = "tweet " + std::to_string(out.size() + 1) + " (line " +
                   std::to_string(line_no) + ")";
    }
    try {
      current.tags.push_back(parse_tag(std::string_view(line).substr(tab + 1)));
    } catch (const DataError& e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    current.tokens.push_back(line.substr(0, tab));
  }
  flush();
  return out;
}

void write_labeled_tsv(const std::string& path, std::span<const LabeledTweet> tweets) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write labeled file: " + path);
  for (const LabeledTweet& t : tweets) {
    if (t.tokens.size() != t.tags.size()) {
      throw DataError("token/tag length mismatch in " + t.id);
    }
    for (std::size_t i = 0; i < t.tokens.size(); ++i) {
      out << t.tokens[i] << '\t' << tag_name(t.tags[i]) << '\n';
    }
    out << '\n';
  }
}

}  // namespace adr
