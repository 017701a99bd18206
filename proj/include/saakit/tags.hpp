#pragma once

// Speaker-attributed transcript grammar:
//
//   doc    := turn*
//   turn   := header ':' body
//   header := '[Speaker N]' | '[Speaker N ID M]' | '[Speaker N cluster M]'
//   body   := whitespace-separated words up to the next header or end of input
//
// N is the relative speaker index (>= 1), M a non-negative integer.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "saakit/error.hpp"

namespace saakit {

enum class Qualifier { None, Id, Cluster };

struct SpeakerTag {
  int rel = 1;
  Qualifier qualifier = Qualifier::None;
  std::uint64_t value = 0;  // PIN or cluster index; unused when qualifier is None

  friend bool operator==(const SpeakerTag&, const SpeakerTag&) = default;
};

struct Turn {
  SpeakerTag tag;
  std::vector<std::string> words;

  friend bool operator==(const Turn&, const Turn&) = default;
};

struct SaaDoc {
  std::vector<Turn> turns;

  friend bool operator==(const SaaDoc&, const SaaDoc&) = default;
};

enum class ParseMode { Strict, Lenient };

struct ParseResult {
  SaaDoc doc;
  // Lenient only: text before the first header became a rel=0 turn at index 0.
  bool leading_untagged = false;
  // Relative indices used do not form {1..m}.
  bool index_gaps = false;
  // Lenient only: malformed headers kept as words, empty turns dropped.
  std::vector<std::string> warnings;
};

struct WordSpeaker {
  std::string word;
  int rel;

  friend bool operator==(const WordSpeaker&, const WordSpeaker&) = default;
};

namespace detail {

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

inline void split_words(std::string_view text, std::vector<std::string>& out) {
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
}

inline constexpr std::string_view kHeaderPrefix = "[Speaker";

// Parses at most 18 decimal digits starting at `pos`.
inline std::optional<std::uint64_t> read_uint(std::string_view s, std::size_t& pos) {
  const std::size_t start = pos;
  std::uint64_t v = 0;
  while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
    if (pos - start >= 18) return std::nullopt;
    v = v * 10 + static_cast<std::uint64_t>(s[pos] - '0');
    ++pos;
  }
  if (pos == start) return std::nullopt;
  return v;
}

inline bool consume(std::string_view s, std::size_t& pos, std::string_view lit) {
  if (s.substr(pos, lit.size()) != lit) return false;
  pos += lit.size();
  return true;
}

// Tries to read a complete header (including the trailing ':') at `pos`.
// On success returns the tag and moves `pos` past the colon.
inline std::optional<SpeakerTag> read_header(std::string_view s, std::size_t& pos) {
  std::size_t p = pos;
  if (!consume(s, p, "[Speaker ")) return std::nullopt;
  const auto rel = read_uint(s, p);
  if (!rel || *rel == 0 || *rel > 1000000000ull) return std::nullopt;
  SpeakerTag tag;
  tag.rel = static_cast<int>(*rel);
  if (consume(s, p, " ID ")) {
    tag.qualifier = Qualifier::Id;
  } else if (consume(s, p, " cluster ")) {
    tag.qualifier = Qualifier::Cluster;
  }
  if (tag.qualifier != Qualifier::None) {
    const auto value = read_uint(s, p);
    if (!value) return std::nullopt;
    tag.value = *value;
  }
  if (!consume(s, p, "]:")) return std::nullopt;
  pos = p;
  return tag;
}

inline bool has_gaps(const SaaDoc& doc) {
  std::set<int> used;
  for (const auto& t : doc.turns) {
    if (t.tag.rel > 0) used.insert(t.tag.rel);
  }
  int expect = 1;
  for (int r : used) {
    if (r != expect++) return true;
  }
  return false;
}

}  // namespace detail

// Parses speaker-attributed text. Any occurrence of "[Speaker" starts a header;
// in strict mode a header that does not match the grammar is an error, in
// lenient mode it is kept as ordinary words.
inline ParseResult parse_saa(std::string_view text, ParseMode mode = ParseMode::Strict) {
  using detail::kHeaderPrefix;
  const bool strict = mode == ParseMode::Strict;
  ParseResult result;

  std::optional<SpeakerTag> current;  // nullopt: before the first header
  std::size_t current_offset = 0;
  std::vector<std::string> words;

  auto flush = [&]() {
    if (!current) {
      if (words.empty()) return;
      if (strict) throw ParseError(0, "text before the first speaker tag");
      result.leading_untagged = true;
      result.doc.turns.push_back(Turn{SpeakerTag{0, Qualifier::None, 0}, std::move(words)});
      words.clear();
      return;
    }
    if (words.empty()) {
      if (strict) throw ParseError(current_offset, "speaker turn has no words");
      result.warnings.push_back("dropped empty turn at offset " + std::to_string(current_offset));
    } else {
      result.doc.turns.push_back(Turn{*current, std::move(words)});
      words.clear();
    }
  };

  std::size_t pos = 0;
  std::size_t segment_start = 0;
  while (pos <= text.size()) {
    const std::size_t found = text.find(kHeaderPrefix, pos);
    const std::size_t seg_end = found == std::string_view::npos ? text.size() : found;
    if (found == std::string_view::npos) {
      detail::split_words(text.substr(segment_start, seg_end - segment_start), words);
      break;
    }
    std::size_t after = found;
    auto tag = detail::read_header(text, after);
    if (!tag) {
      if (strict) throw ParseError(found, "malformed speaker tag");
      result.warnings.push_back("malformed speaker tag at offset " + std::to_string(found) +
                                " kept as text");
      pos = found + 1;
      continue;
    }
    detail::split_words(text.substr(segment_start, found - segment_start), words);
    flush();
    current = tag;
    current_offset = found;
    pos = segment_start = after;
  }
  flush();
  result.index_gaps = detail::has_gaps(result.doc);
  return result;
}

inline std::string render_header(const SpeakerTag& tag) {
  std::string out = "[Speaker " + std::to_string(tag.rel);
  switch (tag.qualifier) {
    case Qualifier::None:
      break;
    case Qualifier::Id:
      out += " ID " + std::to_string(tag.value);
      break;
    case Qualifier::Cluster:
      out += " cluster " + std::to_string(tag.value);
      break;
  }
  out += "]:";
  return out;
}

inline std::string render_saa(const SaaDoc& doc) {
  std::string out;
  for (std::size_t i = 0; i < doc.turns.size(); ++i) {
    const Turn& t = doc.turns[i];
    if (t.tag.rel <= 0) throw Error("cannot render untagged turn " + std::to_string(i));
    if (t.words.empty()) throw Error("cannot render empty turn " + std::to_string(i));
    if (i > 0) out += '\n';
    out += render_header(t.tag);
    for (const auto& w : t.words) {
      out += ' ';
      out += w;
    }
  }
  return out;
}

inline std::vector<WordSpeaker> word_speaker_pairs(const SaaDoc& doc) {
  std::vector<WordSpeaker> out;
  for (const auto& t : doc.turns) {
    if (t.tag.rel <= 0) throw Error("untagged turn in speaker attribution");
    for (const auto& w : t.words) out.push_back({w, t.tag.rel});
  }
  return out;
}

inline std::vector<std::string> strip_tags(const SaaDoc& doc) {
  std::vector<std::string> out;
  for (const auto& t : doc.turns) out.insert(out.end(), t.words.begin(), t.words.end());
  return out;
}

// Builds a doc from a word-level attribution stream, splitting turns wherever
// the speaker changes.
inline SaaDoc doc_from_pairs(const std::vector<WordSpeaker>& pairs,
                             const std::vector<SpeakerTag>& tag_for_rel = {}) {
  SaaDoc doc;
  for (const auto& p : pairs) {
    if (doc.turns.empty() || doc.turns.back().tag.rel != p.rel) {
      SpeakerTag tag{p.rel, Qualifier::None, 0};
      if (p.rel >= 0 && static_cast<std::size_t>(p.rel) < tag_for_rel.size()) {
        tag = tag_for_rel[static_cast<std::size_t>(p.rel)];
      }
      doc.turns.push_back(Turn{tag, {}});
    }
    doc.turns.back().words.push_back(p.word);
  }
  return doc;
}

// Optional pre-pass for model output that drifts from the literal grammar:
// keyword case, extra spaces inside the brackets, and space before the colon.
inline std::string normalize_headers(const std::string& text) {
  static const std::regex header(
      R"(\[\s*[Ss][Pp][Ee][Aa][Kk][Ee][Rr]\s*(\d+)\s*(?:(?:([Ii][Dd])|([Cc][Ll][Uu][Ss][Tt][Ee][Rr]))\s*(\d+)\s*)?\]\s*:)");
  std::string out;
  auto begin = std::sregex_iterator(text.begin(), text.end(), header);
  std::size_t last = 0;
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    out.append(text, last, static_cast<std::size_t>(m.position()) - last);
    out += "[Speaker " + m[1].str();
    if (m[2].matched) out += " ID " + m[4].str();
    if (m[3].matched) out += " cluster " + m[4].str();
    out += "]:";
    last = static_cast<std::size_t>(m.position() + m.length());
  }
  out.append(text, last, std::string::npos);
  return out;
}

}  // namespace saakit
