#pragma once

// Utterance manifests, overlap resolution, duration-bucketed chunking and
// reference transcript rendering.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "saakit/error.hpp"
#include "saakit/tags.hpp"

namespace saakit {

using json = nlohmann::json;

inline constexpr int kBuckets[] = {10, 30, 60, 120};

inline bool is_bucket(int seconds) {
  return std::find(std::begin(kBuckets), std::end(kBuckets), seconds) != std::end(kBuckets);
}

struct Utterance {
  std::string session_id;
  std::string speaker_id;
  std::optional<int> channel;
  double start_s = 0.0;
  double end_s = 0.0;
  std::string text;

  double duration() const { return end_s - start_s; }

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

// Canonical order: start, then end, then speaker.
inline bool canonical_less(const Utterance& a, const Utterance& b) {
  return std::tie(a.start_s, a.end_s, a.speaker_id) < std::tie(b.start_s, b.end_s, b.speaker_id);
}

struct Session {
  std::string id;
  std::vector<Utterance> utterances;

  void sort() { std::stable_sort(utterances.begin(), utterances.end(), canonical_less); }
};

// Sessions in order of first appearance in the manifest.
struct Corpus {
  std::vector<Session> sessions;

  std::size_t utterance_count() const {
    std::size_t n = 0;
    for (const auto& s : sessions) n += s.utterances.size();
    return n;
  }
};

struct Chunk {
  std::string chunk_id;
  std::string source_session;
  double span_start_s = 0.0;
  double span_end_s = 0.0;
  int target_bucket_s = 0;
  std::vector<std::pair<std::string, std::string>> turns;  // (speaker_id, text)

  // Measured on the millisecond grid that manifests are stored at.
  double duration_s() const {
    return static_cast<double>(std::llround(span_end_s * 1000.0) - std::llround(span_start_s * 1000.0)) /
           1000.0;
  }

  friend bool operator==(const Chunk&, const Chunk&) = default;
};

namespace detail {

inline bool blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return is_space(c); });
}

inline std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

template <typename T>
T require_field(const json& obj, const char* key, const std::string& src, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ManifestError(src, line, std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ManifestError(src, line, std::string("field '") + key + "' has the wrong type");
  }
}

inline double require_number(const json& obj, const char* key, const std::string& src,
                             std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ManifestError(src, line, std::string("missing field '") + key + "'");
  if (!it->is_number()) {
    throw ManifestError(src, line, std::string("field '") + key + "' must be a number");
  }
  const double v = it->get<double>();
  if (!std::isfinite(v)) {
    throw ManifestError(src, line, std::string("field '") + key + "' is not finite");
  }
  return v;
}

}  // namespace detail

inline Utterance utterance_from_json(const json& obj, const std::string& src, std::size_t line) {
  if (!obj.is_object()) throw ManifestError(src, line, "expected a JSON object");
  Utterance u;
  u.session_id = detail::require_field<std::string>(obj, "session_id", src, line);
  u.speaker_id = detail::require_field<std::string>(obj, "speaker_id", src, line);
  if (auto it = obj.find("channel"); it != obj.end() && !it->is_null()) {
    if (!it->is_number_integer() || it->get<std::int64_t>() < 0) {
      throw ManifestError(src, line, "field 'channel' must be a non-negative integer");
    }
    u.channel = it->get<int>();
  }
  u.start_s = detail::require_number(obj, "start_s", src, line);
  u.end_s = detail::require_number(obj, "end_s", src, line);
  u.text = detail::require_field<std::string>(obj, "text", src, line);
  if (u.start_s < 0.0) throw ManifestError(src, line, "start_s is negative");
  if (!(u.end_s > u.start_s)) throw ManifestError(src, line, "end_s must be greater than start_s");
  if (detail::blank(u.text)) throw ManifestError(src, line, "text is empty");
  return u;
}

// Reads an utterance manifest. Blank lines are skipped; every other line must
// be a valid utterance object.
inline Corpus read_manifest(std::istream& in, const std::string& source = "<manifest>") {
  Corpus corpus;
  std::unordered_map<std::string, std::size_t> index;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::blank(line)) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ManifestError(source, lineno, std::string("malformed JSON: ") + e.what());
    }
    Utterance u = utterance_from_json(obj, source, lineno);
    auto [it, inserted] = index.try_emplace(u.session_id, corpus.sessions.size());
    if (inserted) corpus.sessions.push_back(Session{u.session_id, {}});
    corpus.sessions[it->second].utterances.push_back(std::move(u));
  }
  for (auto& s : corpus.sessions) s.sort();
  return corpus;
}

inline Corpus load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open manifest " + path);
  return read_manifest(in, path);
}

inline std::string utterance_to_jsonl(const Utterance& u) {
  std::string out = "{\"session_id\":" + json(u.session_id).dump() +
                    ",\"speaker_id\":" + json(u.speaker_id).dump();
  if (u.channel) out += ",\"channel\":" + std::to_string(*u.channel);
  out += ",\"start_s\":" + detail::fixed3(u.start_s) + ",\"end_s\":" + detail::fixed3(u.end_s) +
         ",\"text\":" + json(u.text).dump() + "}";
  return out;
}

inline void write_manifest(std::ostream& out, const Corpus& corpus) {
  for (const auto& s : corpus.sessions) {
    for (const auto& u : s.utterances) out << utterance_to_jsonl(u) << '\n';
  }
}

// Drops every utterance lying entirely within an utterance of a different
// speaker, then orders the survivors by start time. Partial overlaps stay.
inline Session resolve_overlaps(const Session& session) {
  const auto& utts = session.utterances;
  Session out{session.id, {}};
  for (std::size_t i = 0; i < utts.size(); ++i) {
    const Utterance& u = utts[i];
    bool contained = false;
    for (std::size_t j = 0; j < utts.size() && !contained; ++j) {
      if (j == i) continue;
      const Utterance& v = utts[j];
      contained = v.speaker_id != u.speaker_id && v.start_s <= u.start_s && u.end_s <= v.end_s;
    }
    if (!contained) out.utterances.push_back(u);
  }
  out.sort();
  return out;
}

struct ChunkingResult {
  std::vector<Chunk> chunks;
  std::vector<std::string> warnings;
};

inline std::string make_chunk_id(const std::string& session, int target_s, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_%ds_%04zu", target_s, index);
  return session + buf;
}

// Greedy packing of whole utterances into chunks of at least target_s.
// Times are handled in whole milliseconds.
//
// A chunk is closed as soon as its span reaches target_s. If the next
// utterance starts at or after span_start + target_s, the chunk is closed at
// exactly span_start + target_s (trailing silence). An utterance that would
// push the span beyond cap_s starts a new chunk and the short partial chunk
// is dropped; an utterance longer than cap_s on its own is dropped. Whatever
// is left at the end of the session and shorter than target_s is dropped.
inline ChunkingResult chunk_session(const Session& session, int target_s, double cap_s = 120.0) {
  if (!is_bucket(target_s)) throw Error("target must be one of 10, 30, 60, 120 seconds");
  if (cap_s < target_s) throw Error("cap must be at least the target duration");

  auto ms = [](double s) { return static_cast<std::int64_t>(std::llround(s * 1000.0)); };
  ChunkingResult res;
  const std::int64_t target = std::int64_t{target_s} * 1000;
  const std::int64_t cap = ms(cap_s);
  std::vector<const Utterance*> cur;
  std::int64_t span_start = 0;
  std::int64_t span_end = 0;

  auto emit = [&](std::int64_t end) {
    Chunk c;
    c.source_session = session.id;
    c.span_start_s = static_cast<double>(span_start) / 1000.0;
    c.span_end_s = static_cast<double>(end) / 1000.0;
    c.target_bucket_s = target_s;
    for (const Utterance* u : cur) c.turns.emplace_back(u->speaker_id, u->text);
    c.chunk_id = make_chunk_id(session.id, target_s, res.chunks.size());
    res.chunks.push_back(std::move(c));
    cur.clear();
  };
  auto drop_partial = [&](const char* why) {
    if (cur.empty()) return;
    res.warnings.push_back(session.id + ": dropped " + std::to_string(cur.size()) +
                           " utterance(s) at " + detail::fixed3(static_cast<double>(span_start) / 1000.0) +
                           "s: " + why);
    cur.clear();
  };

  for (const Utterance& u : session.utterances) {
    const std::int64_t u_start = ms(u.start_s);
    const std::int64_t u_end = ms(u.end_s);
    if (u_end - u_start > cap) {
      drop_partial("next utterance exceeds the cap");
      res.warnings.push_back(session.id + ": utterance at " + detail::fixed3(u.start_s) +
                             "s is longer than the " + detail::fixed3(cap_s) + "s cap, dropped");
      continue;
    }
    if (!cur.empty() && u_start >= span_start + target) emit(span_start + target);
    if (!cur.empty() && std::max(span_end, u_end) - span_start > cap) {
      drop_partial("chunk would exceed the cap");
    }
    if (cur.empty()) {
      span_start = u_start;
      span_end = u_end;
    } else {
      span_end = std::max(span_end, u_end);
    }
    cur.push_back(&u);
    if (span_end - span_start >= target) emit(span_end);
  }
  drop_partial("trailing remainder shorter than the target");
  return res;
}

enum class TagStyle { Relative, Id, Cluster };

// Relative indices follow first appearance; consecutive turns by one speaker
// are merged. Id and Cluster styles take the qualifier value from id_map.
inline SaaDoc render_reference(const Chunk& chunk, TagStyle style = TagStyle::Relative,
                               const std::map<std::string, std::uint64_t>* id_map = nullptr) {
  SaaDoc doc;
  std::vector<std::string> order;
  std::string last_speaker;
  for (const auto& [speaker, text] : chunk.turns) {
    std::vector<std::string> words;
    detail::split_words(text, words);
    if (words.empty()) continue;
    if (!doc.turns.empty() && speaker == last_speaker) {
      auto& w = doc.turns.back().words;
      w.insert(w.end(), words.begin(), words.end());
      continue;
    }
    auto pos = std::find(order.begin(), order.end(), speaker);
    if (pos == order.end()) {
      order.push_back(speaker);
      pos = order.end() - 1;
    }
    SpeakerTag tag{static_cast<int>(pos - order.begin()) + 1, Qualifier::None, 0};
    if (style != TagStyle::Relative) {
      if (!id_map || !id_map->contains(speaker)) {
        throw Error("no id for speaker '" + speaker + "' in chunk " + chunk.chunk_id);
      }
      tag.qualifier = style == TagStyle::Id ? Qualifier::Id : Qualifier::Cluster;
      tag.value = id_map->at(speaker);
    }
    doc.turns.push_back(Turn{tag, std::move(words)});
    last_speaker = speaker;
  }
  return doc;
}

inline std::string chunk_to_jsonl(const Chunk& c) {
  std::string out = "{\"chunk_id\":" + json(c.chunk_id).dump() +
                    ",\"source_session\":" + json(c.source_session).dump() +
                    ",\"span_start_s\":" + detail::fixed3(c.span_start_s) +
                    ",\"span_end_s\":" + detail::fixed3(c.span_end_s) +
                    ",\"target_bucket_s\":" + std::to_string(c.target_bucket_s) + ",\"turns\":[";
  for (std::size_t i = 0; i < c.turns.size(); ++i) {
    if (i) out += ',';
    out += "{\"speaker_id\":" + json(c.turns[i].first).dump() +
           ",\"text\":" + json(c.turns[i].second).dump() + "}";
  }
  out += "]}";
  return out;
}

inline std::vector<Chunk> read_chunk_manifest(std::istream& in,
                                              const std::string& source = "<chunks>") {
  std::vector<Chunk> chunks;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::blank(line)) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ManifestError(source, lineno, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ManifestError(source, lineno, "expected a JSON object");
    Chunk c;
    c.chunk_id = detail::require_field<std::string>(obj, "chunk_id", source, lineno);
    c.source_session = detail::require_field<std::string>(obj, "source_session", source, lineno);
    c.span_start_s = detail::require_number(obj, "span_start_s", source, lineno);
    c.span_end_s = detail::require_number(obj, "span_end_s", source, lineno);
    c.target_bucket_s = detail::require_field<int>(obj, "target_bucket_s", source, lineno);
    const auto turns = detail::require_field<json>(obj, "turns", source, lineno);
    if (!turns.is_array() || turns.empty()) {
      throw ManifestError(source, lineno, "'turns' must be a non-empty array");
    }
    for (const auto& t : turns) {
      if (!t.is_object()) throw ManifestError(source, lineno, "turn must be an object");
      c.turns.emplace_back(detail::require_field<std::string>(t, "speaker_id", source, lineno),
                           detail::require_field<std::string>(t, "text", source, lineno));
    }
    chunks.push_back(std::move(c));
  }
  return chunks;
}

}  // namespace saakit
