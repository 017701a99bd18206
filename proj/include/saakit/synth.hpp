#pragma once

// Synthetic multi-speaker conversations built by alternating short runs of
// whole utterances from independent single-speaker streams, and seeded
// corruption of reference transcripts with an exact ledger of what was
// injected.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "saakit/corpus.hpp"
#include "saakit/error.hpp"
#include "saakit/random.hpp"
#include "saakit/tags.hpp"

namespace saakit {

enum class SynthStyle { Alternating, SideConcat };

struct SynthSpec {
  int n_speakers_min = 2;
  int n_speakers_max = 4;
  int target_s = 10;
  double sample_min_s = 2.0;
  double sample_max_s = 8.0;
  double gap_s = 0.0;
  SynthStyle style = SynthStyle::Alternating;
  std::uint64_t seed = 0;
  int retry_cap = 10;
};

inline void validate(const SynthSpec& s) {
  if (s.n_speakers_min < 2 || s.n_speakers_min > s.n_speakers_max) {
    throw Error("speaker range must satisfy 2 <= min <= max");
  }
  if (!is_bucket(s.target_s)) throw Error("target must be one of 10, 30, 60, 120 seconds");
  if (!(s.sample_min_s > 0.0) || s.sample_min_s > s.sample_max_s) {
    throw Error("sample range must satisfy 0 < min <= max");
  }
  if (s.gap_s < 0.0) throw Error("gap must be non-negative");
  if (s.retry_cap < 0) throw Error("retry cap must be non-negative");
  if (s.style == SynthStyle::SideConcat && (s.n_speakers_min < 3 || s.n_speakers_max > 4)) {
    throw Error("side concatenation draws 3 to 4 speaker-sides");
  }
}

// One speaker's utterances from one session (or one channel of it).
struct SpeakerStream {
  std::string speaker_id;
  std::string session_id;
  std::optional<int> channel;
  std::vector<Utterance> utterances;
};

// Where the audio for one synthetic turn comes from.
struct TurnSource {
  std::string speaker_id;
  std::string session_id;
  std::optional<int> channel;
  std::vector<std::pair<double, double>> spans;
};

struct SynthResult {
  std::vector<Chunk> chunks;
  std::vector<std::vector<TurnSource>> sources;  // parallel to chunks
  std::vector<std::string> warnings;
};

namespace detail {

inline std::int64_t to_ms(double seconds) {
  return static_cast<std::int64_t>(std::llround(seconds * 1000.0));
}

inline std::int64_t duration_ms(const Utterance& u) { return to_ms(u.end_s) - to_ms(u.start_s); }

struct Sample {
  std::vector<const Utterance*> utts;
  std::int64_t duration_ms = 0;
};

// Next run of consecutive utterances from the cursor with total duration in
// [lo, hi] ms (strictly below hi when hi_strict). Utterances that cannot be
// part of a valid run are skipped. nullopt when the stream runs out.
inline std::optional<Sample> take_sample(const SpeakerStream& s, std::size_t& cursor,
                                         std::int64_t lo, std::int64_t hi, bool hi_strict,
                                         Rng& rng) {
  const double goal = uniform_real(rng, static_cast<double>(lo), static_cast<double>(hi));
  auto too_long = [&](std::int64_t d) { return hi_strict ? d >= hi : d > hi; };
  while (true) {
    Sample out;
    while (cursor < s.utterances.size()) {
      const Utterance& u = s.utterances[cursor];
      if (too_long(out.duration_ms + duration_ms(u))) break;
      out.duration_ms += duration_ms(u);
      out.utts.push_back(&u);
      ++cursor;
      if (static_cast<double>(out.duration_ms) >= goal) break;
    }
    if (!out.utts.empty() && out.duration_ms >= lo) return out;
    if (cursor >= s.utterances.size()) return std::nullopt;
    if (out.utts.empty()) ++cursor;
  }
}

// Round-robin over `streams` (already in speaking order) until every stream
// has spoken and the running duration reaches the target. The first round is
// budgeted so that the last newcomer still starts below the target. Durations
// are summed in whole milliseconds.
inline std::optional<std::pair<Chunk, std::vector<TurnSource>>> try_build(
    const std::vector<const SpeakerStream*>& streams, const SynthSpec& spec, Rng& rng) {
  const std::size_t n = streams.size();
  std::vector<std::size_t> cursor(n);
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t len = streams[s]->utterances.size();
    cursor[s] = len == 0 ? 0 : static_cast<std::size_t>(uniform_index(rng, len / 2 + 1));
  }

  Chunk chunk;
  std::vector<TurnSource> sources;
  const std::int64_t target = std::int64_t{spec.target_s} * 1000;
  const std::int64_t lo = to_ms(spec.sample_min_s);
  const std::int64_t gap_ms = to_ms(spec.gap_s);
  std::int64_t cum = 0;
  for (std::size_t t = 0;; ++t) {
    const std::size_t s = t % n;
    const std::int64_t gap = t == 0 ? 0 : gap_ms;
    std::int64_t hi = to_ms(spec.sample_max_s);
    bool strict = false;
    if (t + 1 < n) {
      const auto later = static_cast<std::int64_t>(n - 2 - t) * (lo + gap_ms);
      const std::int64_t budget = target - cum - gap - later;
      if (budget <= hi) {
        if (budget <= lo) return std::nullopt;
        hi = budget;
        strict = true;
      }
    }
    auto sample = take_sample(*streams[s], cursor[s], lo, hi, strict, rng);
    if (!sample) return std::nullopt;

    std::string text;
    TurnSource src{streams[s]->speaker_id, streams[s]->session_id, streams[s]->channel, {}};
    for (const Utterance* u : sample->utts) {
      if (!text.empty()) text += ' ';
      text += u->text;
      src.spans.emplace_back(u->start_s, u->end_s);
    }
    chunk.turns.emplace_back(streams[s]->speaker_id, std::move(text));
    sources.push_back(std::move(src));
    cum += gap + sample->duration_ms;
    if (t + 1 >= n && cum >= target) break;
  }
  chunk.span_start_s = 0.0;
  chunk.span_end_s = static_cast<double>(cum) / 1000.0;
  chunk.target_bucket_s = spec.target_s;
  return std::make_pair(std::move(chunk), std::move(sources));
}

inline std::string synth_chunk_id(SynthStyle style, int target_s, std::size_t index) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "synth_%s_%ds_%06zu",
                style == SynthStyle::Alternating ? "alt" : "side", target_s, index);
  return buf;
}

// Picks n entries of `candidates` without replacement such that their keys
// are pairwise distinct. Order of the result is the draw order.
template <typename Key>
std::vector<std::size_t> draw_distinct(std::size_t n, const std::vector<Key>& keys, Rng& rng) {
  std::vector<std::size_t> pool(keys.size());
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  std::vector<std::size_t> out;
  std::set<Key> taken;
  while (out.size() < n && !pool.empty()) {
    const std::size_t k = uniform_index(rng, pool.size());
    const std::size_t pick = pool[k];
    pool[k] = pool.back();
    pool.pop_back();
    if (taken.insert(keys[pick]).second) out.push_back(pick);
  }
  return out;
}

template <typename Draw>
SynthResult build_chunks(const SynthSpec& spec, std::size_t count, Draw draw) {
  SynthResult res;
  for (std::size_t i = 0; i < count; ++i) {
    Rng rng = derived_rng(spec.seed, i);
    bool done = false;
    for (int attempt = 0; attempt <= spec.retry_cap && !done; ++attempt) {
      const auto n = static_cast<std::size_t>(uniform_int(rng, spec.n_speakers_min, spec.n_speakers_max));
      const std::vector<const SpeakerStream*> streams = draw(n, rng);
      auto built = try_build(streams, spec, rng);
      if (!built) continue;
      built->first.chunk_id = synth_chunk_id(spec.style, spec.target_s, i);
      built->first.source_session = built->first.chunk_id;
      res.chunks.push_back(std::move(built->first));
      res.sources.push_back(std::move(built->second));
      done = true;
    }
    if (!done) {
      res.warnings.push_back("chunk " + std::to_string(i) + ": material exhausted after " +
                             std::to_string(spec.retry_cap + 1) + " draws, skipped");
    }
  }
  return res;
}

}  // namespace detail

// Every speaker of a single-speaker pool contributes one random session per
// chunk; samples alternate round-robin after a random initial order.
inline SynthResult build_alternating(const Corpus& pool, const SynthSpec& spec, std::size_t count) {
  validate(spec);
  if (spec.style != SynthStyle::Alternating) throw Error("spec style is not alternating");

  std::map<std::string, std::vector<SpeakerStream>> by_speaker;
  for (const auto& session : pool.sessions) {
    std::map<std::string, SpeakerStream> streams;
    for (const auto& u : session.utterances) {
      auto& st = streams[u.speaker_id];
      st.speaker_id = u.speaker_id;
      st.session_id = session.id;
      st.channel = u.channel;
      st.utterances.push_back(u);
    }
    for (auto& [spk, st] : streams) by_speaker[spk].push_back(std::move(st));
  }
  if (by_speaker.size() < static_cast<std::size_t>(spec.n_speakers_max)) {
    throw Error("pool has " + std::to_string(by_speaker.size()) + " speakers, need at least " +
                std::to_string(spec.n_speakers_max));
  }
  std::vector<std::string> speakers;
  for (const auto& [spk, _] : by_speaker) speakers.push_back(spk);

  return detail::build_chunks(spec, count, [&](std::size_t n, Rng& rng) {
    std::vector<const SpeakerStream*> chosen;
    for (std::size_t idx : detail::draw_distinct(n, speakers, rng)) {
      const auto& sessions = by_speaker.at(speakers[idx]);
      chosen.push_back(&sessions[uniform_index(rng, sessions.size())]);
    }
    return chosen;
  });
}

// Speaker-sides (one channel of a two-channel conversation) are drawn with
// pairwise distinct speakers and alternated the same way.
inline SynthResult build_side_concat(const Corpus& corpus, const SynthSpec& spec, std::size_t count) {
  validate(spec);
  if (spec.style != SynthStyle::SideConcat) throw Error("spec style is not side-concat");

  std::vector<SpeakerStream> sides;
  for (const auto& session : corpus.sessions) {
    std::map<int, SpeakerStream> by_channel;
    for (const auto& u : session.utterances) {
      if (!u.channel) throw Error("session " + session.id + " has utterances without a channel");
      auto& st = by_channel[*u.channel];
      if (st.utterances.empty()) {
        st.speaker_id = u.speaker_id;
        st.session_id = session.id;
        st.channel = u.channel;
      } else if (st.speaker_id != u.speaker_id) {
        throw Error("session " + session.id + " channel " + std::to_string(*u.channel) +
                    " mixes speakers");
      }
      st.utterances.push_back(u);
    }
    if (by_channel.size() != 2) {
      throw Error("session " + session.id + " has " + std::to_string(by_channel.size()) +
                  " channels, expected 2");
    }
    for (auto& [ch, st] : by_channel) sides.push_back(std::move(st));
  }
  std::vector<std::string> keys;
  for (const auto& s : sides) keys.push_back(s.speaker_id);
  const std::set<std::string> distinct(keys.begin(), keys.end());
  if (distinct.size() < static_cast<std::size_t>(spec.n_speakers_max)) {
    throw Error("corpus has " + std::to_string(distinct.size()) +
                " distinct speaker-sides, need at least " + std::to_string(spec.n_speakers_max));
  }

  return detail::build_chunks(spec, count, [&](std::size_t n, Rng& rng) {
    std::vector<const SpeakerStream*> chosen;
    for (std::size_t idx : detail::draw_distinct(n, keys, rng)) chosen.push_back(&sides[idx]);
    return chosen;
  });
}

inline SynthResult build_synthetic(const Corpus& corpus, const SynthSpec& spec, std::size_t count) {
  return spec.style == SynthStyle::Alternating ? build_alternating(corpus, spec, count)
                                               : build_side_concat(corpus, spec, count);
}

// --- hypothesis corruption --------------------------------------------------

struct ErrorModel {
  double p_spk_flip = 0.0;
  double p_sub = 0.0;
  double p_del = 0.0;
  double p_ins = 0.0;
  std::uint64_t seed = 0;
};

inline void validate(const ErrorModel& em) {
  for (double p : {em.p_spk_flip, em.p_sub, em.p_del, em.p_ins}) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error("probabilities must lie in [0, 1]");
  }
  if (em.p_sub + em.p_del > 1.0) throw Error("p_sub + p_del must not exceed 1");
}

struct InjectedErrors {
  std::size_t sub = 0;
  std::size_t del = 0;
  std::size_t ins = 0;
  std::size_t flips = 0;

  friend bool operator==(const InjectedErrors&, const InjectedErrors&) = default;
};

struct Corruption {
  SaaDoc hyp;
  InjectedErrors injected;
};

// Per reference word: substitute (p_sub) by a fresh token or delete (p_del);
// a surviving word moves to another speaker with p_spk_flip and is followed by
// a fresh inserted token with p_ins. Fresh tokens are "xsub<N>" / "xins<N>".
//
// Deletions and insertions are applied in runs of one kind. Switching kind
// needs, since the last event, more correct anchor words (values that occur
// once in the reference) than the length of the run being closed; a draw that
// would break this is not applied. An alignment that skipped r deletion /
// insertion pairs would leave more than r anchors unmatched, so every
// minimum-edit alignment of hyp against ref has exactly the injected counts.
inline Corruption corrupt_hypothesis(const SaaDoc& ref, const ErrorModel& em, Rng& rng) {
  validate(em);
  const auto pairs = word_speaker_pairs(ref);
  std::vector<int> speakers;
  std::vector<SpeakerTag> tag_for_rel;
  for (const auto& t : ref.turns) {
    if (std::find(speakers.begin(), speakers.end(), t.tag.rel) == speakers.end()) {
      speakers.push_back(t.tag.rel);
    }
    const auto r = static_cast<std::size_t>(t.tag.rel);
    if (tag_for_rel.size() <= r) tag_for_rel.resize(r + 1, SpeakerTag{0, Qualifier::None, 0});
    if (tag_for_rel[r].rel == 0) tag_for_rel[r] = t.tag;
  }
  std::sort(speakers.begin(), speakers.end());
  std::map<std::string, std::size_t> occurrences;
  for (const auto& p : pairs) ++occurrences[p.word];

  enum class Kind { None, Del, Ins };
  Kind run_kind = Kind::None;
  std::size_t run_len = 0;
  std::size_t anchors_since_event = 0;
  auto allowed = [&](Kind k) { return run_kind == k || run_kind == Kind::None || anchors_since_event > run_len; };
  auto record = [&](Kind k) {
    run_len = run_kind == k ? run_len + 1 : 1;
    run_kind = k;
    anchors_since_event = 0;
  };

  std::size_t fresh = 0;
  Corruption out;
  std::vector<WordSpeaker> hyp;
  for (const auto& [word, rel] : pairs) {
    const double u = uniform01(rng);
    const bool flip_draw = bernoulli(rng, em.p_spk_flip);
    const bool ins_draw = bernoulli(rng, em.p_ins);
    const auto other_draw = speakers.size() > 1 ? uniform_index(rng, speakers.size() - 1) : 0;

    if (u >= em.p_sub && u < em.p_sub + em.p_del && allowed(Kind::Del)) {
      ++out.injected.del;
      record(Kind::Del);
      continue;
    }
    std::string token;
    if (u < em.p_sub) {
      token = "xsub" + std::to_string(fresh++);
      ++out.injected.sub;
    } else {
      token = word;
      if (occurrences[word] == 1) ++anchors_since_event;
    }
    int spk = rel;
    if (flip_draw && speakers.size() > 1) {
      std::vector<int> others;
      for (int s : speakers) {
        if (s != rel) others.push_back(s);
      }
      spk = others[other_draw];
      ++out.injected.flips;
    }
    hyp.push_back({std::move(token), spk});
    if (ins_draw && allowed(Kind::Ins)) {
      hyp.push_back({"xins" + std::to_string(fresh++), spk});
      ++out.injected.ins;
      record(Kind::Ins);
    }
  }
  out.hyp = doc_from_pairs(hyp, tag_for_rel);
  return out;
}

inline Corruption corrupt_hypothesis(const SaaDoc& ref, const ErrorModel& em) {
  Rng rng(splitmix64(em.seed));
  return corrupt_hypothesis(ref, em, rng);
}

}  // namespace saakit
