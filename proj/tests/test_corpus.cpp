#include <gtest/gtest.h>

#include <sstream>

#include "saakit/corpus.hpp"
#include "saakit/random.hpp"

using namespace saakit;

namespace {

Utterance utt(const char* spk, double start, double end, const char* text = "w") {
  return Utterance{"s", spk, std::nullopt, start, end, text};
}

Session session(std::vector<Utterance> u) {
  Session s{"s", std::move(u)};
  s.sort();
  return s;
}

Corpus parse(const std::string& text) {
  std::istringstream in(text);
  return read_manifest(in, "m.jsonl");
}

}  // namespace

TEST(Manifest, LoadsOneLine) {
  const auto c = parse(
      R"({"session_id":"s1","speaker_id":"A","start_s":0.0,"end_s":1.5,"text":"hi there"})"
      "\n");
  ASSERT_EQ(c.sessions.size(), 1u);
  const auto& u = c.sessions[0].utterances.at(0);
  EXPECT_EQ(u.session_id, "s1");
  EXPECT_EQ(u.speaker_id, "A");
  EXPECT_FALSE(u.channel);
  EXPECT_EQ(u.end_s, 1.5);
  EXPECT_EQ(u.text, "hi there");
}

TEST(Manifest, EmptyFileAndBlankLines) {
  EXPECT_EQ(parse("").utterance_count(), 0u);
  EXPECT_EQ(parse("\n  \n").utterance_count(), 0u);
}

TEST(Manifest, GroupsAndSortsSessions) {
  const auto c = parse(
      R"({"session_id":"b","speaker_id":"A","start_s":5,"end_s":6,"text":"x"})"
      "\n"
      R"({"session_id":"a","speaker_id":"A","start_s":0,"end_s":1,"text":"y"})"
      "\r\n"
      R"({"session_id":"b","speaker_id":"B","start_s":1,"end_s":2,"text":"z","channel":1})"
      "\n");
  ASSERT_EQ(c.sessions.size(), 2u);
  EXPECT_EQ(c.sessions[0].id, "b");
  EXPECT_EQ(c.sessions[0].utterances[0].text, "z");
  EXPECT_EQ(c.sessions[0].utterances[0].channel, 1);
  EXPECT_EQ(c.sessions[1].id, "a");
}

TEST(Manifest, ErrorsNameTheLine) {
  auto line_of = [](const std::string& text) -> std::size_t {
    try {
      parse(text);
    } catch (const ManifestError& e) {
      EXPECT_EQ(e.source(), "m.jsonl");
      return e.line();
    }
    ADD_FAILURE() << "expected ManifestError";
    return 0;
  };
  const std::string ok =
      R"({"session_id":"s","speaker_id":"A","start_s":0,"end_s":1,"text":"x"})"
      "\n";
  EXPECT_EQ(line_of(ok + R"({"session_id":"s","speaker_id":"A","start_s":2,"end_s":2,"text":"x"})"), 2u);
  EXPECT_EQ(line_of(ok + ok + R"({"session_id":"s","start_s":0,"end_s":1,"text":"x"})"), 3u);
  EXPECT_EQ(line_of(ok + "{not json"), 2u);
  EXPECT_EQ(line_of(R"({"session_id":"s","speaker_id":"A","start_s":-1,"end_s":1,"text":"x"})"), 1u);
  EXPECT_EQ(line_of(R"({"session_id":"s","speaker_id":"A","start_s":0,"end_s":1,"text":"  "})"), 1u);
  EXPECT_EQ(line_of(R"({"session_id":"s","speaker_id":"A","start_s":"0","end_s":1,"text":"x"})"), 1u);
  EXPECT_EQ(line_of(R"([1,2])"), 1u);
}

TEST(Manifest, SerializationIsIdempotent) {
  const std::string text =
      R"({"session_id":"s","speaker_id":"A \"q\"","channel":0,"start_s":0.12345,"end_s":1,"text":"héllo"})"
      "\n"
      R"({"session_id":"s","speaker_id":"B","start_s":1.5,"end_s":2.25,"text":"ok"})"
      "\n";
  std::ostringstream once;
  write_manifest(once, parse(text));
  std::ostringstream twice;
  write_manifest(twice, parse(once.str()));
  EXPECT_EQ(once.str(), twice.str());
  EXPECT_NE(once.str().find(R"("start_s":0.123,)"), std::string::npos);
  EXPECT_NE(once.str().find(R"("channel":0,)"), std::string::npos);
}

TEST(ResolveOverlaps, DropsContainedOtherSpeaker) {
  const auto out = resolve_overlaps(session({utt("A", 0, 10), utt("B", 2, 3), utt("A", 4, 5)}));
  ASSERT_EQ(out.utterances.size(), 2u);
  EXPECT_EQ(out.utterances[0].speaker_id, "A");
  EXPECT_EQ(out.utterances[1].start_s, 4.0);
}

TEST(ResolveOverlaps, KeepsPartialOverlap) {
  const auto out = resolve_overlaps(session({utt("A", 0, 5), utt("B", 4, 8)}));
  EXPECT_EQ(out.utterances.size(), 2u);
}

TEST(ResolveOverlaps, IdenticalSpansBothDropped) {
  EXPECT_TRUE(resolve_overlaps(session({utt("A", 1, 2), utt("B", 1, 2)})).utterances.empty());
}

TEST(ResolveOverlaps, Idempotent) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Utterance> u;
    for (auto n = uniform_int(rng, 0, 12); n > 0; --n) {
      const double s = static_cast<double>(uniform_int(rng, 0, 20));
      u.push_back(utt(uniform_index(rng, 2) ? "A" : "B", s, s + static_cast<double>(uniform_int(rng, 1, 6))));
    }
    const auto once = resolve_overlaps(session(u));
    EXPECT_EQ(resolve_overlaps(once).utterances, once.utterances);
  }
}

TEST(ChunkSession, PacksWholeUtterances) {
  const auto r = chunk_session(session({utt("A", 0, 4), utt("B", 4, 9), utt("A", 9, 13)}), 10);
  ASSERT_EQ(r.chunks.size(), 1u);
  const auto& c = r.chunks[0];
  EXPECT_EQ(c.span_start_s, 0.0);
  EXPECT_EQ(c.span_end_s, 13.0);
  EXPECT_EQ(c.turns.size(), 3u);
  EXPECT_EQ(c.chunk_id, "s_10s_0000");
  EXPECT_EQ(c.target_bucket_s, 10);
}

TEST(ChunkSession, ExactTarget) {
  const auto r = chunk_session(session({utt("A", 0, 10)}), 10);
  ASSERT_EQ(r.chunks.size(), 1u);
  EXPECT_EQ(r.chunks[0].span_end_s, 10.0);
}

TEST(ChunkSession, OverlongUtteranceDropped) {
  const auto r = chunk_session(session({utt("A", 0, 130)}), 10, 120);
  EXPECT_TRUE(r.chunks.empty());
  EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(ChunkSession, ShortRemainderDropped) {
  const auto r = chunk_session(session({utt("A", 0, 6), utt("B", 6, 11), utt("A", 11, 14)}), 10);
  ASSERT_EQ(r.chunks.size(), 1u);
  EXPECT_EQ(r.chunks[0].span_end_s, 11.0);
  EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(ChunkSession, SilenceClosesChunkAtTarget) {
  const auto r = chunk_session(session({utt("A", 0, 3), utt("B", 40, 45), utt("A", 46, 52)}), 10);
  ASSERT_EQ(r.chunks.size(), 2u);
  EXPECT_EQ(r.chunks[0].span_end_s, 10.0);
  EXPECT_EQ(r.chunks[0].turns.size(), 1u);
  EXPECT_EQ(r.chunks[1].span_start_s, 40.0);
  EXPECT_EQ(r.chunks[1].span_end_s, 52.0);
  EXPECT_EQ(r.chunks[1].chunk_id, "s_10s_0001");
}

TEST(ChunkSession, RejectsBadTargets) {
  EXPECT_THROW(chunk_session(session({}), 15), Error);
  EXPECT_THROW(chunk_session(session({}), 60, 30), Error);
}

TEST(ChunkSessionProperty, Bounds) {
  Rng rng(99);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Utterance> u;
    std::int64_t t = 0;  // milliseconds
    for (auto n = uniform_int(rng, 0, 60); n > 0; --n) {
      t += uniform_int(rng, 0, 3000);
      const auto d = uniform_int(rng, 200, 14000);
      u.push_back(utt(uniform_index(rng, 3) == 0 ? "B" : "A", static_cast<double>(t) / 1000.0,
                      static_cast<double>(t + d) / 1000.0));
      t += d;
    }
    for (int target : kBuckets) {
      const double cap = target == 120 ? 120.0 : 40.0 + target;
      const auto s = session(u);
      const auto r = chunk_session(s, target, cap);
      double prev_end = -1.0;
      for (const auto& c : r.chunks) {
        double longest = 0.0;
        for (const auto& x : s.utterances) {
          if (x.start_s >= c.span_start_s && x.end_s <= c.span_end_s) {
            longest = std::max(longest, Chunk{"", "", x.start_s, x.end_s, 0, {}}.duration_s());
          }
        }
        EXPECT_GE(c.duration_s(), target);
        EXPECT_LT(c.duration_s(), target + longest);
        EXPECT_LE(c.duration_s(), cap);
        EXPECT_GE(c.span_start_s, prev_end);
        prev_end = c.span_end_s;
        // Each turn is an utterance lying inside the span.
        for (const auto& [spk, text] : c.turns) {
          const bool inside = std::any_of(s.utterances.begin(), s.utterances.end(), [&](const Utterance& x) {
            return x.speaker_id == spk && x.text == text && x.start_s >= c.span_start_s &&
                   x.end_s <= c.span_end_s;
          });
          EXPECT_TRUE(inside);
        }
      }
    }
  }
}

TEST(RenderReference, RelativeByFirstAppearance) {
  Chunk c;
  c.turns = {{"spk9", "yeah"}, {"spk3", "ok"}};
  EXPECT_EQ(render_saa(render_reference(c)), "[Speaker 1]: yeah\n[Speaker 2]: ok");
}

TEST(RenderReference, MergesConsecutiveTurns) {
  Chunk c;
  c.turns = {{"A", "a b"}, {"A", "c"}, {"B", "d"}, {"A", "e"}};
  EXPECT_EQ(render_saa(render_reference(c)), "[Speaker 1]: a b c\n[Speaker 2]: d\n[Speaker 1]: e");
}

TEST(RenderReference, QualifiedStyles) {
  Chunk c;
  c.chunk_id = "c0";
  c.turns = {{"A", "hi"}};
  const std::map<std::string, std::uint64_t> ids{{"A", 14}};
  EXPECT_EQ(render_saa(render_reference(c, TagStyle::Cluster, &ids)), "[Speaker 1 cluster 14]: hi");
  EXPECT_EQ(render_saa(render_reference(c, TagStyle::Id, &ids)), "[Speaker 1 ID 14]: hi");
  const std::map<std::string, std::uint64_t> none;
  EXPECT_THROW(render_reference(c, TagStyle::Id, &none), Error);
  EXPECT_THROW(render_reference(c, TagStyle::Id), Error);
}

TEST(RenderReferenceProperty, SpeakerNamesDoNotMatter) {
  Rng rng(5);
  const std::vector<std::string> names{"A", "B", "C", "D"};
  for (int trial = 0; trial < 200; ++trial) {
    Chunk c;
    for (auto n = uniform_int(rng, 1, 10); n > 0; --n) {
      c.turns.emplace_back(names[uniform_index(rng, 4)], uniform_index(rng, 2) ? "x y" : "z");
    }
    std::vector<std::string> perm = names;
    shuffle(perm, rng);
    Chunk renamed = c;
    for (auto& [spk, text] : renamed.turns) {
      spk = perm[static_cast<std::size_t>(spk[0] - 'A')];
    }
    const auto doc = render_reference(c);
    EXPECT_EQ(render_reference(renamed), doc);
    EXPECT_EQ(doc.turns.front().tag.rel, 1);
    EXPECT_FALSE(parse_saa(render_saa(doc)).index_gaps);
  }
}

TEST(ChunkManifest, RoundTrip) {
  Chunk c{"s_10s_0000", "s", 1.0, 12.5, 10, {{"A", "hi \"there\""}, {"B", "ok"}}};
  std::istringstream in(chunk_to_jsonl(c) + "\n");
  const auto back = read_chunk_manifest(in);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0], c);
}
