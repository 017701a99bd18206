#include <gtest/gtest.h>

#include "saakit/random.hpp"
#include "saakit/tags.hpp"
#include "support/oracles.hpp"

using namespace saakit;

TEST(ParseSaa, ClusterTaggedTurn) {
  const auto r = parse_saa("[Speaker 1 cluster 14]: thing An alien presence");
  ASSERT_EQ(r.doc.turns.size(), 1u);
  const Turn& t = r.doc.turns[0];
  EXPECT_EQ(t.tag.rel, 1);
  EXPECT_EQ(t.tag.qualifier, Qualifier::Cluster);
  EXPECT_EQ(t.tag.value, 14u);
  EXPECT_EQ(t.words, (std::vector<std::string>{"thing", "An", "alien", "presence"}));
  EXPECT_FALSE(r.index_gaps);
}

TEST(ParseSaa, RelativeTurnsKeepOrder) {
  const auto r = parse_saa("[Speaker 1]: a\n[Speaker 2]: b\n[Speaker 1]: c");
  ASSERT_EQ(r.doc.turns.size(), 3u);
  EXPECT_EQ(r.doc.turns[0].tag.rel, 1);
  EXPECT_EQ(r.doc.turns[1].tag.rel, 2);
  EXPECT_EQ(r.doc.turns[2].tag.rel, 1);
}

TEST(ParseSaa, IdQualifier) {
  const auto r = parse_saa("[Speaker 2 ID 21794]: yeah");
  ASSERT_EQ(r.doc.turns.size(), 1u);
  EXPECT_EQ(r.doc.turns[0].tag.qualifier, Qualifier::Id);
  EXPECT_EQ(r.doc.turns[0].tag.value, 21794u);
  EXPECT_TRUE(r.index_gaps);
}

TEST(ParseSaa, StrictRejectsLeadingText) {
  try {
    parse_saa("hello [Speaker 1]: hi");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
}

TEST(ParseSaa, LenientKeepsLeadingTextAsUntaggedTurn) {
  const auto r = parse_saa("hello [Speaker 1]: hi", ParseMode::Lenient);
  EXPECT_TRUE(r.leading_untagged);
  ASSERT_EQ(r.doc.turns.size(), 2u);
  EXPECT_EQ(r.doc.turns[0].tag.rel, 0);
  EXPECT_EQ(r.doc.turns[0].words, std::vector<std::string>{"hello"});
  EXPECT_THROW(render_saa(r.doc), Error);
}

TEST(ParseSaa, MalformedHeaders) {
  for (const char* bad : {"[Speaker]: a", "[Speaker x]: a", "[Speaker 0]: a", "[Speaker 1] a",
                          "[Speaker 1 ID]: a", "[Speaker 1 ID 3 cluster 4]: a",
                          "[Speaker 1 id 3]: a", "[speaker 1]: a"}) {
    SCOPED_TRACE(bad);
    if (std::string_view(bad).starts_with("[speaker")) {
      // No "[Speaker" prefix: plain leading text.
      EXPECT_THROW(parse_saa(bad), ParseError);
      continue;
    }
    try {
      parse_saa(bad);
      FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
      EXPECT_EQ(e.offset(), 0u);
    }
  }
}

TEST(ParseSaa, LenientKeepsMalformedHeaderAsWords) {
  const auto r = parse_saa("[Speaker 1]: a [Speaker] b", ParseMode::Lenient);
  ASSERT_EQ(r.doc.turns.size(), 1u);
  EXPECT_EQ(r.doc.turns[0].words, (std::vector<std::string>{"a", "[Speaker]", "b"}));
  EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(ParseSaa, EmptyTurnBody) {
  try {
    parse_saa("[Speaker 1]: a [Speaker 2]:[Speaker 1]: b");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 15u);
  }
  EXPECT_THROW(parse_saa("[Speaker 1]:   "), ParseError);
  const auto r = parse_saa("[Speaker 1]: a [Speaker 2]:[Speaker 1]: b", ParseMode::Lenient);
  EXPECT_EQ(r.doc.turns.size(), 2u);
}

TEST(ParseSaa, EmptyInput) {
  EXPECT_TRUE(parse_saa("").doc.turns.empty());
  EXPECT_TRUE(parse_saa("  \n ").doc.turns.empty());
  EXPECT_EQ(render_saa(SaaDoc{}), "");
}

TEST(ParseSaa, GapsAreFlagged) {
  EXPECT_TRUE(parse_saa("[Speaker 1]: a [Speaker 3]: b").index_gaps);
  EXPECT_FALSE(parse_saa("[Speaker 2]: a [Speaker 1]: b").index_gaps);
}

TEST(RenderSaa, ExactFormat) {
  SaaDoc doc;
  doc.turns.push_back({{2, Qualifier::Id, 21794}, {"yeah"}});
  EXPECT_EQ(render_saa(doc), "[Speaker 2 ID 21794]: yeah");
  doc.turns.push_back({{1, Qualifier::None, 0}, {"ok", "then"}});
  EXPECT_EQ(render_saa(doc), "[Speaker 2 ID 21794]: yeah\n[Speaker 1]: ok then");
}

TEST(RenderSaa, CanonicalizesWhitespace) {
  const std::string messy = "[Speaker 1]:   a\t b\n\n[Speaker 2]:c  ";
  EXPECT_EQ(render_saa(parse_saa(messy).doc), "[Speaker 1]: a b\n[Speaker 2]: c");
}

TEST(WordSpeakerPairs, Flatten) {
  const auto doc = parse_saa("[Speaker 1]: a b\n[Speaker 2]: c").doc;
  EXPECT_EQ(word_speaker_pairs(doc),
            (std::vector<WordSpeaker>{{"a", 1}, {"b", 1}, {"c", 2}}));
  EXPECT_EQ(strip_tags(doc), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_TRUE(word_speaker_pairs(SaaDoc{}).empty());
  EXPECT_TRUE(strip_tags(SaaDoc{}).empty());
}

TEST(NormalizeHeaders, RepairsCommonDrift) {
  EXPECT_EQ(normalize_headers("[speaker 1] : hi [SPEAKER  2 Cluster 7]: yo"),
            "[Speaker 1]: hi [Speaker 2 cluster 7]: yo");
  EXPECT_EQ(normalize_headers("[Speaker 3 id 12]:x"), "[Speaker 3 ID 12]:x");
}

// Round trip and tokenization laws on generated well-formed documents.
TEST(ParseSaaProperty, FuzzedDocsRoundTrip) {
  Rng rng(42);
  static const char* vocab[] = {"a", "it's", "Hello,", "[x]", "Speaker", "ok", "é", "1"};
  for (int trial = 0; trial < 2000; ++trial) {
    std::string text;
    std::vector<std::string> expected_words;
    const auto turns = uniform_int(rng, 0, 6);
    for (int t = 0; t < turns; ++t) {
      SpeakerTag tag{static_cast<int>(uniform_int(rng, 1, 12)),
                     static_cast<Qualifier>(uniform_int(rng, 0, 2)),
                     static_cast<std::uint64_t>(uniform_int(rng, 0, 400))};
      if (tag.qualifier == Qualifier::None) tag.value = 0;
      text += render_header(tag);
      const auto n = uniform_int(rng, 1, 5);
      for (int w = 0; w < n; ++w) {
        text += uniform_index(rng, 3) == 0 ? "\n  " : " ";
        expected_words.push_back(vocab[uniform_index(rng, 8)]);
        text += expected_words.back();
      }
      text += "\n";
    }
    const auto parsed = parse_saa(text);
    EXPECT_EQ(strip_tags(parsed.doc), expected_words);
    EXPECT_EQ(parse_saa(render_saa(parsed.doc)).doc, parsed.doc);
    EXPECT_EQ(word_speaker_pairs(parsed.doc).size(), strip_tags(parsed.doc).size());
  }
}
