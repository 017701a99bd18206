#include <gtest/gtest.h>

#include <filesystem>

#include "saakit/audio.hpp"
#include "saakit/random.hpp"

using namespace saakit;

namespace {

Wave random_wave(Rng& rng, std::uint32_t rate, std::size_t n) {
  Wave w{rate, std::vector<std::int16_t>(n)};
  for (auto& s : w.samples) s = static_cast<std::int16_t>(uniform_int(rng, INT16_MIN, INT16_MAX));
  return w;
}

std::vector<unsigned char> with_format(std::uint16_t format, std::uint16_t bits) {
  auto bytes = encode_wav(std::vector<Wave>{Wave{16000, {1, 2, 3, 4}}});
  bytes[20] = static_cast<unsigned char>(format & 0xff);
  bytes[21] = static_cast<unsigned char>(format >> 8);
  bytes[34] = static_cast<unsigned char>(bits);
  return bytes;
}

}  // namespace

TEST(Wav, RoundTripMonoAndStereo) {
  Rng rng(1);
  const auto mono = random_wave(rng, 16000, 1234);
  EXPECT_EQ(decode_wav(encode_wav(std::vector<Wave>{mono})), std::vector<Wave>{mono});
  const std::vector<Wave> stereo{random_wave(rng, 8000, 99), random_wave(rng, 8000, 99)};
  EXPECT_EQ(decode_wav(encode_wav(stereo)), stereo);
  EXPECT_EQ(encode_wav(std::vector<Wave>{mono}).size(), 44u + 2u * 1234u);
}

TEST(Wav, FileRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path();
  const auto path = (dir / "saakit_test_audio.wav").string();
  const Wave w{8000, {0, -1, 32767, -32768}};
  write_wav(path, w);
  EXPECT_EQ(read_wav(path), w);
  EXPECT_THROW(read_wav_pair(path), WavFormatError);
  std::filesystem::remove(path);
  EXPECT_THROW(read_wav(path), Error);
}

TEST(Wav, SkipsUnknownChunks) {
  auto bytes = encode_wav(std::vector<Wave>{Wave{16000, {7, 8}}});
  const std::vector<unsigned char> extra{'L', 'I', 'S', 'T', 3, 0, 0, 0, 'a', 'b', 'c', 0};
  bytes.insert(bytes.begin() + 36, extra.begin(), extra.end());
  EXPECT_EQ(decode_wav(bytes)[0].samples, (std::vector<std::int16_t>{7, 8}));
}

TEST(Wav, RejectsFloatAndOtherDepths) {
  EXPECT_THROW(decode_wav(with_format(3, 32)), WavFormatError);
  EXPECT_THROW(decode_wav(with_format(1, 24)), WavFormatError);
  EXPECT_NO_THROW(decode_wav(with_format(1, 16)));
}

TEST(Wav, RejectsTruncatedAndGarbage) {
  auto bytes = encode_wav(std::vector<Wave>{Wave{16000, {1, 2, 3, 4}}});
  bytes.resize(bytes.size() - 3);
  EXPECT_THROW(decode_wav(bytes), WavFormatError);
  const std::vector<unsigned char> junk{'n', 'o', 'p', 'e'};
  EXPECT_THROW(decode_wav(junk), WavFormatError);
}

TEST(Mixdown, RoundsHalvesAwayFromZero) {
  EXPECT_EQ(mixdown(Wave{16000, {100}}, Wave{16000, {0}}).samples[0], 50);
  EXPECT_EQ(mixdown(Wave{16000, {3}}, Wave{16000, {4}}).samples[0], 4);
  EXPECT_EQ(mixdown(Wave{16000, {-3}}, Wave{16000, {-4}}).samples[0], -4);
  EXPECT_EQ(mixdown(Wave{16000, {32767}}, Wave{16000, {32767}}).samples[0], 32767);
  EXPECT_EQ(mixdown(Wave{16000, {-32768}}, Wave{16000, {-32768}}).samples[0], -32768);
  EXPECT_THROW(mixdown(Wave{16000, {1}}, Wave{8000, {1}}), Error);
  EXPECT_THROW(mixdown(Wave{16000, {1}}, Wave{16000, {1, 2}}), Error);
}

TEST(MixdownProperty, IdentityAndSymmetry) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_wave(rng, 16000, 500);
    const auto b = random_wave(rng, 16000, 500);
    EXPECT_EQ(mixdown(a, a), a);
    EXPECT_EQ(mixdown(a, b), mixdown(b, a));
  }
}

TEST(CutSpan, WholeAndNested) {
  Rng rng(3);
  const auto w = random_wave(rng, 8000, 8000);
  EXPECT_EQ(cut_span(w, 0.0, 1.0), w);
  const auto outer = cut_span(w, 0.25, 0.75);
  EXPECT_EQ(outer.samples.size(), 4000u);
  EXPECT_EQ(outer.samples.front(), w.samples[2000]);
  // A span of a span equals the directly cut span.
  EXPECT_EQ(cut_span(outer, 0.1, 0.2), cut_span(w, 0.35, 0.45));
  EXPECT_EQ(cut_span(w, 0.3, 0.6).samples.size(), 2400u);
  EXPECT_THROW(cut_span(w, 0.5, 0.5), Error);
  EXPECT_THROW(cut_span(w, 0.5, 1.5), Error);
  EXPECT_THROW(cut_span(w, -0.1, 0.5), Error);
}

TEST(Concat, LengthFormula) {
  const Wave one{16000, std::vector<std::int16_t>(16000, 1)};
  const Wave half{16000, std::vector<std::int16_t>(8000, 2)};
  const std::vector<Wave> two{one, one};
  EXPECT_EQ(concat(two).samples.size(), 32000u);
  const std::vector<Wave> three{one, half, one};
  EXPECT_EQ(concat(three).samples.size(), 40000u);
  const auto gapped = concat(three, 0.5);
  EXPECT_EQ(gapped.samples.size(), 40000u + 2u * 8000u);
  EXPECT_EQ(gapped.samples[16000], 0);
  EXPECT_EQ(gapped.samples[24000], 2);
  EXPECT_TRUE(concat(std::vector<Wave>{}).samples.empty());
  EXPECT_THROW(concat(std::vector<Wave>{one, Wave{8000, {1}}}), Error);
  EXPECT_THROW(concat(two, -1.0), Error);
}

TEST(ConcatProperty, Associative) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_wave(rng, 8000, static_cast<std::size_t>(uniform_int(rng, 0, 300)));
    const auto b = random_wave(rng, 8000, static_cast<std::size_t>(uniform_int(rng, 0, 300)));
    const auto c = random_wave(rng, 8000, static_cast<std::size_t>(uniform_int(rng, 0, 300)));
    const auto left = concat(std::vector<Wave>{concat(std::vector<Wave>{a, b}), c});
    const auto right = concat(std::vector<Wave>{a, concat(std::vector<Wave>{b, c})});
    EXPECT_EQ(left, right);
    EXPECT_EQ(left, concat(std::vector<Wave>{a, b, c}));
  }
}
