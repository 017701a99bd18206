#pragma once

// Mono PCM16 waveforms: RIFF/WAVE read and write, two-channel mixdown, span
// cutting and concatenation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "saakit/error.hpp"

namespace saakit {

struct Wave {
  std::uint32_t sample_rate_hz = 16000;
  std::vector<std::int16_t> samples;

  double duration_s() const {
    return static_cast<double>(samples.size()) / static_cast<double>(sample_rate_hz);
  }

  friend bool operator==(const Wave&, const Wave&) = default;
};

class WavFormatError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

inline void put32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

inline void put_tag(std::vector<unsigned char>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

inline std::int16_t clamp16(std::int64_t v) {
  return static_cast<std::int16_t>(std::clamp<std::int64_t>(v, INT16_MIN, INT16_MAX));
}

// Sample index for a time, tolerant of binary rounding (e.g. 0.3 * 8000).
inline std::size_t sample_index(double seconds, std::uint32_t rate) {
  return static_cast<std::size_t>(std::floor(seconds * rate + 1e-6));
}

}  // namespace detail

// Decodes a RIFF/WAVE PCM16 image into one Wave per channel (1 or 2).
inline std::vector<Wave> decode_wav(std::span<const unsigned char> bytes) {
  using detail::le16;
  using detail::le32;
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw WavFormatError("not a RIFF/WAVE file");
  }
  bool have_fmt = false;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    const std::uint32_t size = le32(hdr + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (size < 16 || body + size > bytes.size()) throw WavFormatError("truncated fmt chunk");
      const unsigned char* f = bytes.data() + body;
      std::uint16_t format = le16(f);
      channels = le16(f + 2);
      rate = le32(f + 4);
      const std::uint16_t bits = le16(f + 14);
      if (format == detail::kFormatExtensible && size >= 40) format = le16(f + 24);
      if (format != detail::kFormatPcm || bits != 16) {
        throw WavFormatError("unsupported encoding (format " + std::to_string(format) + ", " +
                             std::to_string(bits) + " bits); only PCM16 is supported");
      }
      if (channels != 1 && channels != 2) {
        throw WavFormatError("unsupported channel count " + std::to_string(channels));
      }
      if (rate == 0) throw WavFormatError("sample rate is zero");
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      if (!have_fmt) throw WavFormatError("data chunk before fmt chunk");
      if (body + size > bytes.size()) throw WavFormatError("truncated data chunk");
      const std::size_t frame = 2u * channels;
      if (size % frame != 0) throw WavFormatError("data size is not a whole number of frames");
      const std::size_t frames = size / frame;
      std::vector<Wave> out(channels);
      for (auto& w : out) {
        w.sample_rate_hz = rate;
        w.samples.resize(frames);
      }
      const unsigned char* d = bytes.data() + body;
      for (std::size_t i = 0; i < frames; ++i) {
        for (std::size_t c = 0; c < channels; ++c) {
          out[c].samples[i] = static_cast<std::int16_t>(le16(d + (i * channels + c) * 2));
        }
      }
      return out;
    }
    pos = body + size + (size & 1u);
  }
  throw WavFormatError(have_fmt ? "missing data chunk" : "missing fmt chunk");
}

// Interleaves equal-length, equal-rate channels into a canonical 44-byte
// header PCM16 image.
inline std::vector<unsigned char> encode_wav(std::span<const Wave> channels) {
  if (channels.empty() || channels.size() > 2) throw Error("can only write 1 or 2 channels");
  const std::uint32_t rate = channels[0].sample_rate_hz;
  const std::size_t frames = channels[0].samples.size();
  for (const auto& w : channels) {
    if (w.sample_rate_hz != rate || w.samples.size() != frames) {
      throw Error("channels differ in rate or length");
    }
  }
  const auto nch = static_cast<std::uint16_t>(channels.size());
  const auto data_size = static_cast<std::uint32_t>(frames * nch * 2);
  std::vector<unsigned char> out;
  out.reserve(44 + data_size);
  detail::put_tag(out, "RIFF");
  detail::put32(out, 36 + data_size);
  detail::put_tag(out, "WAVE");
  detail::put_tag(out, "fmt ");
  detail::put32(out, 16);
  detail::put16(out, detail::kFormatPcm);
  detail::put16(out, nch);
  detail::put32(out, rate);
  detail::put32(out, rate * nch * 2);
  detail::put16(out, static_cast<std::uint16_t>(nch * 2));
  detail::put16(out, 16);
  detail::put_tag(out, "data");
  detail::put32(out, data_size);
  for (std::size_t i = 0; i < frames; ++i) {
    for (const auto& w : channels) detail::put16(out, static_cast<std::uint16_t>(w.samples[i]));
  }
  return out;
}

inline std::vector<Wave> read_wav_channels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  try {
    return decode_wav(bytes);
  } catch (const WavFormatError& e) {
    throw WavFormatError(path + ": " + e.what());
  }
}

inline Wave read_wav(const std::string& path) {
  auto ch = read_wav_channels(path);
  if (ch.size() != 1) throw WavFormatError(path + ": expected mono, found stereo");
  return std::move(ch[0]);
}

inline std::pair<Wave, Wave> read_wav_pair(const std::string& path) {
  auto ch = read_wav_channels(path);
  if (ch.size() != 2) throw WavFormatError(path + ": expected stereo, found mono");
  return {std::move(ch[0]), std::move(ch[1])};
}

inline void write_wav(const std::string& path, std::span<const Wave> channels) {
  const auto bytes = encode_wav(channels);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path);
}

inline void write_wav(const std::string& path, const Wave& mono) {
  write_wav(path, std::span<const Wave>(&mono, 1));
}

// Per-sample mean, halves rounded away from zero.
inline Wave mixdown(const Wave& a, const Wave& b) {
  if (a.sample_rate_hz != b.sample_rate_hz) throw Error("mixdown: sample rates differ");
  if (a.samples.size() != b.samples.size()) throw Error("mixdown: lengths differ");
  Wave out{a.sample_rate_hz, std::vector<std::int16_t>(a.samples.size())};
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    const std::int32_t s = static_cast<std::int32_t>(a.samples[i]) + b.samples[i];
    const std::int32_t mean = s >= 0 ? (s + 1) / 2 : -((-s + 1) / 2);
    out.samples[i] = detail::clamp16(mean);
  }
  return out;
}

// Mono view of a decoded file: the channel itself, or the mixdown of two.
inline Wave to_mono(std::vector<Wave> channels) {
  if (channels.size() == 1) return std::move(channels[0]);
  return mixdown(channels[0], channels[1]);
}

// Samples [floor(start * rate), floor(end * rate)).
inline Wave cut_span(const Wave& w, double start_s, double end_s) {
  if (!(start_s >= 0.0) || !(start_s < end_s) || end_s > w.duration_s() + 1e-9) {
    throw Error("span [" + std::to_string(start_s) + ", " + std::to_string(end_s) +
                ") outside wave of " + std::to_string(w.duration_s()) + " s");
  }
  const std::size_t b = detail::sample_index(start_s, w.sample_rate_hz);
  const std::size_t e = std::min(detail::sample_index(end_s, w.sample_rate_hz), w.samples.size());
  return Wave{w.sample_rate_hz, std::vector<std::int16_t>(w.samples.begin() + static_cast<std::ptrdiff_t>(b),
                                                          w.samples.begin() + static_cast<std::ptrdiff_t>(e))};
}

// Joins segments with round(gap_s * rate) zero samples between neighbours.
inline Wave concat(std::span<const Wave> segments, double gap_s = 0.0) {
  if (gap_s < 0.0) throw Error("gap must be non-negative");
  if (segments.empty()) return Wave{};
  const std::uint32_t rate = segments[0].sample_rate_hz;
  const auto gap = static_cast<std::size_t>(std::llround(gap_s * rate));
  std::size_t total = 0;
  for (const auto& s : segments) {
    if (s.sample_rate_hz != rate) throw Error("concat: mixed sample rates");
    total += s.samples.size();
  }
  Wave out{rate, {}};
  out.samples.reserve(total + gap * (segments.size() - 1));
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (i > 0) out.samples.insert(out.samples.end(), gap, 0);
    out.samples.insert(out.samples.end(), segments[i].samples.begin(), segments[i].samples.end());
  }
  return out;
}

}  // namespace saakit
