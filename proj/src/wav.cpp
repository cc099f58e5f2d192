#include "ipf/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace ipf {

namespace {

void put_u32(std::ofstream& out, uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u16(std::ofstream& out, uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  out.write(reinterpret_cast<const char*>(b), 2);
}

uint32_t get_u32(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t get_u16(const unsigned char* p) { return static_cast<uint16_t>(p[0] | (p[1] << 8)); }

}  // namespace

void write_wav16(const std::string& path, std::span<const double> samples, int sample_rate) {
  if (sample_rate <= 0) throw std::invalid_argument("write_wav16: bad sample rate");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw WavError("write_wav16: cannot open " + path);

  const uint32_t data_bytes = static_cast<uint32_t>(samples.size() * 2);
  out.write("RIFF", 4);
  put_u32(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<uint32_t>(sample_rate));
  put_u32(out, static_cast<uint32_t>(sample_rate * 2));
  put_u16(out, 2);
  put_u16(out, 16);
  out.write("data", 4);
  put_u32(out, data_bytes);
  for (double s : samples) {
    const double clamped = std::clamp(s, -1.0, 1.0);
    const int16_t q = static_cast<int16_t>(std::lround(clamped * 32767.0));
    put_u16(out, static_cast<uint16_t>(q));
  }
  if (!out) throw WavError("write_wav16: write failed on " + path);
}

WavData read_wav16(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WavError("read_wav16: cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw WavError("read_wav16: not a RIFF/WAVE file: " + path);

  int channels = 0;
  int rate = 0;
  int bits = 0;
  std::size_t data_off = 0;
  std::size_t data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const uint32_t chunk_len = get_u32(bytes.data() + pos + 4);
    if (std::memcmp(bytes.data() + pos, "fmt ", 4) == 0 && chunk_len >= 16) {
      const unsigned char* f = bytes.data() + pos + 8;
      if (get_u16(f) != 1) throw WavError("read_wav16: only PCM supported: " + path);
      channels = get_u16(f + 2);
      rate = static_cast<int>(get_u32(f + 4));
      bits = get_u16(f + 14);
    } else if (std::memcmp(bytes.data() + pos, "data", 4) == 0) {
      data_off = pos + 8;
      data_len = chunk_len;
    }
    pos += 8 + chunk_len + (chunk_len & 1);
  }
  if (channels < 1 || rate <= 0 || bits != 16 || data_off == 0)
    throw WavError("read_wav16: missing or unsupported fmt/data chunks: " + path);
  data_len = std::min(data_len, bytes.size() - data_off);

  const std::size_t frames = data_len / (2 * channels);
  WavData wav;
  wav.sample_rate = rate;
  wav.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double acc = 0.0;
    for (int c = 0; c < channels; ++c) {
      const unsigned char* p = bytes.data() + data_off + 2 * (i * channels + c);
      acc += static_cast<int16_t>(get_u16(p)) / 32767.0;
    }
    wav.samples[i] = acc / channels;
  }
  return wav;
}

}  // namespace ipf
