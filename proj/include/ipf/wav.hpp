#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ipf {

struct WavError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct WavData {
  std::vector<double> samples;  // mono, in [-1, 1]
  int sample_rate = 44100;
};

// 16-bit PCM mono. Samples are clamped to [-1, 1] before quantization.
void write_wav16(const std::string& path, std::span<const double> samples, int sample_rate);

// Accepts 16-bit PCM; multi-channel input is averaged down to mono.
WavData read_wav16(const std::string& path);

}  // namespace ipf
