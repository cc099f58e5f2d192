#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "ipf/core.hpp"

// Period-concatenation synthesis. One recursion step spans one nominal
// fundamental period, so audio is rendered by appending one copy of a
// single-cycle waveform per step, stretched to
//
//   T = (1 / f0) * (g / g~)
//
// and scaled in amplitude by g~ and by the momentary input strength alpha.
// Layer 1 takes g~ = g (constant pitch f0), layer 2 takes g~ = g_-, layer 3
// g~ = g_2-, and so on; a bifurcated state then sounds as two pitches.

namespace ipf {

struct RenderError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AlphaSeries {
  std::vector<double> values;   // one alpha per recursion step
  double alpha_min_used = 0.0;  // numeric survival boundary the minimum maps to
  double alpha_target = 0.0;    // plateau level
};

// Affine rescale of an amplitude envelope into an alpha series: the envelope
// minimum lands on the numeric alpha_min of `params`, the plateau (mean of
// the final quarter) on target_alpha. A flat envelope cannot be scaled.
AlphaSeries envelope_to_alpha(std::span<const double> envelope, const IpfParams& params,
                              double target_alpha);

// Synthetic stand-in for a recorded attack: linear rise over the attack
// fraction, then a unit plateau.
std::vector<double> attack_plateau_envelope(int n_steps, double attack_fraction = 0.25);

struct ScoreStep {
  double alpha = 0.0;
  double g = 0.0;
  std::vector<double> past;  // most recent first, one entry per beta
};

struct SynthScore {
  std::vector<ScoreStep> steps;
  double f0 = 165.0;
  int sample_rate = 44100;
  bool diverged = false;  // score was truncated by divergence
  std::optional<std::size_t> diverged_step;

  int max_layers() const {
    return steps.empty() ? 1 : 1 + static_cast<int>(steps.front().past.size());
  }
};

// Runs the recursion with a time-varying alpha. With k betas the first k
// series entries drive the warm-up, so steps.size() == values.size() - k.
// Divergence at the first playable step throws; later divergence truncates
// the score and sets the flag.
SynthScore run_score(const AlphaSeries& alphas, const IpfParams& params, double f0 = 165.0,
                     int sample_rate = 44100);

struct WaveformPeriod {
  std::vector<double> samples;  // one cycle at the reference pitch, peak <= 1
  double f0 = 165.0;
  enum class Source { Gaussian, Sampled } source = Source::Gaussian;
};

// One cycle holding a centred Gaussian pulse, sigma = 1/(10 f0), mean
// subtracted so a period integrates to ~0, peak normalized to 1.
WaveformPeriod gaussian_period(double f0, int sample_rate);

// Wraps an arbitrary single-cycle waveform; rescales to peak 1 if needed.
WaveformPeriod period_from_samples(std::vector<double> samples, double f0);

struct RenderOptions {
  bool normalize = true;
  double peak_target = 0.9;
};

struct RenderResult {
  std::vector<double> samples;
  int sample_rate = 44100;
  double pre_normalize_peak = 0.0;
  double pre_normalize_rms = 0.0;
  std::vector<std::vector<double>> period_seconds;  // [layer][step]
};

// Each layer is its own concatenation stream (periods appended back to back,
// linear-interpolation resampling, round-off carried so long renders do not
// drift); streams are summed on a shared timeline and peak-normalized.
// A non-positive or non-finite g~ in the score is a RenderError.
RenderResult render(const SynthScore& score, const WaveformPeriod& period, int layers,
                    const RenderOptions& options = {});

struct Spectrogram {
  int window = 1024;
  int hop = 256;
  int sample_rate = 44100;
  std::vector<std::vector<double>> frames;  // [frame][bin], window/2 + 1 bins

  double time_of(std::size_t frame) const {
    return (frame * static_cast<double>(hop) + window / 2.0) / sample_rate;
  }
  double freq_of(std::size_t bin) const {
    return bin * static_cast<double>(sample_rate) / window;
  }
};

// Hann-windowed short-time magnitude spectrum. window_size must be a power
// of two >= 64 and the audio at least one window long.
Spectrogram spectrogram(std::span<const double> audio, int window_size, int hop,
                        int sample_rate);

// RMS over consecutive windows of window_ms, then a single-pole low-pass with
// a 20 ms time constant. Turns any recording into an alpha driver.
std::vector<double> extract_envelope(std::span<const double> audio, int sample_rate,
                                     double window_ms);

void write_spectrogram_csv(const Spectrogram& spec, std::ostream& out);

// `step,alpha,g,g_minus,g_2minus,period_s_layer1..N`
void write_score_csv(const SynthScore& score, const RenderResult& rendered, std::ostream& out);

}  // namespace ipf
