#include "ipf/synth.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <ostream>

#include "ipf/csvio.hpp"

namespace ipf {

AlphaSeries envelope_to_alpha(std::span<const double> envelope, const IpfParams& params,
                              double target_alpha) {
  if (envelope.empty()) throw std::invalid_argument("envelope_to_alpha: empty envelope");
  for (double v : envelope)
    if (!(v >= 0.0) || !std::isfinite(v))
      throw std::invalid_argument("envelope_to_alpha: envelope must be non-negative and finite");

  const double lo = *std::min_element(envelope.begin(), envelope.end());
  const std::size_t quarter = std::max<std::size_t>(1, envelope.size() / 4);
  const double plateau =
      std::accumulate(envelope.end() - quarter, envelope.end(), 0.0) / quarter;
  if (!(plateau > lo))
    throw std::invalid_argument("envelope_to_alpha: flat envelope cannot be scaled");

  const double a_min = alpha_min(params.betas, params.g0);
  if (!(target_alpha >= a_min))
    throw std::invalid_argument("envelope_to_alpha: target alpha below the survival boundary");

  AlphaSeries series;
  series.alpha_min_used = a_min;
  series.alpha_target = target_alpha;
  const double gain = (target_alpha - a_min) / (plateau - lo);
  series.values.reserve(envelope.size());
  for (double v : envelope) series.values.push_back(a_min + (v - lo) * gain);
  return series;
}

std::vector<double> attack_plateau_envelope(int n_steps, double attack_fraction) {
  if (n_steps < 2) throw std::invalid_argument("attack_plateau_envelope: need >= 2 steps");
  if (!(attack_fraction > 0.0) || attack_fraction > 0.75)
    throw std::invalid_argument("attack_plateau_envelope: attack fraction in (0, 0.75]");
  std::vector<double> env(n_steps);
  const double rise = attack_fraction * n_steps;
  for (int i = 0; i < n_steps; ++i) env[i] = std::min(1.0, i / rise);
  return env;
}

SynthScore run_score(const AlphaSeries& alphas, const IpfParams& params, double f0,
                     int sample_rate) {
  params.validate();
  if (!(f0 > 0.0)) throw std::invalid_argument("run_score: f0 must be positive");
  if (sample_rate < 8000) throw std::invalid_argument("run_score: sample rate >= 8000 required");
  const std::size_t k = params.betas.size();
  if (alphas.values.size() <= k)
    throw std::invalid_argument("run_score: alpha series shorter than the warm-up");

  SynthScore score;
  score.f0 = f0;
  score.sample_rate = sample_rate;
  score.steps.reserve(alphas.values.size() - k);

  StateHistory h;
  h.current = params.g0;
  h.past.assign(k, 0.0);
  // warm-up consumes the first k alphas on the simple form
  for (std::size_t i = 0; i < k; ++i) {
    const double alpha = alphas.values[i];
    const double arg = h.current / alpha;
    if (!(arg > 0.0)) throw RenderError("run_score: divergence during warm-up");
    const double next = h.current - std::log(arg);
    if (!std::isfinite(next) || std::abs(next) > kDivergenceCap)
      throw RenderError("run_score: divergence during warm-up");
    h.push(next);
  }

  IpfParams step_params = params;
  for (std::size_t i = k; i < alphas.values.size(); ++i) {
    step_params.alpha = alphas.values[i];
    const std::optional<double> next = step_general(h, step_params);
    if (!next) {
      if (score.steps.empty()) throw RenderError("run_score: divergence at the first step");
      score.diverged = true;
      score.diverged_step = score.steps.size();
      break;
    }
    ScoreStep record;
    record.alpha = step_params.alpha;
    // the new state's predecessors, most recent first; the warm-up leaves one
    // more known state than there are betas
    record.past.reserve(k + 1);
    record.past.push_back(h.current);
    record.past.insert(record.past.end(), h.past.begin(), h.past.end());
    h.push(*next);
    record.g = h.current;
    score.steps.push_back(std::move(record));
  }
  return score;
}

WaveformPeriod gaussian_period(double f0, int sample_rate) {
  if (!(f0 > 0.0) || sample_rate < 8000)
    throw std::invalid_argument("gaussian_period: need f0 > 0 and rate >= 8000");
  const int n = std::max(8, static_cast<int>(std::lround(sample_rate / f0)));
  WaveformPeriod period;
  period.f0 = f0;
  period.source = WaveformPeriod::Source::Gaussian;
  period.samples.resize(n);
  const double centre = 0.5 * n;
  const double sigma = sample_rate / (10.0 * f0);
  for (int i = 0; i < n; ++i) {
    const double d = (i - centre) / sigma;
    period.samples[i] = std::exp(-0.5 * d * d);
  }
  const double mean = std::accumulate(period.samples.begin(), period.samples.end(), 0.0) / n;
  double peak = 0.0;
  for (double& s : period.samples) {
    s -= mean;
    peak = std::max(peak, std::abs(s));
  }
  for (double& s : period.samples) s /= peak;
  return period;
}

WaveformPeriod period_from_samples(std::vector<double> samples, double f0) {
  if (samples.empty()) throw std::invalid_argument("period_from_samples: empty period");
  if (!(f0 > 0.0)) throw std::invalid_argument("period_from_samples: f0 must be positive");
  double peak = 0.0;
  for (double s : samples) {
    if (!std::isfinite(s)) throw std::invalid_argument("period_from_samples: non-finite sample");
    peak = std::max(peak, std::abs(s));
  }
  if (peak > 1.0)
    for (double& s : samples) s /= peak;
  WaveformPeriod period;
  period.samples = std::move(samples);
  period.f0 = f0;
  period.source = WaveformPeriod::Source::Sampled;
  return period;
}

RenderResult render(const SynthScore& score, const WaveformPeriod& period, int layers,
                    const RenderOptions& options) {
  if (layers < 1) throw std::invalid_argument("render: need at least one layer");
  if (layers > score.max_layers())
    throw std::invalid_argument("render: more layers than recorded history depth");
  if (period.samples.empty()) throw std::invalid_argument("render: empty waveform period");
  if (score.sample_rate < 8000) throw std::invalid_argument("render: sample rate >= 8000");

  RenderResult out;
  out.sample_rate = score.sample_rate;
  out.period_seconds.assign(layers, {});

  const std::size_t wave_n = period.samples.size();
  std::vector<std::vector<double>> streams(layers);
  for (int layer = 0; layer < layers; ++layer) {
    auto& stream = streams[layer];
    auto& durations = out.period_seconds[layer];
    durations.reserve(score.steps.size());
    double ideal_samples = 0.0;
    std::size_t emitted = 0;
    for (std::size_t i = 0; i < score.steps.size(); ++i) {
      const ScoreStep& step = score.steps[i];
      const double ref = layer == 0 ? step.g : step.past[layer - 1];
      if (!(ref > 0.0) || !std::isfinite(ref) || !(step.g > 0.0) || !std::isfinite(step.g))
        throw RenderError("render: non-positive system state at step " + std::to_string(i));
      const double duration = (1.0 / score.f0) * (step.g / ref);
      durations.push_back(duration);
      const double amp = ref * step.alpha;
      ideal_samples += duration * score.sample_rate;
      // carry rounding error across periods so total length never drifts
      const auto want = static_cast<std::size_t>(std::llround(ideal_samples));
      const std::size_t n = want > emitted ? want - emitted : 0;
      for (std::size_t j = 0; j < n; ++j) {
        const double pos = static_cast<double>(j) * wave_n / n;
        const std::size_t i0 = static_cast<std::size_t>(pos);
        const double frac = pos - i0;
        const double a = period.samples[i0];
        const double b = period.samples[(i0 + 1) % wave_n];
        stream.push_back(amp * (a + frac * (b - a)));
      }
      emitted += n;
    }
  }

  std::size_t total = 0;
  for (const auto& s : streams) total = std::max(total, s.size());
  out.samples.assign(total, 0.0);
  for (const auto& s : streams)
    for (std::size_t i = 0; i < s.size(); ++i) out.samples[i] += s[i];

  double peak = 0.0;
  double energy = 0.0;
  for (double s : out.samples) {
    peak = std::max(peak, std::abs(s));
    energy += s * s;
  }
  out.pre_normalize_peak = peak;
  out.pre_normalize_rms = total ? std::sqrt(energy / total) : 0.0;
  if (options.normalize && peak > 0.0) {
    const double gain = options.peak_target / peak;
    for (double& s : out.samples) s *= gain;
  }
  return out;
}

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 FFT, enough for magnitude spectra.
void fft_inplace(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * M_PI / static_cast<double>(len);
    const std::complex<double> wn(std::cos(angle), std::sin(angle));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const std::complex<double> u = a[i + j];
        const std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wn;
      }
    }
  }
}

}  // namespace

Spectrogram spectrogram(std::span<const double> audio, int window_size, int hop,
                        int sample_rate) {
  if (!is_pow2(window_size) || window_size < 64)
    throw std::invalid_argument("spectrogram: window must be a power of two >= 64");
  if (hop < 1) throw std::invalid_argument("spectrogram: hop must be >= 1");
  if (audio.size() < static_cast<std::size_t>(window_size))
    throw std::invalid_argument("spectrogram: audio shorter than one window");

  Spectrogram spec;
  spec.window = window_size;
  spec.hop = hop;
  spec.sample_rate = sample_rate;
  std::vector<double> hann(window_size);
  for (int i = 0; i < window_size; ++i)
    hann[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / (window_size - 1));

  std::vector<std::complex<double>> buf(window_size);
  for (std::size_t off = 0; off + window_size <= audio.size();
       off += static_cast<std::size_t>(hop)) {
    for (int i = 0; i < window_size; ++i) buf[i] = audio[off + i] * hann[i];
    fft_inplace(buf);
    std::vector<double> mags(window_size / 2 + 1);
    for (std::size_t b = 0; b < mags.size(); ++b) mags[b] = std::abs(buf[b]);
    spec.frames.push_back(std::move(mags));
  }
  return spec;
}

std::vector<double> extract_envelope(std::span<const double> audio, int sample_rate,
                                     double window_ms) {
  if (!(window_ms > 0.0)) throw std::invalid_argument("extract_envelope: window must be > 0 ms");
  if (sample_rate <= 0) throw std::invalid_argument("extract_envelope: bad sample rate");
  const std::size_t w =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(window_ms * sample_rate / 1000.0)));
  std::vector<double> env;
  env.reserve(audio.size() / w + 1);
  for (std::size_t off = 0; off < audio.size(); off += w) {
    const std::size_t n = std::min(w, audio.size() - off);
    double energy = 0.0;
    for (std::size_t i = 0; i < n; ++i) energy += audio[off + i] * audio[off + i];
    env.push_back(std::sqrt(energy / n));
  }
  // single-pole smoothing, 20 ms time constant
  const double dt = static_cast<double>(w) / sample_rate;
  const double a = std::exp(-dt / 0.020);
  for (std::size_t i = 1; i < env.size(); ++i) env[i] = a * env[i - 1] + (1.0 - a) * env[i];
  return env;
}

void write_spectrogram_csv(const Spectrogram& spec, std::ostream& out) {
  out << "time_s,freq_hz,magnitude\n";
  for (std::size_t f = 0; f < spec.frames.size(); ++f) {
    const double t = spec.time_of(f);
    for (std::size_t b = 0; b < spec.frames[f].size(); ++b)
      out << csv_double(t) << ',' << csv_double(spec.freq_of(b)) << ','
          << csv_double(spec.frames[f][b]) << '\n';
  }
}

void write_score_csv(const SynthScore& score, const RenderResult& rendered, std::ostream& out) {
  out << "step,alpha,g,g_minus,g_2minus";
  for (std::size_t layer = 1; layer <= rendered.period_seconds.size(); ++layer)
    out << ",period_s_layer" << layer;
  out << '\n';
  for (std::size_t i = 0; i < score.steps.size(); ++i) {
    const ScoreStep& step = score.steps[i];
    out << i << ',' << csv_double(step.alpha) << ',' << csv_double(step.g) << ',';
    if (!step.past.empty()) out << csv_double(step.past[0]);
    out << ',';
    if (step.past.size() > 1) out << csv_double(step.past[1]);
    for (const auto& layer : rendered.period_seconds) {
      out << ',';
      if (i < layer.size()) out << csv_double(layer[i]);
    }
    out << '\n';
  }
}

}  // namespace ipf
