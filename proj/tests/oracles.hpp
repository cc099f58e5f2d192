#pragma once

// Independent reference implementations used as test oracles. These are
// deliberately plain loops written directly from the defining equations, with
// no code shared with the library.

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

namespace oracle {

inline constexpr double kCap = 1e6;

struct RefRun {
  std::vector<double> states;
  bool diverged = false;
};

// Direct transcription of the recursion: g+ = g - ln((g - sum beta_k e^{g-g_k-}) / alpha).
// Warm-up seeding: with k betas the first k steps use the simple form from g0.
inline RefRun ref_run(double alpha, const std::vector<double>& betas, double g0, int n_steps,
                      const std::vector<double>& explicit_states = {}) {
  RefRun out;
  const std::size_t k = betas.size();
  double cur;
  std::vector<double> past(k, 0.0);
  int remaining = n_steps;
  if (!explicit_states.empty()) {
    cur = explicit_states.at(0);
    for (std::size_t j = 0; j < k; ++j) past[j] = explicit_states.at(j + 1);
    out.states.push_back(cur);
  } else {
    cur = g0;
    out.states.push_back(cur);
    for (std::size_t i = 0; i < k && remaining > 0; ++i) {
      const double arg = cur / alpha;
      if (!(arg > 0.0)) {
        out.diverged = true;
        return out;
      }
      const double next = cur - std::log(arg);
      if (!std::isfinite(next) || std::abs(next) > kCap) {
        out.diverged = true;
        return out;
      }
      for (std::size_t j = k; j-- > 1;) past[j] = past[j - 1];
      if (k) past[0] = cur;
      cur = next;
      out.states.push_back(cur);
      --remaining;
    }
  }
  for (int i = 0; i < remaining; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += betas[j] * std::exp(cur - past[j]);
    const double arg = (cur - sum) / alpha;
    if (!(arg > 0.0)) {
      out.diverged = true;
      return out;
    }
    const double next = cur - std::log(arg);
    if (!std::isfinite(next) || std::abs(next) > kCap) {
      out.diverged = true;
      return out;
    }
    for (std::size_t j = k; j-- > 1;) past[j] = past[j - 1];
    if (k) past[0] = cur;
    cur = next;
    out.states.push_back(cur);
  }
  return out;
}

inline bool ref_close(double a, double b, double tol) {
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  return std::abs(a - b) <= tol * scale;
}

// Minimal period of the last `tail` states, or 0 when none <= p_max fits.
inline int ref_period(const std::vector<double>& states, int tail, double tol = 1e-6,
                      int p_max = 64) {
  const std::size_t n = states.size();
  std::vector<double> w(states.end() - std::min<std::size_t>(tail, n), states.end());
  for (int p = 1; p <= p_max && p < static_cast<int>(w.size()); ++p) {
    bool ok = true;
    for (std::size_t i = 0; i + p < w.size(); ++i) {
      if (!ref_close(w[i], w[i + p], tol)) {
        ok = false;
        break;
      }
    }
    if (ok) return p;
  }
  return 0;
}

// Period-2 interval (smaller/larger cycle value) via the reference recursion:
// nullopt unless the long run settles on a genuine 2-cycle.
inline std::optional<double> ref_interval_ratio(double alpha, const std::vector<double>& betas,
                                                double g0, int n_steps = 2500, int tail = 250) {
  RefRun run = ref_run(alpha, betas, g0, n_steps);
  if (run.diverged) return std::nullopt;
  if (ref_period(run.states, tail) != 2) return std::nullopt;
  const double a = run.states[run.states.size() - 2];
  const double b = run.states[run.states.size() - 1];
  if (!(a > 0.0) || !(b > 0.0)) return std::nullopt;
  return std::min(a, b) / std::max(a, b);
}

// ---- spectral measurement helpers ------------------------------------------

struct Peak {
  double freq = 0.0;
  double mag = 0.0;
};

// Local maxima above rel_floor * max(mags), frequency refined by parabolic
// interpolation around the winning bin.
inline std::vector<Peak> spectrum_peaks(const std::vector<double>& mags, double bin_hz,
                                        double rel_floor) {
  double top = 0.0;
  for (double m : mags) top = std::max(top, m);
  std::vector<Peak> peaks;
  if (top <= 0.0) return peaks;
  const double floor = rel_floor * top;
  for (std::size_t b = 2; b + 2 < mags.size(); ++b) {
    if (mags[b] < floor) continue;
    if (!(mags[b] >= mags[b - 1] && mags[b] > mags[b + 1])) continue;
    const double denom = mags[b - 1] - 2.0 * mags[b] + mags[b + 1];
    const double shift = denom != 0.0 ? 0.5 * (mags[b - 1] - mags[b + 1]) / denom : 0.0;
    peaks.push_back({(static_cast<double>(b) + shift) * bin_hz, mags[b]});
  }
  return peaks;
}

// Fundamentals by harmonic sieve: a peak qualifies when consecutive
// harmonics 1..min_harmonics all have peaks within rel_tol; candidates that
// are themselves integer multiples of an accepted fundamental are absorbed.
inline std::vector<double> sieve_fundamentals(const std::vector<Peak>& peaks, double rel_tol,
                                              int min_harmonics, double f_lo, double f_hi) {
  auto has_peak_near = [&](double f) {
    for (const Peak& p : peaks)
      if (std::abs(p.freq - f) <= rel_tol * f) return true;
    return false;
  };
  std::vector<double> fundamentals;
  std::vector<Peak> sorted = peaks;
  std::sort(sorted.begin(), sorted.end(), [](const Peak& a, const Peak& b) { return a.freq < b.freq; });
  for (const Peak& cand : sorted) {
    if (cand.freq < f_lo || cand.freq > f_hi) continue;
    bool harmonic_of_known = false;
    for (double f : fundamentals) {
      const double k = cand.freq / f;
      if (std::abs(k - std::round(k)) <= 2.0 * rel_tol * k) {
        harmonic_of_known = true;
        break;
      }
    }
    if (harmonic_of_known) continue;
    bool full_series = true;
    for (int k = 2; k <= min_harmonics; ++k)
      if (!has_peak_near(k * cand.freq)) {
        full_series = false;
        break;
      }
    if (full_series) fundamentals.push_back(cand.freq);
  }
  return fundamentals;
}

// Pitch-track count of one spectrogram frame (fundamentals in [f_lo, f_hi]).
inline int frame_track_count(const std::vector<double>& mags, double bin_hz, double f_lo,
                             double f_hi) {
  auto peaks = spectrum_peaks(mags, bin_hz, 0.05);
  return static_cast<int>(sieve_fundamentals(peaks, 0.03, 3, f_lo, f_hi).size());
}

// Per-frame pitch-track counts with persistence: a fundamental only counts
// when both neighbouring frames carry it too (within rel_tol), which drops
// the chance harmonic alignments of noisy frames.
inline std::vector<int> persistent_track_counts(const std::vector<std::vector<double>>& frames,
                                                double bin_hz, double f_lo, double f_hi,
                                                double rel_tol = 0.03) {
  std::vector<std::vector<double>> per_frame;
  per_frame.reserve(frames.size());
  for (const auto& mags : frames) {
    auto peaks = spectrum_peaks(mags, bin_hz, 0.05);
    per_frame.push_back(sieve_fundamentals(peaks, rel_tol, 3, f_lo, f_hi));
  }
  auto contains_near = [&](const std::vector<double>& set, double f) {
    for (double g : set)
      if (std::abs(g - f) <= rel_tol * f) return true;
    return false;
  };
  std::vector<int> counts(per_frame.size(), 0);
  for (std::size_t i = 0; i < per_frame.size(); ++i) {
    for (double f : per_frame[i]) {
      const bool prev_ok = i == 0 || contains_near(per_frame[i - 1], f);
      const bool next_ok = i + 1 == per_frame.size() || contains_near(per_frame[i + 1], f);
      if (prev_ok && next_ok) ++counts[i];
    }
  }
  return counts;
}

}  // namespace oracle
