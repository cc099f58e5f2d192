#include "ipf/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ipf {

void IpfParams::validate() const {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw std::invalid_argument("IpfParams: alpha must be positive and finite");
  for (double b : betas)
    if (!(b >= 0.0) || !std::isfinite(b))
      throw std::invalid_argument("IpfParams: every beta must be >= 0 and finite");
  if (!(g0 > 0.0) || !std::isfinite(g0))
    throw std::invalid_argument("IpfParams: g0 must be positive and finite");
}

double IpfParams::beta_sum() const {
  double s = 0.0;
  for (double b : betas) s += b;
  return s;
}

bool IpfParams::energy_warning() const { return alpha < beta_sum(); }

bool IpfParams::cascade_warning() const {
  if (betas.empty()) return false;
  if (betas.front() >= alpha) return true;
  for (std::size_t k = 1; k < betas.size(); ++k)
    if (betas[k] >= betas[k - 1]) return true;
  return false;
}

double fixed_point(const IpfParams& params) { return params.alpha + params.beta_sum(); }

void StateHistory::push(double next) {
  for (std::size_t j = past.size(); j-- > 1;) past[j] = past[j - 1];
  if (!past.empty()) past[0] = current;
  current = next;
}

double step_simple(double g, double alpha) {
  if (!(g > 0.0)) throw std::domain_error("step_simple: g must be positive");
  if (!(alpha > 0.0)) throw std::domain_error("step_simple: alpha must be positive");
  return g - std::log(g / alpha);
}

std::optional<double> step_general(const StateHistory& history, const IpfParams& params) {
  if (history.past.size() != params.betas.size())
    throw std::invalid_argument("step_general: history depth must match beta count");
  double sum = 0.0;
  for (std::size_t k = 0; k < params.betas.size(); ++k) {
    const double b = params.betas[k];
    if (b != 0.0) sum += b * std::exp(history.current - history.past[k]);
  }
  const double arg = (history.current - sum) / params.alpha;
  if (!(arg > 0.0)) return std::nullopt;  // state would turn complex
  const double next = history.current - std::log(arg);
  if (!std::isfinite(next) || std::abs(next) > kDivergenceCap) return std::nullopt;
  return next;
}

namespace {

// Shared recursion driver. sink(g) receives the seed state and every accepted
// state; returns the index of the last accepted state when divergence cut the
// run short. All iterate variants route through here so their arithmetic is
// identical.
template <typename Sink>
std::optional<std::size_t> run_recursion(const IpfParams& params, const Seeding& seeding,
                                         int n_steps, Sink&& sink) {
  params.validate();
  if (n_steps < 1) throw std::invalid_argument("iterate: n_steps must be >= 1");

  const std::size_t k = params.betas.size();
  const double alpha = params.alpha;
  StateHistory h;
  h.past.assign(k, 0.0);
  std::size_t emitted = 0;
  int remaining = n_steps;

  if (seeding.is_warmup()) {
    h.current = params.g0;
    sink(h.current);
    ++emitted;
    const int warm = static_cast<int>(std::min<std::size_t>(k, remaining));
    for (int i = 0; i < warm; ++i) {
      const double arg = h.current / alpha;
      if (!(arg > 0.0)) return emitted - 1;
      const double next = h.current - std::log(arg);
      if (!std::isfinite(next) || std::abs(next) > kDivergenceCap) return emitted - 1;
      h.push(next);
      sink(h.current);
      ++emitted;
      --remaining;
    }
  } else {
    if (seeding.states.size() != k + 1)
      throw std::invalid_argument("Seeding: expected 1 + beta-count explicit states");
    h.current = seeding.states[0];
    if (!(h.current > 0.0) || !std::isfinite(h.current))
      throw std::invalid_argument("Seeding: current state must be positive and finite");
    for (std::size_t j = 0; j < k; ++j) {
      const double s = seeding.states[j + 1];
      if (!std::isfinite(s)) throw std::invalid_argument("Seeding: past states must be finite");
      h.past[j] = s;
    }
    sink(h.current);
    ++emitted;
  }

  const double* betas = params.betas.data();
  for (int i = 0; i < remaining; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const double b = betas[j];
      if (b != 0.0) sum += b * std::exp(h.current - h.past[j]);
    }
    const double arg = (h.current - sum) / alpha;
    if (!(arg > 0.0)) return emitted - 1;
    const double next = h.current - std::log(arg);
    if (!std::isfinite(next) || std::abs(next) > kDivergenceCap) return emitted - 1;
    h.push(next);
    sink(h.current);
    ++emitted;
  }
  return std::nullopt;
}

}  // namespace

Trajectory iterate(const IpfParams& params, int n_steps) {
  return iterate(params, n_steps, Seeding::warmup());
}

Trajectory iterate(const IpfParams& params, int n_steps, const Seeding& seeding) {
  Trajectory t;
  t.params = params;
  t.states.reserve(static_cast<std::size_t>(n_steps) + 1);
  t.diverged_at =
      run_recursion(params, seeding, n_steps, [&](double g) { t.states.push_back(g); });
  return t;
}

TailRun iterate_tail(const IpfParams& params, int n_steps, int tail, const Seeding& seeding) {
  if (tail < 1) throw std::invalid_argument("iterate_tail: tail must be >= 1");
  const std::size_t t = static_cast<std::size_t>(tail);
  std::vector<double> ring(t);
  std::size_t count = 0;
  auto diverged = run_recursion(params, seeding, n_steps, [&](double g) {
    ring[count % t] = g;
    ++count;
  });
  TailRun run;
  if (diverged.has_value()) {
    run.diverged = true;
    return run;
  }
  const std::size_t have = std::min(count, t);
  run.tail.resize(have);
  for (std::size_t i = 0; i < have; ++i) run.tail[i] = ring[(count - have + i) % t];
  return run;
}

bool nearly_equal(double a, double b, double tol) {
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  return std::abs(a - b) <= tol * scale;
}

std::vector<double> cluster_values(std::span<const double> values, double tol) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> reps;
  for (double v : sorted) {
    if (reps.empty() || !nearly_equal(reps.back(), v, tol)) reps.push_back(v);
  }
  return reps;
}

int distinct_count(std::span<const double> values, double tol) {
  return static_cast<int>(cluster_values(values, tol).size());
}

RegimeReport classify_tail(std::span<const double> tail, bool diverged, double tol) {
  RegimeReport report;
  if (diverged) {
    report.kind = RegimeKind::Divergent;
    return report;
  }
  if (tail.empty()) throw std::invalid_argument("classify_tail: empty tail");
  const std::size_t n = tail.size();
  const int p_max = static_cast<int>(std::min<std::size_t>(kMaxPeriod, n - 1));
  for (int p = 1; p <= p_max; ++p) {
    bool ok = true;
    for (std::size_t i = 0; i + p < n; ++i) {
      if (!nearly_equal(tail[i], tail[i + p], tol)) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    report.period = p;
    report.limit_values = cluster_values(tail.subspan(n - p), tol);
    report.kind = (p == 1) ? RegimeKind::FixedPoint : RegimeKind::Periodic;
    return report;
  }
  report.kind = RegimeKind::Chaotic;
  return report;
}

RegimeReport classify_regime(const Trajectory& trajectory, int tail, double tol) {
  if (tail < 1) throw std::invalid_argument("classify_regime: tail must be >= 1");
  if (trajectory.diverged()) return classify_tail({}, true, tol);
  const std::size_t n = trajectory.states.size();
  if (n < static_cast<std::size_t>(tail))
    throw std::invalid_argument("classify_regime: tail exceeds recorded states");
  return classify_tail(
      std::span<const double>(trajectory.states).subspan(n - static_cast<std::size_t>(tail)),
      false, tol);
}

namespace {

double alpha_min_search(const std::vector<double>& betas, const Seeding& seeding, double g0,
                        const AlphaMinOptions& options) {
  auto ok = [&](double a) {
    IpfParams p;
    p.alpha = a;
    p.betas = betas;
    p.g0 = g0;
    return !iterate_tail(p, options.probe_steps, 1, seeding).diverged;
  };

  if (ok(options.bracket_lo)) return options.bracket_lo;
  double lo = options.bracket_lo;
  double hi = std::numeric_limits<double>::quiet_NaN();
  for (double a = options.bracket_lo + options.scan_step; a <= options.bracket_hi;
       a += options.scan_step) {
    if (ok(a)) {
      hi = a;
      break;
    }
    lo = a;
  }
  if (!std::isfinite(hi)) throw SearchError("alpha_min: no surviving alpha within bracket");
  while (hi - lo > options.tol) {
    const double mid = 0.5 * (lo + hi);
    if (ok(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

}  // namespace

double alpha_min(const std::vector<double>& betas, const Seeding& seeding,
                 const AlphaMinOptions& options) {
  const double g0 = seeding.is_warmup() ? 1.0 : seeding.states.front();
  return alpha_min_search(betas, seeding, g0, options);
}

double alpha_min(const std::vector<double>& betas, double g0, const AlphaMinOptions& options) {
  if (!(g0 > 0.0)) throw std::invalid_argument("alpha_min: g0 must be positive");
  return alpha_min_search(betas, Seeding::warmup(), g0, options);
}

double first_bifurcation_alpha(const std::vector<double>& betas,
                               const BifurcationOptions& options) {
  auto classify_at = [&](double alpha) {
    IpfParams p;
    p.alpha = alpha;
    p.betas = betas;
    p.g0 = options.g0.value_or(0.9 * fixed_point(p));
    TailRun run = iterate_tail(p, options.probe_steps, options.tail);
    return classify_tail(run.tail, run.diverged, options.tol);
  };
  auto is_fp = [&](double alpha) { return classify_at(alpha).kind == RegimeKind::FixedPoint; };

  if (!is_fp(options.scan_hi))
    throw SearchError("first_bifurcation_alpha: no fixed point at top of scan range");
  double hi = options.scan_hi;
  double lo = std::numeric_limits<double>::quiet_NaN();
  for (double a = options.scan_hi - options.scan_step; a >= options.scan_lo;
       a -= options.scan_step) {
    if (!is_fp(a)) {
      lo = a;
      break;
    }
    hi = a;
  }
  if (!std::isfinite(lo))
    throw SearchError("first_bifurcation_alpha: no transition within scan range");
  if (options.require_period2) {
    const RegimeReport below = classify_at(lo);
    if (!(below.kind == RegimeKind::Periodic && below.period == 2))
      throw SearchError("first_bifurcation_alpha: fixed point does not hand over to period-2");
  }
  while (hi - lo > options.bisect_tol) {
    const double mid = 0.5 * (lo + hi);
    if (is_fp(mid))
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace ipf
