#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

// Impulse pattern formulation (IPF): a musical instrument is modelled as a
// generator exchanging exponentially damped impulses with reflection points.
// The dimensionless system state g evolves once per fundamental period via
//
//   simple form    g+ = g - ln(g / alpha)
//   general form   g+ = g - ln( (g - sum_k beta_k * exp(g - g_{k-})) / alpha )
//
// where alpha is the strength of the primary back-travelling impulse (the
// blowing-pressure analog) and beta_k the strength of the k-th additional
// reflection point, acting with delay k.

namespace ipf {

inline constexpr double kDivergenceCap = 1e6;  // |g| beyond this is runaway growth
inline constexpr int kOrbitSteps = 2500;       // long-run protocol: iterate 2500 steps,
inline constexpr int kOrbitTail = 250;         // inspect the last 250 states
inline constexpr double kRegimeTol = 1e-6;     // relative tolerance for state comparison
inline constexpr int kMaxPeriod = 64;

struct SearchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IpfParams {
  double alpha = 1.0;          // input strength, > 0
  std::vector<double> betas{}; // reflection strengths beta_1..beta_n, each >= 0
  double g0 = 0.5;             // seed system state, > 0

  void validate() const;  // throws std::invalid_argument
  double beta_sum() const;

  // Energy constraint alpha >= sum(beta_k) violated. Advisory only: the map
  // stays well defined, bifurcation behaviour merely leaves the regime the
  // constraint was derived for.
  bool energy_warning() const;
  // Reflection cascade alpha > beta_1 > beta_2 > ... violated. Advisory only;
  // multiphonic production in fact requires violating it.
  bool cascade_warning() const;
};

// Fixed point g_s = alpha + sum(beta_k); the map returns g_s exactly when the
// whole history sits at g_s.
double fixed_point(const IpfParams& params);

struct StateHistory {
  double current = 0.0;
  std::vector<double> past{};  // most recent first: past[0] = g_-, past[1] = g_2-, ...

  void push(double next);  // shift current into past, adopt next
};

// One application of the simple form. Throws std::domain_error unless
// g > 0 and alpha > 0.
double step_simple(double g, double alpha);

// One application of the general form. A non-positive log argument means the
// state would turn complex: that is the modelled divergence, reported as
// nullopt rather than an exception. history.past must have one entry per beta.
std::optional<double> step_general(const StateHistory& history, const IpfParams& params);

// Initial-condition policy for runs of the general form.
//
// Warm-up (default): the past states are produced by running k simple-form
// steps from g0; the recursion then continues in general form, so the whole
// run consumes n_steps map applications total.
//
// Explicit: states = {g0, g_-, g_2-, ...} (current first, then progressively
// older), sized 1 + betas.size(). No warm-up steps are consumed.
struct Seeding {
  std::vector<double> states{};

  static Seeding warmup() { return {}; }
  static Seeding explicit_states(std::vector<double> s) { return {std::move(s)}; }
  bool is_warmup() const { return states.empty(); }
};

struct Trajectory {
  std::vector<double> states;  // g_0 .. g_N; never extends past a divergence
  std::optional<std::size_t> diverged_at;  // index of the last recorded state
  IpfParams params;

  bool diverged() const { return diverged_at.has_value(); }
};

Trajectory iterate(const IpfParams& params, int n_steps);
Trajectory iterate(const IpfParams& params, int n_steps, const Seeding& seeding);

// Same recursion, but only the last `tail` states are kept. Grid sweeps use
// this to avoid storing full trajectories. Arithmetic is shared with
// iterate(), so results agree bit for bit.
struct TailRun {
  std::vector<double> tail;  // oldest first; empty when diverged
  bool diverged = false;
};
TailRun iterate_tail(const IpfParams& params, int n_steps, int tail,
                     const Seeding& seeding = {});

enum class RegimeKind { FixedPoint, Periodic, Chaotic, Divergent };

struct RegimeReport {
  RegimeKind kind = RegimeKind::Divergent;
  std::optional<int> period;         // 1 for fixed point, p >= 2 for cycles
  std::vector<double> limit_values;  // ascending, distinct beyond tol; empty otherwise
};

// Minimal-period detection over the last `tail` states: the smallest p with
// g_i == g_{i+p} (within tol, relative with an absolute floor of 1) across the
// whole window. Bounded tails with no p <= kMaxPeriod are chaotic.
RegimeReport classify_regime(const Trajectory& trajectory, int tail = kOrbitTail,
                             double tol = kRegimeTol);
RegimeReport classify_tail(std::span<const double> tail, bool diverged,
                           double tol = kRegimeTol);

// Merge near-identical values (single-linkage on the sorted sequence) and
// return one representative per cluster, ascending.
std::vector<double> cluster_values(std::span<const double> values, double tol);

int distinct_count(std::span<const double> values, double tol);

bool nearly_equal(double a, double b, double tol);

struct AlphaMinOptions {
  double bracket_lo = 1e-6;
  double bracket_hi = 10.0;
  double scan_step = 0.002;  // ascending pre-scan; divergence need not be monotone
                             // in alpha once betas are present
  int probe_steps = kOrbitSteps;
  double tol = 1e-7;
};

// Smallest alpha whose orbit survives the probe horizon. Pre-scan ascending,
// then bisect the bracketing step. Throws SearchError when nothing in
// [bracket_lo, bracket_hi] survives.
double alpha_min(const std::vector<double>& betas, double g0,
                 const AlphaMinOptions& options = {});
double alpha_min(const std::vector<double>& betas, const Seeding& seeding,
                 const AlphaMinOptions& options = {});

struct BifurcationOptions {
  double scan_hi = 0.95;
  double scan_lo = 0.05;
  double scan_step = 0.02;
  double bisect_tol = 2e-5;
  // Long horizon: near the critical point the fixed point is approached at
  // rate ~(1 - c|alpha - alpha_c|), so short runs misclassify the boundary.
  int probe_steps = 200000;
  int tail = kOrbitTail;
  double tol = kRegimeTol;
  std::optional<double> g0{};  // default: 0.9 * fixed_point per probe
  // With betas present the fixed point can lose stability straight into
  // divergence instead of a 2-cycle; set false to accept any handover and
  // return the bare stability boundary.
  bool require_period2 = true;
};

// Boundary where the stable fixed point ends as alpha descends, located by a
// scan plus bisection on the classification. By default the regime below the
// boundary must be period-2 (the first bifurcation point). Throws SearchError
// when the scan range shows no such transition.
double first_bifurcation_alpha(const std::vector<double>& betas,
                               const BifurcationOptions& options = {});

}  // namespace ipf
