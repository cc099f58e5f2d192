#pragma once

#include <iosfwd>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "ipf/core.hpp"

// Parameter-space search for two-pitch multiphonics on the two-reflection
// instrument (betas = {beta1, beta2}). A period-2 orbit sounds as two pitches
// whose audible interval is the ratio of the alternating states, folded into
// ]0,1]. Over a (beta1, beta2) grid we record which intervals are producible,
// how reliably (fraction of initial values that reproduce them), and how
// robustly (inverse sensitivity of the interval to the input strength).

namespace ipf {

struct Interval {
  double ratio = 1.0;      // in ]0,1]
  double semitones = 0.0;  // 12 * log2(1/ratio)
};

Interval interval_from_ratio(double ratio);  // folds r and 1/r to the same interval
Interval interval_from_semitones(double semitones);

// Audible interval of a classified regime: period-2 gives the folded ratio of
// its two limit values, a fixed point gives the unit interval, everything
// else (chaos, divergence, higher periods) none.
std::optional<Interval> extract_interval(const RegimeReport& report);

struct MapProtocol {
  int alpha_steps = 200;  // evenly spaced alpha in (alpha_lo, alpha_hi]
  double alpha_lo = 0.0;
  double alpha_hi = 1.0;
  int n_steps = kOrbitSteps;
  int tail = kOrbitTail;
  double tol = kRegimeTol;
  int reliability_seeds = 150;  // g0 evenly spaced in (0, seed_max]
  double seed_max = 5.0;
  double tol_semitones = 0.25;  // target-match half width
  double fd_step = 1e-3;        // finite-difference step in alpha
  double derivative_floor = 1e-6;
  double g0 = 0.5;  // base seed for alpha scans (warm-up seeding rule)
  // The coarse alpha grid cannot resolve narrow interval windows (small
  // intervals live in a sliver below the cell's bifurcation point), so the
  // best grid candidate is polished by a golden-section search between its
  // neighbouring grid points.
  bool refine = true;
  int refine_iters = 48;
  int jobs = 1;
};

enum class CellKind {
  NoTone,      // every alpha diverges
  StableOnly,  // bounded regimes exist but no two-pitch interval
  Multiphonic  // some alpha sustains a period-2 interval
};

struct MapCell {
  CellKind kind = CellKind::NoTone;
  std::optional<Interval> interval;  // max interval, or the matched one in target maps
  double alpha = 0.0;                // alpha producing `interval`
  double reliability = 0.0;
  double derivative = std::numeric_limits<double>::infinity();
  double likelihood = 0.0;  // normalized to max 1 over the map
};

struct LikelihoodMap {
  std::vector<double> beta1_axis;
  std::vector<double> beta2_axis;
  std::vector<MapCell> cells;  // row-major: [i1 * beta2_axis.size() + i2]
  std::optional<Interval> target;
  std::vector<double> alpha_grid;
  bool all_zero = false;  // no cell produced the target

  MapCell& at(std::size_t i1, std::size_t i2) { return cells[i1 * beta2_axis.size() + i2]; }
  const MapCell& at(std::size_t i1, std::size_t i2) const {
    return cells[i1 * beta2_axis.size() + i2];
  }
};

// Largest producible interval per cell: alpha sweeps the grid, each period-2
// regime contributes its interval, the smallest ratio wins.
LikelihoodMap max_interval_map(const std::vector<double>& beta1_axis,
                               const std::vector<double>& beta2_axis,
                               const MapProtocol& protocol = {});

// |dI/d alpha| by central difference on the folded ratio; +inf when either
// side has no interval (which removes the cell from likelihood contention).
double interval_derivative(double beta1, double beta2, double alpha, double g0,
                           const MapProtocol& protocol = {});

// Fraction of reliability_seeds initial values whose long-run regime yields
// `target` within +-tol_semitones.
double reliability(double beta1, double beta2, double alpha, const Interval& target,
                   double tol_semitones, const MapProtocol& protocol = {});

// Per cell: pick the alpha that best matches the target interval, then score
// reliability / max(|dI/d alpha|, floor). The map is normalized to max 1;
// all_zero is set instead of throwing when nothing matches.
LikelihoodMap likelihood_map(const std::vector<double>& beta1_axis,
                             const std::vector<double>& beta2_axis, const Interval& target,
                             const MapProtocol& protocol = {});

struct CentroidResult {
  double beta1 = 0.0;
  double beta2 = 0.0;
  std::vector<std::size_t> region_cells;  // indices with likelihood >= 0.9 * max
};

// Likelihood-weighted mean of (beta1, beta2) over the 90%-of-max region.
CentroidResult centroid(const LikelihoodMap& map);

struct CatalogRow {
  double target_semitones = 0.0;
  bool empty = false;  // map was all-zero; centroid is meaningless
  CentroidResult centroid;
};

std::vector<CatalogRow> catalog_scan(const std::vector<double>& targets_semitones,
                                     const std::vector<double>& beta1_axis,
                                     const std::vector<double>& beta2_axis,
                                     const MapProtocol& protocol = {});

// Catalog file: one semitone value per line, '#' starts a comment.
std::vector<double> load_catalog(std::istream& in);

// `beta1,beta2,max_interval_semitones,reliability,derivative,likelihood`;
// undefined fields stay empty (no-tone semitones, infinite derivatives).
void write_map_csv(const LikelihoodMap& map, std::ostream& out);
LikelihoodMap read_map_csv(std::istream& in);

// `target_semitones,beta1_centroid,beta2_centroid,region_cell_count`
void write_centroids_csv(const std::vector<CatalogRow>& rows, std::ostream& out);

}  // namespace ipf
