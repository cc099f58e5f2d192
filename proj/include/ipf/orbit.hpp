#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include "ipf/core.hpp"

// Orbit (bifurcation) diagrams and regime tables over 1/alpha sweeps. The
// sweep axis is 1/alpha to match the usual presentation: low 1/alpha is high
// input strength and stable tone, high 1/alpha walks through period doubling
// into chaos and finally divergence.

namespace ipf {

struct SweepProtocol {
  int n_steps = kOrbitSteps;
  int tail = kOrbitTail;
  double tol = kRegimeTol;
  double g0 = 0.5;  // seed state for warm-up seeding
  int jobs = 1;     // columns are independent; assembly order is fixed
};

struct OrbitColumn {
  double inv_alpha = 0.0;
  double alpha = 0.0;  // stored alongside to avoid reciprocal mix-ups downstream
  std::vector<double> samples;  // exactly `tail` entries unless diverged
  bool diverged = false;
};

struct OrbitDiagram {
  std::vector<double> betas;
  Seeding seeding;
  int tail = kOrbitTail;
  std::vector<OrbitColumn> columns;  // strictly increasing inv_alpha
};

std::vector<double> linspace(double lo, double hi, int n);

OrbitDiagram orbit_diagram(const std::vector<double>& betas, double inv_alpha_lo,
                           double inv_alpha_hi, int n_alpha, const Seeding& seeding = {},
                           const SweepProtocol& protocol = {});

std::vector<std::pair<double, RegimeReport>> regime_map(const std::vector<double>& betas,
                                                        double inv_alpha_lo, double inv_alpha_hi,
                                                        int n_alpha, const Seeding& seeding = {},
                                                        const SweepProtocol& protocol = {});

// Columns: `inv_alpha,sample_index,g` rows; divergent columns emit a single
// `inv_alpha,DIVERGED` row.
void write_orbit_csv(const OrbitDiagram& diagram, std::ostream& out);

void write_regimes_csv(const std::vector<std::pair<double, RegimeReport>>& rows,
                       std::ostream& out);

}  // namespace ipf
