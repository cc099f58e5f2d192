#include "ipf/orbit.hpp"

#include <ostream>
#include <stdexcept>

#include "ipf/csvio.hpp"
#include "ipf/parallel.hpp"

namespace ipf {

std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 2) throw std::invalid_argument("linspace: need at least 2 points");
  std::vector<double> xs(n);
  const double step = (hi - lo) / (n - 1);
  for (int i = 0; i < n; ++i) xs[i] = lo + i * step;
  xs.back() = hi;
  return xs;
}

namespace {

void check_range(double lo, double hi, int n_alpha) {
  if (!(lo > 0.0) || !(lo < hi))
    throw std::invalid_argument("sweep: need 0 < inv_alpha_lo < inv_alpha_hi");
  if (n_alpha < 2) throw std::invalid_argument("sweep: need n_alpha >= 2");
}

}  // namespace

OrbitDiagram orbit_diagram(const std::vector<double>& betas, double inv_alpha_lo,
                           double inv_alpha_hi, int n_alpha, const Seeding& seeding,
                           const SweepProtocol& protocol) {
  check_range(inv_alpha_lo, inv_alpha_hi, n_alpha);
  if (protocol.n_steps + 1 < protocol.tail)
    throw std::invalid_argument("sweep: tail exceeds states produced by n_steps");

  OrbitDiagram diagram;
  diagram.betas = betas;
  diagram.seeding = seeding;
  diagram.tail = protocol.tail;
  diagram.columns.resize(n_alpha);
  const std::vector<double> axis = linspace(inv_alpha_lo, inv_alpha_hi, n_alpha);

  parallel_for(axis.size(), protocol.jobs, [&](std::size_t i) {
    OrbitColumn& col = diagram.columns[i];
    col.inv_alpha = axis[i];
    col.alpha = 1.0 / axis[i];
    IpfParams p;
    p.alpha = col.alpha;
    p.betas = betas;
    p.g0 = protocol.g0;
    TailRun run = iterate_tail(p, protocol.n_steps, protocol.tail, seeding);
    col.diverged = run.diverged;
    if (!run.diverged) col.samples = std::move(run.tail);
  });
  return diagram;
}

std::vector<std::pair<double, RegimeReport>> regime_map(const std::vector<double>& betas,
                                                        double inv_alpha_lo, double inv_alpha_hi,
                                                        int n_alpha, const Seeding& seeding,
                                                        const SweepProtocol& protocol) {
  OrbitDiagram diagram =
      orbit_diagram(betas, inv_alpha_lo, inv_alpha_hi, n_alpha, seeding, protocol);
  std::vector<std::pair<double, RegimeReport>> rows(diagram.columns.size());
  parallel_for(diagram.columns.size(), protocol.jobs, [&](std::size_t i) {
    const OrbitColumn& col = diagram.columns[i];
    rows[i] = {col.inv_alpha, classify_tail(col.samples, col.diverged, protocol.tol)};
  });
  return rows;
}

void write_orbit_csv(const OrbitDiagram& diagram, std::ostream& out) {
  out << "inv_alpha,sample_index,g\n";
  for (const OrbitColumn& col : diagram.columns) {
    if (col.diverged) {
      out << csv_double(col.inv_alpha) << ",DIVERGED\n";
      continue;
    }
    for (std::size_t i = 0; i < col.samples.size(); ++i)
      out << csv_double(col.inv_alpha) << ',' << i << ',' << csv_double(col.samples[i]) << '\n';
  }
}

namespace {

const char* kind_name(RegimeKind kind) {
  switch (kind) {
    case RegimeKind::FixedPoint: return "fixed-point";
    case RegimeKind::Periodic: return "periodic";
    case RegimeKind::Chaotic: return "chaotic";
    case RegimeKind::Divergent: return "divergent";
  }
  return "?";
}

}  // namespace

void write_regimes_csv(const std::vector<std::pair<double, RegimeReport>>& rows,
                       std::ostream& out) {
  out << "inv_alpha,kind,period,limit_values\n";
  for (const auto& [inv_alpha, report] : rows) {
    out << csv_double(inv_alpha) << ',' << kind_name(report.kind) << ',';
    if (report.period) out << *report.period;
    out << ',';
    for (std::size_t i = 0; i < report.limit_values.size(); ++i) {
      if (i) out << ';';
      out << csv_double(report.limit_values[i]);
    }
    out << '\n';
  }
}

}  // namespace ipf
