#include "ipf/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "ipf/csvio.hpp"
#include "ipf/parallel.hpp"

namespace ipf {

Interval interval_from_ratio(double ratio) {
  if (!(ratio > 0.0) || !std::isfinite(ratio))
    throw std::invalid_argument("interval_from_ratio: ratio must be positive and finite");
  Interval iv;
  iv.ratio = ratio <= 1.0 ? ratio : 1.0 / ratio;
  iv.semitones = -12.0 * std::log2(iv.ratio);
  return iv;
}

Interval interval_from_semitones(double semitones) {
  if (!(semitones >= 0.0) || !std::isfinite(semitones))
    throw std::invalid_argument("interval_from_semitones: semitones must be >= 0");
  Interval iv;
  iv.semitones = semitones;
  iv.ratio = std::exp2(-semitones / 12.0);
  return iv;
}

std::optional<Interval> extract_interval(const RegimeReport& report) {
  switch (report.kind) {
    case RegimeKind::FixedPoint:
      return interval_from_ratio(1.0);
    case RegimeKind::Periodic: {
      if (report.period != 2 || report.limit_values.size() != 2) return std::nullopt;
      const double a = report.limit_values[0];
      const double b = report.limit_values[1];
      if (!(a > 0.0) || !(b > 0.0)) return std::nullopt;
      return interval_from_ratio(a / b);
    }
    default:
      return std::nullopt;
  }
}

namespace {

enum class RunKind { Divergent, Fixed, Pair, Other };

struct AlphaOutcome {
  RunKind kind = RunKind::Divergent;
  double ratio = 1.0;  // folded, valid for Pair
};

// Long-run outcome at one (beta1, beta2, alpha, g0), reduced to what the maps
// need: divergent / fixed / genuine 2-cycle (with its folded ratio) / other.
AlphaOutcome outcome_at(double beta1, double beta2, double alpha, double g0,
                        const MapProtocol& proto) {
  IpfParams p;
  p.alpha = alpha;
  p.betas = {beta1, beta2};
  p.g0 = g0;
  TailRun run = iterate_tail(p, proto.n_steps, proto.tail);
  AlphaOutcome out;
  if (run.diverged) return out;
  RegimeReport report = classify_tail(run.tail, false, proto.tol);
  switch (report.kind) {
    case RegimeKind::FixedPoint:
      out.kind = RunKind::Fixed;
      return out;
    case RegimeKind::Periodic:
      if (report.period == 2 && report.limit_values.size() == 2 &&
          report.limit_values[0] > 0.0 && report.limit_values[1] > 0.0) {
        out.kind = RunKind::Pair;
        out.ratio = report.limit_values[0] / report.limit_values[1];
        return out;
      }
      out.kind = RunKind::Other;
      return out;
    default:
      out.kind = RunKind::Other;
      return out;
  }
}

double semitones_of_ratio(double ratio) { return -12.0 * std::log2(ratio); }

// Distance to the target in semitones at one alpha; +inf without a 2-cycle.
double target_distance(double beta1, double beta2, double alpha, double g0, double target_st,
                       const MapProtocol& proto) {
  if (!(alpha > 0.0) || alpha > 1.0) return std::numeric_limits<double>::infinity();
  AlphaOutcome o = outcome_at(beta1, beta2, alpha, g0, proto);
  if (o.kind != RunKind::Pair) return std::numeric_limits<double>::infinity();
  return std::abs(semitones_of_ratio(o.ratio) - target_st);
}

struct Candidate {
  double alpha = 0.0;
  double dist = std::numeric_limits<double>::infinity();
};

// Golden-section polish of |interval(alpha) - target| over [lo, hi]. The
// objective is piecewise smooth with +inf plateaus where the 2-cycle
// disappears; the search is best-effort and deterministic.
Candidate golden_refine(double beta1, double beta2, double lo, double hi, int iters,
                        double target_st, const MapProtocol& proto) {
  constexpr double kGolden = 0.6180339887498949;
  lo = std::max(lo, 1e-9);
  hi = std::min(hi, 1.0);
  auto f = [&](double a) { return target_distance(beta1, beta2, a, proto.g0, target_st, proto); };
  double c = hi - kGolden * (hi - lo);
  double d = lo + kGolden * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  for (int i = 0; i < iters; ++i) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - kGolden * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + kGolden * (hi - lo);
      fd = f(d);
    }
  }
  return fc < fd ? Candidate{c, fc} : Candidate{d, fd};
}

}  // namespace

double interval_derivative(double beta1, double beta2, double alpha, double g0,
                           const MapProtocol& proto) {
  // Narrow interval windows (small intervals hug the cell's bifurcation
  // point) can be thinner than fd_step, so the step shrinks until both sides
  // stay on the 2-cycle branch. Only a genuine branch edge is +inf.
  for (double h = proto.fd_step; h >= 1e-7; h /= 4.0) {
    const double center = std::min(std::max(alpha, h + 1e-12), 1.0 - h);
    AlphaOutcome hi = outcome_at(beta1, beta2, center + h, g0, proto);
    AlphaOutcome lo = outcome_at(beta1, beta2, center - h, g0, proto);
    if (hi.kind == RunKind::Pair && lo.kind == RunKind::Pair)
      return std::abs(hi.ratio - lo.ratio) / (2.0 * h);
  }
  return std::numeric_limits<double>::infinity();
}

double reliability(double beta1, double beta2, double alpha, const Interval& target,
                   double tol_semitones, const MapProtocol& proto) {
  if (!(tol_semitones > 0.0)) throw std::invalid_argument("reliability: tol must be positive");
  const int n = proto.reliability_seeds;
  int hits = 0;
  for (int j = 1; j <= n; ++j) {
    const double g0 = proto.seed_max * j / n;
    AlphaOutcome o = outcome_at(beta1, beta2, alpha, g0, proto);
    if (o.kind != RunKind::Pair) continue;
    if (std::abs(semitones_of_ratio(o.ratio) - target.semitones) <= tol_semitones) ++hits;
  }
  return static_cast<double>(hits) / n;
}

namespace {

std::vector<double> alpha_grid_of(const MapProtocol& proto) {
  if (proto.alpha_steps < 1 || !(proto.alpha_lo >= 0.0) || !(proto.alpha_lo < proto.alpha_hi) ||
      proto.alpha_hi > 1.0)
    throw std::invalid_argument("map: need alpha_steps >= 1 and 0 <= alpha_lo < alpha_hi <= 1");
  std::vector<double> grid(proto.alpha_steps);
  const double span = proto.alpha_hi - proto.alpha_lo;
  for (int j = 1; j <= proto.alpha_steps; ++j)
    grid[j - 1] = proto.alpha_lo + span * j / proto.alpha_steps;
  return grid;
}

LikelihoodMap make_map(const std::vector<double>& b1, const std::vector<double>& b2,
                       const MapProtocol& proto) {
  if (b1.empty() || b2.empty()) throw std::invalid_argument("map: beta axes must be non-empty");
  LikelihoodMap map;
  map.beta1_axis = b1;
  map.beta2_axis = b2;
  map.cells.resize(b1.size() * b2.size());
  map.alpha_grid = alpha_grid_of(proto);
  return map;
}

}  // namespace

LikelihoodMap max_interval_map(const std::vector<double>& beta1_axis,
                               const std::vector<double>& beta2_axis,
                               const MapProtocol& proto) {
  LikelihoodMap map = make_map(beta1_axis, beta2_axis, proto);
  const std::size_t n2 = beta2_axis.size();
  parallel_for(map.cells.size(), proto.jobs, [&](std::size_t idx) {
    const double beta1 = beta1_axis[idx / n2];
    const double beta2 = beta2_axis[idx % n2];
    MapCell& cell = map.cells[idx];
    bool any_bounded = false;
    double min_ratio = std::numeric_limits<double>::infinity();
    double at_alpha = 0.0;
    for (double alpha : map.alpha_grid) {
      AlphaOutcome o = outcome_at(beta1, beta2, alpha, proto.g0, proto);
      if (o.kind == RunKind::Divergent) continue;
      any_bounded = true;
      if (o.kind == RunKind::Pair && o.ratio < min_ratio) {
        min_ratio = o.ratio;
        at_alpha = alpha;
      }
    }
    if (std::isfinite(min_ratio)) {
      cell.kind = CellKind::Multiphonic;
      cell.interval = interval_from_ratio(min_ratio);
      cell.alpha = at_alpha;
    } else if (any_bounded) {
      cell.kind = CellKind::StableOnly;
    }
  });
  return map;
}

LikelihoodMap likelihood_map(const std::vector<double>& beta1_axis,
                             const std::vector<double>& beta2_axis, const Interval& target,
                             const MapProtocol& proto) {
  LikelihoodMap map = make_map(beta1_axis, beta2_axis, proto);
  map.target = target;
  const std::size_t n2 = beta2_axis.size();
  const double grid_span = 1.0 / proto.alpha_steps;

  parallel_for(map.cells.size(), proto.jobs, [&](std::size_t idx) {
    const double beta1 = beta1_axis[idx / n2];
    const double beta2 = beta2_axis[idx % n2];
    MapCell& cell = map.cells[idx];

    Candidate best;
    bool any_bounded = false;
    bool any_pair = false;
    std::vector<RunKind> kinds(map.alpha_grid.size());
    for (std::size_t j = 0; j < map.alpha_grid.size(); ++j) {
      AlphaOutcome o = outcome_at(beta1, beta2, map.alpha_grid[j], proto.g0, proto);
      kinds[j] = o.kind;
      if (o.kind == RunKind::Divergent) continue;
      any_bounded = true;
      if (o.kind != RunKind::Pair) continue;
      any_pair = true;
      const double dist = std::abs(semitones_of_ratio(o.ratio) - target.semitones);
      if (dist < best.dist) best = {map.alpha_grid[j], dist};
    }
    if (proto.refine) {
      if (any_pair && best.dist > 0.0) {
        Candidate c =
            golden_refine(beta1, beta2, best.alpha - grid_span, best.alpha + grid_span,
                          proto.refine_iters, target.semitones, proto);
        if (c.dist < best.dist) best = c;
      }
      // Flip branches (near-unison intervals) can hide entirely between grid
      // points next to the fixed-point region; probe each grid interval whose
      // regime changes into or out of Fixed.
      if (!(best.dist <= proto.tol_semitones)) {
        for (std::size_t j = 0; j + 1 < kinds.size(); ++j) {
          if (kinds[j] == kinds[j + 1]) continue;
          if (kinds[j] != RunKind::Fixed && kinds[j + 1] != RunKind::Fixed) continue;
          Candidate c = golden_refine(beta1, beta2, map.alpha_grid[j], map.alpha_grid[j + 1],
                                      2 * proto.refine_iters / 3, target.semitones, proto);
          if (c.dist < best.dist) best = c;
        }
        if (std::isfinite(best.dist)) any_pair = true;
      }
    }

    if (any_pair) cell.kind = CellKind::Multiphonic;
    else if (any_bounded) cell.kind = CellKind::StableOnly;

    if (!(best.dist <= proto.tol_semitones)) return;  // no match: zero likelihood

    AlphaOutcome o = outcome_at(beta1, beta2, best.alpha, proto.g0, proto);
    if (o.kind != RunKind::Pair) return;
    cell.interval = interval_from_ratio(o.ratio);
    cell.alpha = best.alpha;
    cell.reliability = reliability(beta1, beta2, best.alpha, target, proto.tol_semitones, proto);
    cell.derivative = interval_derivative(beta1, beta2, best.alpha, proto.g0, proto);
    cell.likelihood = cell.reliability / std::max(cell.derivative, proto.derivative_floor);
  });

  double max_raw = 0.0;
  for (const MapCell& cell : map.cells) max_raw = std::max(max_raw, cell.likelihood);
  if (max_raw <= 0.0) {
    map.all_zero = true;
    return map;
  }
  for (MapCell& cell : map.cells) cell.likelihood /= max_raw;
  return map;
}

CentroidResult centroid(const LikelihoodMap& map) {
  if (map.cells.empty()) throw std::invalid_argument("centroid: empty map");
  double max_like = 0.0;
  for (const MapCell& cell : map.cells) max_like = std::max(max_like, cell.likelihood);
  if (max_like <= 0.0) throw std::invalid_argument("centroid: all-zero map");

  CentroidResult result;
  const std::size_t n2 = map.beta2_axis.size();
  double w_sum = 0.0, b1_sum = 0.0, b2_sum = 0.0;
  for (std::size_t idx = 0; idx < map.cells.size(); ++idx) {
    const double w = map.cells[idx].likelihood;
    if (w < 0.9 * max_like) continue;
    result.region_cells.push_back(idx);
    w_sum += w;
    b1_sum += w * map.beta1_axis[idx / n2];
    b2_sum += w * map.beta2_axis[idx % n2];
  }
  result.beta1 = b1_sum / w_sum;
  result.beta2 = b2_sum / w_sum;
  return result;
}

std::vector<CatalogRow> catalog_scan(const std::vector<double>& targets_semitones,
                                     const std::vector<double>& beta1_axis,
                                     const std::vector<double>& beta2_axis,
                                     const MapProtocol& proto) {
  if (targets_semitones.empty()) throw std::invalid_argument("catalog_scan: empty catalog");
  std::vector<CatalogRow> rows;
  rows.reserve(targets_semitones.size());
  for (double st : targets_semitones) {
    LikelihoodMap map = likelihood_map(beta1_axis, beta2_axis, interval_from_semitones(st), proto);
    CatalogRow row;
    row.target_semitones = st;
    if (map.all_zero)
      row.empty = true;
    else
      row.centroid = centroid(map);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<double> load_catalog(std::istream& in) {
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    double v;
    if (row >> v) values.push_back(v);
  }
  return values;
}

void write_map_csv(const LikelihoodMap& map, std::ostream& out) {
  out << "beta1,beta2,max_interval_semitones,reliability,derivative,likelihood\n";
  const std::size_t n2 = map.beta2_axis.size();
  for (std::size_t idx = 0; idx < map.cells.size(); ++idx) {
    const MapCell& cell = map.cells[idx];
    out << csv_double(map.beta1_axis[idx / n2]) << ',' << csv_double(map.beta2_axis[idx % n2])
        << ',';
    if (cell.interval)
      out << csv_double(cell.interval->semitones);
    else if (cell.kind == CellKind::StableOnly)
      out << 0;
    out << ',' << csv_double(cell.reliability) << ',';
    if (std::isfinite(cell.derivative)) out << csv_double(cell.derivative);
    out << ',' << csv_double(cell.likelihood) << '\n';
  }
}

LikelihoodMap read_map_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("beta1,beta2,max_interval_semitones", 0) != 0)
    throw std::invalid_argument("read_map_csv: missing header");

  struct Row {
    double b1, b2, st, rel, der, like;
    bool has_st, has_der;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    fields.resize(6);
    Row r{};
    r.b1 = std::stod(fields[0]);
    r.b2 = std::stod(fields[1]);
    r.has_st = !fields[2].empty();
    r.st = r.has_st ? std::stod(fields[2]) : 0.0;
    r.rel = fields[3].empty() ? 0.0 : std::stod(fields[3]);
    r.has_der = !fields[4].empty();
    r.der = r.has_der ? std::stod(fields[4]) : 0.0;
    r.like = fields[5].empty() ? 0.0 : std::stod(fields[5]);
    rows.push_back(r);
  }
  if (rows.empty()) throw std::invalid_argument("read_map_csv: no rows");

  LikelihoodMap map;
  for (const Row& r : rows)
    if (map.beta1_axis.empty() || r.b1 > map.beta1_axis.back()) map.beta1_axis.push_back(r.b1);
  for (const Row& r : rows) {
    if (r.b1 != rows.front().b1) break;
    map.beta2_axis.push_back(r.b2);
  }
  if (map.beta1_axis.size() * map.beta2_axis.size() != rows.size())
    throw std::invalid_argument("read_map_csv: rows do not form a grid");
  map.cells.resize(rows.size());
  double max_like = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    MapCell& cell = map.cells[i];
    if (r.has_st && r.st > 0.0) {
      cell.kind = CellKind::Multiphonic;
      cell.interval = interval_from_semitones(r.st);
    } else if (r.has_st) {
      cell.kind = CellKind::StableOnly;
    }
    cell.reliability = r.rel;
    cell.derivative = r.has_der ? r.der : std::numeric_limits<double>::infinity();
    cell.likelihood = r.like;
    max_like = std::max(max_like, r.like);
  }
  map.all_zero = max_like <= 0.0;
  return map;
}

void write_centroids_csv(const std::vector<CatalogRow>& rows, std::ostream& out) {
  out << "target_semitones,beta1_centroid,beta2_centroid,region_cell_count\n";
  for (const CatalogRow& row : rows) {
    out << csv_double(row.target_semitones) << ',';
    if (!row.empty)
      out << csv_double(row.centroid.beta1) << ',' << csv_double(row.centroid.beta2) << ','
          << row.centroid.region_cells.size();
    else
      out << ",,0";
    out << '\n';
  }
}

}  // namespace ipf
