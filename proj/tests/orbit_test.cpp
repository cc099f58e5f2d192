#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ipf/orbit.hpp"
#include "oracles.hpp"

using namespace ipf;

TEST_CASE("columns reproduce standalone runs exactly") {
  SweepProtocol proto;
  proto.n_steps = 1200;
  OrbitDiagram d = orbit_diagram({0.164}, 1.5, 3.5, 21, Seeding::explicit_states({0.3, 0.0}), proto);
  REQUIRE(d.columns.size() == 21);
  for (const OrbitColumn& col : d.columns) {
    IpfParams p;
    p.alpha = 1.0 / col.inv_alpha;
    p.betas = {0.164};
    TailRun run = iterate_tail(p, proto.n_steps, proto.tail, Seeding::explicit_states({0.3, 0.0}));
    REQUIRE(run.diverged == col.diverged);
    CHECK(run.tail == col.samples);
  }
}

TEST_CASE("stable region has single-valued columns, first bifurcation doubles them") {
  OrbitDiagram d = orbit_diagram({}, 1.0, 2.0, 11);
  for (const OrbitColumn& col : d.columns) {
    REQUIRE_FALSE(col.diverged);
    REQUIRE(col.samples.size() == static_cast<std::size_t>(d.tail));
    if (col.inv_alpha < 1.99) CHECK(distinct_count(col.samples, kRegimeTol) == 1);
  }

  OrbitDiagram d2 = orbit_diagram({}, 2.1, 2.1000001, 2);
  for (const OrbitColumn& col : d2.columns) CHECK(distinct_count(col.samples, kRegimeTol) == 2);
}

TEST_CASE("distinct counts grow through the period-doubling cascade") {
  std::vector<int> counts;
  for (double inv_a : {1.5, 2.2, 2.45, 2.52}) {
    OrbitDiagram d = orbit_diagram({}, inv_a, inv_a + 1e-9, 2);
    counts.push_back(distinct_count(d.columns[0].samples, kRegimeTol));
  }
  for (std::size_t i = 1; i < counts.size(); ++i) CHECK(counts[i] >= counts[i - 1]);
  CHECK(counts.front() == 1);
  CHECK(counts.back() >= 8);
}

TEST_CASE("divergent columns appear only past the analytic boundary") {
  OrbitDiagram d = orbit_diagram({}, 1.0, 2.8, 181);
  const double e = std::exp(1.0);
  for (const OrbitColumn& col : d.columns) {
    if (col.diverged) CHECK(col.inv_alpha > e - 0.02);
    if (col.inv_alpha > e + 0.02) CHECK(col.diverged);
  }
}

TEST_CASE("regime map matches core classification") {
  auto rows = regime_map({}, 1.5, 2.75, 6);
  REQUIRE(rows.size() == 6);
  CHECK(rows.front().second.kind == RegimeKind::FixedPoint);
  CHECK(rows.back().second.kind == RegimeKind::Divergent);
  for (const auto& [inv_alpha, report] : rows) {
    IpfParams p;
    p.alpha = 1.0 / inv_alpha;
    RegimeReport ref = classify_regime(iterate(p, kOrbitSteps));
    CHECK(ref.kind == report.kind);
  }
}

TEST_CASE("beta sweep shows stable after chaos plus divergent interruptions") {
  SweepProtocol proto;
  OrbitDiagram d =
      orbit_diagram({0.164}, 2.5, 3.7, 481, Seeding::explicit_states({0.3, 0.0}), proto);
  auto rows = regime_map({0.164}, 2.5, 3.7, 481, Seeding::explicit_states({0.3, 0.0}), proto);
  bool chaos_then_stable = false;
  bool full_reentry = false;  // chaotic -> stable -> chaotic again
  bool seen_chaos = false;
  int last_nondiv = -1;
  bool interrupted = false;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const RegimeKind k = rows[i].second.kind;
    if (k == RegimeKind::Chaotic) {
      if (chaos_then_stable) full_reentry = true;
      seen_chaos = true;
    }
    if (seen_chaos && (k == RegimeKind::FixedPoint || k == RegimeKind::Periodic))
      chaos_then_stable = true;
    if (k != RegimeKind::Divergent) {
      if (last_nondiv >= 0 && static_cast<std::size_t>(last_nondiv) + 1 < i) interrupted = true;
      last_nondiv = static_cast<int>(i);
    }
  }
  CHECK(chaos_then_stable);
  CHECK(full_reentry);
  CHECK(interrupted);
}

TEST_CASE("orbit CSV layout") {
  OrbitDiagram d = orbit_diagram({}, 2.0, 2.8, 3, Seeding::warmup(), SweepProtocol{.tail = 4});
  std::ostringstream out;
  write_orbit_csv(d, out);
  const std::string text = out.str();
  CHECK(text.rfind("inv_alpha,sample_index,g\n", 0) == 0);
  CHECK(text.find("2.8,DIVERGED\n") != std::string::npos);
  CHECK(text.find("2,0,") != std::string::npos);
}

TEST_CASE("sweep validates its range") {
  CHECK_THROWS_AS(orbit_diagram({}, 0.0, 2.0, 10), std::invalid_argument);
  CHECK_THROWS_AS(orbit_diagram({}, 2.0, 1.0, 10), std::invalid_argument);
  CHECK_THROWS_AS(orbit_diagram({}, 1.0, 2.0, 1), std::invalid_argument);
}

TEST_CASE("parallel evaluation is independent of job count") {
  SweepProtocol serial;
  serial.n_steps = 600;
  SweepProtocol parallel = serial;
  parallel.jobs = 4;
  OrbitDiagram a = orbit_diagram({0.02, 0.33}, 1.8, 3.2, 40, Seeding::warmup(), serial);
  OrbitDiagram b = orbit_diagram({0.02, 0.33}, 1.8, 3.2, 40, Seeding::warmup(), parallel);
  REQUIRE(a.columns.size() == b.columns.size());
  for (std::size_t i = 0; i < a.columns.size(); ++i) {
    CHECK(a.columns[i].diverged == b.columns[i].diverged);
    CHECK(a.columns[i].samples == b.columns[i].samples);
  }
}
