#include <doctest.h>

#include <cmath>

#include "nelson/cascade.hpp"

using namespace nelson;

namespace {

CascadeConfig small_config(double g, int J = 2) {
  CascadeConfig c;
  c.params.g = g;
  c.params.m = 4;
  c.params.kappa = 1;
  c.params.eps = 0.2;
  c.params.P = Vec3(0, 0, 0.5);
  c.J = J;
  c.n_max = 3;
  c.run_neumann = false;
  return c;
}

double entry_count(const CascadeReport& r, const std::string& name) {
  int n = 0;
  for (const auto& e : r.ledger) n += e.name == name;
  return n;
}

}  // namespace

TEST_CASE("cutoff sequence and grid") {
  CHECK(cascade_sigma(0.2, 0) == doctest::Approx(std::sqrt(0.2)).epsilon(1e-15));
  CHECK(cascade_sigma(0.2, 3) == doctest::Approx(0.04).epsilon(1e-15));
  CascadeConfig c = small_config(0.01, 3);
  ModeGrid g = cascade_grid(c);
  CHECK(g.size() == 2 * 5);
  // every sigma_j is a cell edge, so windows never split a cell
  for (int j = 0; j <= 4; ++j) {
    double s = cascade_sigma(0.2, j);
    bool edge = false;
    for (const Mode& m : g.modes) edge = edge || std::abs(m.r_lo - s) < 1e-15 || std::abs(m.r_hi - s) < 1e-15;
    CHECK(edge);
  }
  CHECK(g.sigma == doctest::Approx(cascade_sigma(0.2, 4)));
}

TEST_CASE("step spaces grow by one window per step") {
  CascadeConfig c = small_config(0.01, 3);
  ModeGrid g = cascade_grid(c);
  for (int j = 0; j < 3; ++j) {
    StepSpace s = step_space(c, g, j);
    CHECK(s.grid.size() == static_cast<std::size_t>(2 * (j + 2)));
    CHECK(s.basis.size() == binomial(static_cast<int>(s.grid.size()) + 3, 3));
    for (int m : s.modes) CHECK(g.modes[m].norm() >= cascade_sigma(0.2, j + 1));
  }
}

TEST_CASE("config validation") {
  CascadeConfig c = small_config(0.01);
  c.J = 0;
  CHECK_THROWS_AS(validate(c), Error);
  c = small_config(0.01);
  c.params.eps = 0.3;
  CHECK_THROWS_AS(validate(c), Error);
  c = small_config(0.01);
  c.angular_rule = "nope";
  CHECK_THROWS_AS(validate(c), Error);
  c = small_config(1.0);
  c.params.strict_paper_regime = true;
  CHECK_THROWS_AS(validate(c), Error);
}

TEST_CASE("phase fixing") {
  FockBasis b = enumerate_basis(2, 2);
  State vac = vacuum_state(b);
  const cplx ph = std::polar(1.0, 0.7);
  PhaseFixed f = fix_phase(ph * vac, b);
  CHECK((f.state - vac).norm() < 1e-15);
  CHECK(std::abs(f.phase - std::conj(ph)) < 1e-15);
  State s = State::Zero(b.size());
  s[0] = 0.6;
  s[3] = cplx(0, 0.8);
  PhaseFixed g = fix_phase(s, b);
  CHECK(g.phase == cplx(1, 0));
  CHECK((fix_phase(g.state, b).state - g.state).norm() == 0);
  State orth = State::Zero(b.size());
  orth[1] = 1;
  try {
    fix_phase(orth, b);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::phase_undefined);
  }
}

TEST_CASE("aligned distance ignores a global phase") {
  State a(3);
  a << 1, cplx(0, 1), 0.5;
  CHECK(aligned_distance(a, std::polar(1.0, 2.1) * a) < 1e-15);
  State b = a;
  b[2] += 1e-3;
  CHECK(aligned_distance(a, b) == doctest::Approx(1e-3).epsilon(1e-6));
}

TEST_CASE("free cascade") {
  CascadeReport r = run_cascade(small_config(0, 3));
  REQUIRE_FALSE(r.aborted);
  REQUIRE(r.records.size() == 4);
  for (const auto& rec : r.records) {
    CHECK(std::abs(rec.E - 0.25 / 8) < 1e-14);
    CHECK(std::abs(rec.vacuum_overlap - 1.0) < 1e-14);
  }
  for (double d : r.diffs_raw) CHECK(d < 1e-13);
  for (double d : r.diffs_dressed) CHECK(d < 1e-13);
  CHECK(r.fit.dressed.saturated);
  for (const auto& e : r.ledger)
    if (e.name == "gap_thm15") CHECK(e.margin > 0);
}

TEST_CASE("free gap at P = 0") {
  CascadeConfig c = small_config(0, 2);
  c.params.P.setZero();
  CascadeReport r = run_cascade(c);
  ModeGrid g = cascade_grid(c);
  for (const auto& rec : r.records) {
    // the step problem keeps the modes above sigma_{j+1}
    double expect = INFINITY;
    for (const Mode& m : g.modes)
      if (m.r_lo >= cascade_sigma(0.2, rec.j + 1) * (1 - 1e-12))
        expect = std::min(expect, m.norm() + m.k.squaredNorm() / 8);
    CHECK(rec.gap == doctest::Approx(expect).epsilon(1e-10));
    CHECK(rec.gap > cascade_sigma(0.2, rec.j + 1) / 2);
  }
}

TEST_CASE("small coupling cascade") {
  CascadeConfig c = small_config(0.01, 3);
  c.run_neumann = true;
  CascadeReport r = run_cascade(c);
  REQUIRE_FALSE(r.aborted);
  CHECK(entry_count(r, "lemma13") == 3);
  CHECK(entry_count(r, "gap_thm15") == 4);
  CHECK(entry_count(r, "cauchy_fit") == 1);
  for (std::size_t j = 0; j + 1 < r.records.size(); ++j) {
    const double E0 = r.records[j].E, E1 = r.records[j + 1].E;
    CHECK(E1 <= E0);
    CHECK(E1 >= E0 - 40 * M_PI * 1e-4 * r.records[j].sigma);
  }
  for (std::size_t j = 0; j < r.diffs_raw.size(); ++j) CHECK(r.diffs_dressed[j] < r.diffs_raw[j]);
  for (const auto& n : r.neumann) {
    CHECK(n.ok);
    CHECK(n.distance < 1e-6);
    CHECK(n.fitted_ratio < 1.0 / 12);
    CHECK(n.kato >= 0);
    CHECK(n.kato < 1);
  }
  for (const auto& e : r.ledger) CHECK_MESSAGE(e.pass, e.name << " step " << e.step);
}

TEST_CASE("cascade energies match direct eigensolves on the full grid") {
  CascadeConfig c = small_config(0.05, 2);
  CascadeReport r = run_cascade(c);
  REQUIRE_FALSE(r.aborted);
  ModeGrid g = cascade_grid(c);
  FockBasis b = enumerate_basis(static_cast<int>(g.size()), c.n_max);
  for (const auto& rec : r.records) {
    Eigen::MatrixXcd H(assemble_fiber_hamiltonian(c.params, g, b, rec.sigma).mat);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
    CHECK(rec.E == doctest::Approx(es.eigenvalues()[0]).epsilon(1e-11));
  }
}

TEST_CASE("Neumann step check on the free model") {
  NeumannCheck n = check_neumann_step(small_config(0, 2), 0);
  CHECK(n.ok);
  CHECK(n.distance < 1e-13);
  CHECK(n.kato == 0);
}

TEST_CASE("power-law fits") {
  std::vector<double> s, d;
  for (int j = 0; j < 6; ++j) {
    s.push_back(cascade_sigma(0.2, j));
    d.push_back(std::pow(s.back(), 0.125));
  }
  PowerFit f = fit_power_law(s, d);
  CHECK(f.exponent == doctest::Approx(0.125).epsilon(1e-10));
  CHECK(f.prefactor == doctest::Approx(1).epsilon(1e-10));
  PowerFit z = fit_power_law(s, std::vector<double>(6, 0.0));
  CHECK(z.saturated);
  CHECK_THROWS_AS(fit_power_law({1, 2}, {1, 2}), Error);
}

TEST_CASE("gap scan") {
  CascadeConfig c = small_config(0.01, 2);
  GapScan s = scan_gap_acceptance(c, {0.3, 0.01, 0.1});
  CHECK(s.g == std::vector<double>{0.01, 0.1, 0.3});
  REQUIRE(s.g_accept.has_value());
  for (std::size_t i = 0; i < s.g.size(); ++i)
    if (s.g[i] <= *s.g_accept) CHECK(s.min_margin[i] >= 0);
}

TEST_CASE("q constant") {
  const double r = 11 * std::sqrt(0.01) / (10 - 11 * std::sqrt(0.01));
  CHECK(q_constant(0.01) == doctest::Approx(std::sqrt(1 + r * r)).epsilon(1e-15));
}
