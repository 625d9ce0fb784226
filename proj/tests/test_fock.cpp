#include <doctest.h>

#include <cmath>

#include "nelson/fock.hpp"

using namespace nelson;

namespace {

Eigen::MatrixXcd dense(const Op& op) { return Eigen::MatrixXcd(op.mat); }

}  // namespace

TEST_CASE("one-cell grid covers the shell") {
  ModeGrid g = build_grid(0.5, 1.0, 1, "single");
  REQUIRE(g.size() == 1);
  CHECK(g.modes[0].norm() == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
  CHECK(g.modes[0].w == doctest::Approx(4 * M_PI / 3 * (1 - 0.125)).epsilon(1e-14));
}

TEST_CASE("geometric nodes and cell volumes") {
  const double s = 0.01, k = 1.0;
  for (const char* rule : {"antipodal2", "octahedral6", "gl3x4"}) {
    ModeGrid g = build_grid(s, k, 7, rule);
    AngularRule ar = angular_rule(rule);
    REQUIRE(g.size() == 7 * ar.directions.size());
    double vol = 0;
    for (const Mode& m : g.modes) {
      vol += m.w;
      double r = m.norm();
      double t = std::log(r / s) / std::log(k / s) * 7 - 0.5;
      CHECK(std::abs(t - std::round(t)) < 1e-10);
    }
    CHECK(vol == doctest::Approx(4 * M_PI / 3 * (k * k * k - s * s * s)).epsilon(1e-12));
  }
}

TEST_CASE("node quadrature of 1/(2|k|^2) tends to 2 pi (kappa - sigma)") {
  const double s = 0.1, k = 1.0, exact = 2 * M_PI * (k - s);
  double prev = INFINITY;
  for (int n : {4, 16, 64, 256}) {
    ModeGrid g = build_grid(s, k, n, "octahedral6");
    double q = 0;
    for (const Mode& m : g.modes) q += m.w / (2 * m.k.squaredNorm());
    double err = std::abs(q / exact - 1);
    CHECK(err < prev);
    prev = err;
  }
  CHECK(prev < 1e-4);
}

TEST_CASE("grid construction errors") {
  auto kind_of = [](auto fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::io;
  };
  CHECK(kind_of([] { build_grid(1.0, 1.0, 4, "single"); }) == ErrorKind::invalid_shell);
  CHECK(kind_of([] { build_grid(0.5, 1.0, 4, "icosahedral"); }) == ErrorKind::config);
}

TEST_CASE("angular rules integrate low-order harmonics") {
  for (const char* rule : {"octahedral6", "gl4x8"}) {
    AngularRule ar = angular_rule(rule);
    double s0 = 0, sx2 = 0;
    Vec3 s1 = Vec3::Zero();
    for (std::size_t i = 0; i < ar.directions.size(); ++i) {
      s0 += ar.weights[i];
      s1 += ar.weights[i] * ar.directions[i];
      sx2 += ar.weights[i] * ar.directions[i].x() * ar.directions[i].x();
    }
    CHECK(s0 == doctest::Approx(4 * M_PI).epsilon(1e-14));
    CHECK(s1.norm() < 1e-13);
    CHECK(sx2 == doctest::Approx(4 * M_PI / 3).epsilon(1e-13));
  }
}

TEST_CASE("basis enumeration") {
  FockBasis a = enumerate_basis(1, 2);
  CHECK(a.size() == 3);
  FockBasis b = enumerate_basis(2, 1);
  CHECK(b.size() == 3);
  CHECK(b.find({0, 0}).has_value());
  CHECK(b.find({1, 0}).has_value());
  CHECK(b.find({0, 1}).has_value());
  CHECK_FALSE(b.find({1, 1}).has_value());
  CHECK(enumerate_basis(3, 3).size() == 20);
  for (int n = 1; n <= 6; ++n)
    for (int k = 0; k <= 5; ++k) CHECK(enumerate_basis(n, k).size() == binomial(n + k, k));
  CHECK_THROWS_AS(enumerate_basis(40, 8, 1000), Error);
}

TEST_CASE("ladder operators") {
  FockBasis b = enumerate_basis(1, 2);
  Ladder l = ladder_ops(b, 0);
  State one = State::Zero(3);
  one[*b.find({1})] = 1;
  State down = l.annihilation.mat * one;
  State up = l.creation.mat * one;
  CHECK(std::abs(down[*b.find({0})] - 1.0) < 1e-15);
  CHECK(std::abs(up[*b.find({2})] - std::sqrt(2.0)) < 1e-15);
  CHECK(std::abs(down.norm() - 1) < 1e-15);
  CHECK(std::abs(up.norm() - std::sqrt(2.0)) < 1e-15);
}

TEST_CASE("truncated commutator") {
  // [b, b^dagger] = 1 below the cutoff; at total occupation n_max it is -n_m on that state
  FockBasis b = enumerate_basis(3, 3);
  for (int m = 0; m < 3; ++m) {
    Ladder l = ladder_ops(b, m);
    Eigen::MatrixXcd a = dense(l.annihilation), c = dense(l.creation);
    Eigen::MatrixXcd comm = a * c - c * a;
    for (std::size_t s = 0; s < b.size(); ++s) {
      double expect = b.total(s) < b.n_max ? 1.0 : -double(b.states[s][m]);
      CHECK(std::abs(comm(s, s) - expect) < 1e-13);
      double off = (comm.col(s).norm() * comm.col(s).norm() - std::norm(comm(s, s)));
      CHECK(off < 1e-26);
    }
  }
}

TEST_CASE("composite operators") {
  ModeGrid g = build_grid(0.2, 1.0, 2, "octahedral6");
  FockBasis b = enumerate_basis(static_cast<int>(g.size()), 2);
  CompositeOps c = composite_ops(g, b);
  State vac = vacuum_state(b);
  CHECK((c.meson_energy.mat * vac).norm() == 0);
  for (int m : {0, 5, 11}) {
    Occupation o(g.size(), 0);
    o[m] = 1;
    State s = State::Zero(b.size());
    s[*b.find(o)] = 1;
    for (int i = 0; i < 3; ++i) {
      cplx kv = s.dot(c.meson_momentum[i].mat * s);
      CHECK(std::abs(kv - g.modes[m].k[i]) < 1e-15);
    }
    CHECK(std::abs(s.dot(c.meson_energy.mat * s) - g.modes[m].norm()) < 1e-15);
  }
  CHECK(is_hermitian_exact(c.meson_energy.mat));
}

TEST_CASE("smeared field second moment") {
  ModeGrid g = build_grid(0.3, 1.0, 2, "antipodal2");
  FockBasis b = enumerate_basis(static_cast<int>(g.size()), 2);
  REQUIRE(b.size() <= 50);
  auto f = [](const Vec3& k) { return cplx(std::exp(-k.norm()), 0.3 * k.z()); };
  Op F = smeared_field(g, b, f);
  Eigen::MatrixXcd D = dense(F);
  State vac = vacuum_state(b);
  cplx second = vac.dot(D * D * vac);
  double expect = 0;
  for (const Mode& m : g.modes) expect += std::norm(f(m.k)) * m.w;
  CHECK(std::abs(second - expect) < 1e-13);
  CHECK(is_hermitian_exact(F.mat));
}

TEST_CASE("embedding preserves amplitudes") {
  FockBasis sub = enumerate_basis(2, 2), full = enumerate_basis(4, 2);
  State psi = State::Zero(sub.size());
  for (std::size_t i = 0; i < sub.size(); ++i) psi[i] = cplx(i + 1.0, -0.5 * i);
  State e = embed_state(psi, sub, full, {1, 3});
  CHECK(std::abs(e.norm() - psi.norm()) < 1e-14);
  for (std::size_t i = 0; i < sub.size(); ++i) {
    Occupation o(4, 0);
    o[1] = sub.states[i][0];
    o[3] = sub.states[i][1];
    CHECK(e[*full.find(o)] == psi[i]);
  }
}
