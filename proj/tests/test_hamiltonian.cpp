#include <doctest.h>

#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

#include "nelson/eigensolver.hpp"
#include "nelson/hamiltonian.hpp"
#include "nelson/quadrature.hpp"

using namespace nelson;

namespace {

PhysParams params(double g, const Vec3& P = Vec3::Zero(), double m = 4) {
  PhysParams p;
  p.g = g;
  p.m = m;
  p.kappa = 1;
  p.P = P;
  return p;
}

Eigen::MatrixXcd dense(const Op& op) { return Eigen::MatrixXcd(op.mat); }

}  // namespace

TEST_CASE("free fiber: vacuum ground state and diagonal gap") {
  PhysParams p = params(0, Vec3(0.1, -0.2, 0.4));
  ModeGrid g = build_grid(0.2, 1.0, 2, "octahedral6");
  FockBasis b = enumerate_basis(static_cast<int>(g.size()), 2);
  EigResult r = lowest_pair(assemble_fiber_hamiltonian(p, g, b, 0.2), 1e-13, 2000);
  CHECK(std::abs(r.E0 - p.P.squaredNorm() / (2 * p.m)) < 1e-14);
  CHECK(1 - std::abs(r.v0[0]) < 1e-14);
  double gap = INFINITY;
  for (const Mode& md : g.modes)
    gap = std::min(gap, md.norm() - md.k.dot(p.P) / p.m + md.k.squaredNorm() / (2 * p.m));
  CHECK(std::abs(r.E1 - r.E0 - gap) < 1e-12);
}

TEST_CASE("displaced oscillator without recoil") {
  PhysParams p = params(0.3);
  p.recoil = false;
  ModeGrid g = build_grid(0.4, 1.0, 1, "antipodal2");
  FockBasis b = enumerate_basis(static_cast<int>(g.size()), 14);
  Op H = assemble_fiber_hamiltonian(p, g, b, 0.4);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense(H));
  double exact = 0;
  for (double gm : coupling_amplitudes(p, g, 0.4, 1.0)) exact -= gm * gm / g.modes[0].norm();
  CHECK(std::abs(es.eigenvalues()[0] - exact) < 1e-8);
}

TEST_CASE("fiber Hamiltonian is exactly hermitian and windowed") {
  PhysParams p = params(0.2, Vec3(0, 0, 0.3));
  ModeGrid g = build_grid(0.1, 1.0, 3, "antipodal2");
  FockBasis b = enumerate_basis(static_cast<int>(g.size()), 3);
  Op H = assemble_fiber_hamiltonian(p, g, b, 0.3);
  CHECK(is_hermitian_exact(H.mat));
  // modes below the cutoff only enter through the kinetic diagonal
  CHECK(coupling_amplitudes(p, g, 0.3, 1.0)[0] == 0);
  CHECK_THROWS_AS(window_field(p, g, b, 0.05, 1.0), Error);
}

TEST_CASE("ground constant") {
  PhysParams p = params(0.7);
  ModeGrid g = build_grid(0.05, 1.0, 4, "gl12x16");
  SUBCASE("v = 0 is exact") {
    double c = ground_constant(p, g, 0.05, Vec3::Zero());
    CHECK(c == doctest::Approx(-2 * M_PI * 0.49 * 0.95).epsilon(1e-13));
  }
  SUBCASE("g = 0 leaves the kinetic term") {
    PhysParams q = params(0, Vec3(0.3, 0, 0));
    CHECK(ground_constant(q, g, 0.05, Vec3(0.2, 0, 0)) == doctest::Approx(0.09 / 8).epsilon(1e-15));
  }
  SUBCASE("v != 0 against a 2D quadrature in (|k|, cos theta)") {
    const Vec3 v(0, 0.1, 0.2);
    const double s = v.norm();
    auto radial = quad::integrate(
        [&](double) {
          // k^2 dk from the measure cancels the 1/|k|^2
          auto ang = quad::integrate([&](double mu) { return 2 * M_PI / (2 * (1 - mu * s)); }, -1, 1,
                                     1e-13, 1e-16);
          return ang.value;
        },
        0.05, 1.0, 1e-13, 1e-16);
    double oracle = -p.g * p.g * radial.value;
    CHECK(std::abs(ground_constant(p, g, 0.05, v) / oracle - 1) < 1e-10);
    // -g^2 (kappa - sigma) (pi/|v|) ln((1+|v|)/(1-|v|)), 30-digit reference
    CHECK(ground_constant(p, g, 0.05, v) == doctest::Approx(-2.9750865647516658568).epsilon(1e-10));
  }
  SUBCASE("sigma above a cell edge clips the cell") {
    ModeGrid one = build_grid(0.1, 1.0, 1, "octahedral6");
    double c = ground_constant(p, one, 0.5, Vec3::Zero());
    CHECK(c == doctest::Approx(-2 * M_PI * 0.49 * 0.5).epsilon(1e-13));
  }
}

TEST_CASE("dressing profile and generator") {
  PhysParams p = params(0.3);
  ModeGrid g = build_grid(0.5, 1.0, 1, "single");
  DressingSpec d = make_dressing(p, g, 0.5, 1.0, Vec3::Zero());
  const Mode& md = g.modes[0];
  CHECK(d.f[0] == doctest::Approx(0.3 * std::sqrt(md.w) / (std::sqrt(2.0) * std::pow(md.norm(), 1.5))));
  FockBasis b = enumerate_basis(1, 5);
  Op A = dressing_generator(d, g, b);
  Eigen::MatrixXcd D = dense(A);
  CHECK((D + D.adjoint()).norm() == 0);
  DressingSpec zero = make_dressing(params(0), g, 0.5, 1.0, Vec3::Zero());
  CHECK(dressing_generator(zero, g, b).mat.nonZeros() == 0);
  CHECK_THROWS_AS(make_dressing(p, g, 0.5, 1.0, Vec3(1, 0, 0)), Error);
}

TEST_CASE("Weyl operator against the dense exponential") {
  ModeGrid g = build_grid(0.5, 1.0, 1, "single");
  FockBasis b = enumerate_basis(1, 29);
  SUBCASE("zero generator") {
    Op A;
    A.mat.resize(b.size(), b.size());
    State psi = State::Random(b.size());
    CHECK((apply_weyl(A, psi, 10).state - psi).norm() == 0);
  }
  SUBCASE("coherent state") {
    DressingSpec d = make_dressing(params(0.2), g, 0.5, 1.0, Vec3::Zero());
    Op A = dressing_generator(d, g, b);
    State vac = vacuum_state(b);
    WeylResult w = apply_weyl(A, vac, 80);
    Eigen::MatrixXcd W = (-dense(A)).exp();
    State ref = W * vac;
    CHECK((w.state - ref).norm() < 1e-14);
    CHECK(w.norm_deviation < 1e-13);
    Op bop = ladder_ops(b, 0).annihilation;
    cplx mean = w.state.dot(bop.mat * w.state);
    // W^dagger b W = b + f in this sign convention
    CHECK(std::abs(mean - d.f[0]) < 1e-13);
    // vacuum overlap of a coherent state
    CHECK(std::abs(std::abs(w.state[0]) - std::exp(-d.f[0] * d.f[0] / 2)) < 1e-14);
  }
  SUBCASE("unitarity on states well below the cutoff") {
    DressingSpec d = make_dressing(params(0.5), g, 0.5, 1.0, Vec3::Zero());
    Op A = dressing_generator(d, g, b);
    State psi = State::Zero(b.size());
    for (int n = 0; n < 4; ++n) psi[n] = cplx(1.0 / (n + 1), 0.1 * n);
    CHECK(apply_weyl(A, psi, 120).norm_deviation < 1e-10);
  }
}

TEST_CASE("dressed Hamiltonian") {
  SUBCASE("free case") {
    PhysParams p = params(0, Vec3(0, 0, 0.4));
    ModeGrid g = build_grid(0.3, 1.0, 1, "antipodal2");
    FockBasis b = enumerate_basis(2, 3);
    Op Hw = assemble_dressed_hamiltonian(p, g, b, 0.3, Vec3::Zero(), Vec3::Zero());
    PhysParams p0 = p;
    p0.P.setZero();
    Eigen::MatrixXcd ref = dense(assemble_fiber_hamiltonian(p0, g, b, 0.3));
    ref.diagonal().array() += p.P.squaredNorm() / (2 * p.m);
    CHECK((dense(Hw) - ref).norm() < 1e-14);
  }
  SUBCASE("equals W H W^dagger on interior states") {
    PhysParams p = params(0.05, Vec3(0, 0.1, 0.3));
    ModeGrid g = build_grid(0.5, 1.0, 1, "antipodal2");
    FockBasis b = enumerate_basis(2, 16);
    const Vec3 v(0, 0.02, 0.06);
    Op H = assemble_fiber_hamiltonian(p, g, b, 0.5);
    Op A = dressing_generator(make_dressing(p, g, 0.5, 1.0, v), g, b);
    Eigen::MatrixXcd W = (-dense(A)).exp();
    Eigen::MatrixXcd conj = W * dense(H) * W.adjoint();
    Op Hw = assemble_dressed_hamiltonian(p, g, b, 0.5, v, consistent_mean_pi(p, g, 0.5, v));
    Eigen::MatrixXcd D = dense(Hw);
    double worst = 0;
    for (std::size_t i = 0; i < b.size(); ++i)
      for (std::size_t j = 0; j < b.size(); ++j)
        if (b.total(i) <= 8 && b.total(j) <= 8) worst = std::max(worst, std::abs(conj(i, j) - D(i, j)));
    CHECK(worst < 1e-8);
    EigResult e1 = lowest_pair(H, 1e-13, 4000), e2 = lowest_pair(Hw, 1e-13, 4000);
    CHECK(std::abs(e1.E0 - e2.E0) < 1e-8);
  }
}
