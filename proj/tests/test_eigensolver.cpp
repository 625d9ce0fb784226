#include <doctest.h>

#include <cmath>
#include <random>

#include "nelson/eigensolver.hpp"
#include "nelson/hamiltonian.hpp"

using namespace nelson;

namespace {

Op from_dense(const Eigen::MatrixXcd& m) {
  Op op;
  op.mat = m.sparseView();
  op.hermitian = true;
  return op;
}

Eigen::MatrixXcd random_hermitian(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Eigen::MatrixXcd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = cplx(nd(rng), nd(rng));
  return (a + a.adjoint()) / (2 * std::sqrt(double(n)));
}

// projector onto the eigenvalues inside the circle, from a dense decomposition
State dense_projection(const Eigen::MatrixXcd& H, cplx center, double radius, const State& psi) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
  State out = State::Zero(psi.size());
  for (Eigen::Index k = 0; k < H.rows(); ++k)
    if (std::abs(es.eigenvalues()[k] - center) < radius) {
      auto u = es.eigenvectors().col(k);
      out += u * u.dot(psi);
    }
  return out;
}

}  // namespace

TEST_CASE("lowest pair of a diagonal matrix") {
  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(3, 3);
  d.diagonal() << 3, 1, 2;
  EigResult r = lowest_pair(from_dense(d), 1e-12, 100);
  CHECK(r.E0 == doctest::Approx(1).epsilon(1e-14));
  CHECK(r.E1 == doctest::Approx(2).epsilon(1e-14));
  CHECK(std::abs(std::abs(r.v0[1]) - 1) < 1e-14);
}

TEST_CASE("lowest pair against dense decomposition") {
  std::mt19937_64 rng(7);
  for (int n : {5, 40, 150, 300}) {
    Eigen::MatrixXcd H = random_hermitian(n, rng);
    EigResult r = lowest_pair(from_dense(H), 1e-12, 4000);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
    CHECK(std::abs(r.E0 - es.eigenvalues()[0]) < 1e-10);
    CHECK(std::abs(r.E1 - es.eigenvalues()[1]) < 1e-10);
    CHECK(1 - std::abs(es.eigenvectors().col(0).dot(r.v0)) < 1e-10);
    CHECK(r.residual < 1e-10);
  }
}

TEST_CASE("lowest pair rejects non-hermitian input") {
  Op op;
  op.mat.resize(2, 2);
  CHECK_THROWS_AS(lowest_pair(op), Error);
}

TEST_CASE("resolvent") {
  SUBCASE("diagonal") {
    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(4, 4);
    d.diagonal() << 1, 2, 3, 4;
    State rhs(4);
    rhs << 1, cplx(0, 1), 2, -1;
    cplx z(2.5, 0.3);
    State x = resolvent_apply(from_dense(d), z, rhs, 1e-12);
    for (int i = 0; i < 4; ++i) CHECK(std::abs(x[i] - rhs[i] / (d(i, i) - z)) < 1e-14);
  }
  SUBCASE("dense solve") {
    std::mt19937_64 rng(11);
    Eigen::MatrixXcd H = random_hermitian(200, rng);
    State rhs = State::Random(200);
    cplx z(0.1, 0.05);
    State x = resolvent_apply(from_dense(H), z, rhs, 1e-12);
    Eigen::MatrixXcd Hz = H - z * Eigen::MatrixXcd::Identity(200, 200);
    State ref = Hz.partialPivLu().solve(rhs);
    CHECK((x - ref).norm() / ref.norm() < 1e-10);
    CHECK((Hz * x - rhs).norm() / rhs.norm() < 1e-10);
  }
}

TEST_CASE("contour projector") {
  std::mt19937_64 rng(3);
  Eigen::MatrixXcd H = random_hermitian(120, rng);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
  const double e0 = es.eigenvalues()[0], e1 = es.eigenvalues()[1];
  ContourSpec spec;
  spec.center = e0;
  spec.radius = 0.5 * (e1 - e0);
  spec.n_quad = 64;
  Op op = from_dense(H);
  State v0 = es.eigenvectors().col(0);
  SUBCASE("identity on its range") {
    CHECK((contour_projector_apply(op, spec, v0, 1e-13).state - v0).norm() < 1e-10);
  }
  SUBCASE("annihilates the complement") {
    State w = es.eigenvectors().col(5);
    CHECK(contour_projector_apply(op, spec, w, 1e-13).state.norm() < 1e-10);
  }
  SUBCASE("dense comparison") {
    State psi = State::Random(120);
    State ref = dense_projection(H, spec.center, spec.radius, psi);
    CHECK((contour_projector_apply(op, spec, psi, 1e-13, 2).state - ref).norm() < 1e-10);
  }
  SUBCASE("bad contour") {
    spec.radius = -1;
    CHECK_THROWS_AS(validate(spec), Error);
  }
}

TEST_CASE("Neumann expansion of the perturbed projector") {
  std::mt19937_64 rng(5);
  Eigen::MatrixXcd H = random_hermitian(150, rng);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
  const double e0 = es.eigenvalues()[0], e1 = es.eigenvalues()[1];
  ContourSpec spec;
  spec.center = e0;
  spec.radius = 0.5 * (e1 - e0);
  State psi = es.eigenvectors().col(0);
  Op base = from_dense(H);
  SUBCASE("dH = 0 reduces to the contour projector") {
    Op zero = from_dense(Eigen::MatrixXcd::Zero(150, 150));
    NeumannResult nr = neumann_projector_apply(base, zero, spec, psi, 6, 1e-13);
    CHECK((nr.state - contour_projector_apply(base, spec, psi, 1e-13).state).norm() < 1e-13);
  }
  SUBCASE("small dH against the exact projector") {
    Eigen::MatrixXcd dH = random_hermitian(150, rng) * (0.01 * (e1 - e0));
    NeumannResult nr = neumann_projector_apply(base, from_dense(dH), spec, psi, 12, 1e-13);
    State exact = dense_projection(H + dH, spec.center, spec.radius, psi);
    CHECK((nr.state - exact).norm() < 1e-8);
    CHECK(nr.fitted_ratio < 1.0 / 12);
    for (std::size_t n = 1; n < nr.term_norms.size(); ++n) CHECK(nr.term_norms[n] < nr.term_norms[n - 1]);
  }
}

TEST_CASE("Kato smallness") {
  Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(3, 3);
  d.diagonal() << 0, 1, 3;
  ContourSpec spec;
  spec.center = 0;
  spec.radius = 0.4;
  spec.n_quad = 32;
  Op base = from_dense(d);
  CHECK(kato_smallness(base, from_dense(Eigen::MatrixXcd::Zero(3, 3)), spec) == 0);
  // dH = c I: |c| max_E 1/dist(E, spec); the nearest eigenvalue sits at distance 0.4 on the circle
  double c = 0.05;
  double k = kato_smallness(base, from_dense(c * Eigen::MatrixXcd::Identity(3, 3)), spec);
  CHECK(k == doctest::Approx(c / 0.4).epsilon(1e-12));
}

TEST_CASE("Kato smallness of a Nelson window perturbation") {
  PhysParams p;
  p.g = 0.01;
  p.m = 4;
  p.P = Vec3(0, 0, 0.5);
  ModeGrid g = build_grid(0.2, 1.0, 2, "antipodal2");
  FockBasis b = enumerate_basis(static_cast<int>(g.size()), 3);
  REQUIRE(b.size() <= 200);
  const double sj = std::sqrt(0.2), sj1 = 0.2;
  Op base = assemble_fiber_hamiltonian(p, g, b, sj);
  Op dH = window_field(p, g, b, sj1, sj);
  EigResult r = lowest_pair(base, 1e-13, 2000);
  ContourSpec spec;
  spec.center = r.E0;
  spec.radius = 0.55 * sj1;
  CHECK(kato_smallness(base, dH, spec) < 1);
}

TEST_CASE("geometric ratio") {
  std::vector<double> v;
  for (int n = 0; n < 8; ++n) v.push_back(3 * std::pow(0.07, n));
  CHECK(geometric_ratio(v) == doctest::Approx(0.07).epsilon(1e-12));
}
