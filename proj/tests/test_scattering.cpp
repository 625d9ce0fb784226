#include <doctest.h>

#include <cmath>

#include "nelson/cascade.hpp"
#include "nelson/quadrature.hpp"
#include "nelson/scattering.hpp"

using namespace nelson;

TEST_CASE("schedule constraints") {
  CHECK_NOTHROW(validate(CutoffSchedule{}));
  CutoffSchedule s;
  s.beta = 1;
  CHECK_THROWS_AS(validate(s), Error);
  s = CutoffSchedule{};
  s.alpha = 0.9;
  CHECK_THROWS_AS(validate(s), Error);
  s = CutoffSchedule{};
  s.eps_part = 2e-4;  // 24 eps >= delta
  CHECK_THROWS_AS(validate(s), Error);
  s = CutoffSchedule{};
  s.delta = 0.0044;
  try {
    validate(s);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("1/112") != std::string::npos);
  }
}

TEST_CASE("phi at the origin for v = 0") {
  for (double t : {1.0, 10.0, 1000.0}) {
    double k = phi_kernel(Vec3::Zero(), t, Vec3::Zero(), 1e-3, 0.1, 0.7).value;
    double c = phi_origin_closed_form(t, 1e-3, 0.1, 0.7);
    CHECK(c == doctest::Approx(4 * M_PI * 0.49 * (std::sin(0.1 * t) - std::sin(1e-3 * t)) / t).epsilon(1e-15));
    CHECK(std::abs(k - c) <= 1e-9 * std::abs(c));
  }
}

TEST_CASE("phi against a direct 3D quadrature") {
  // independent oracle: nested adaptive quadrature over (|k|, cos theta, phi) in Cartesian form
  const Vec3 x(3, -2, 5), v(0.2, 0.1, -0.3);
  const double t = 12, s = 0.01, k1 = 0.1;
  auto ang = [&](double k) {
    auto mu_int = [&](double mu) {
      double st = std::sqrt(1 - mu * mu);
      auto ph = [&](double az) {
        Vec3 kh(st * std::cos(az), st * std::sin(az), mu);
        return std::cos(k * kh.dot(x) - k * t) / (1 - kh.dot(v));
      };
      return quad::integrate(ph, 0, 2 * M_PI, 1e-12, 1e-15, 8).value;
    };
    return quad::integrate(mu_int, -1, 1, 1e-12, 1e-15, 4).value;
  };
  double oracle = quad::integrate(ang, s, k1, 1e-11, 1e-15, 4).value;
  KernelValue kv = phi_kernel(x, t, v, s, k1, 1.0);
  CHECK(std::abs(kv.value - oracle) < 1e-8 * std::max(1.0, std::abs(oracle)));
}

TEST_CASE("inverse Doppler solid angle") {
  CHECK(inverse_doppler_solid_angle(Vec3::Zero()) == doctest::Approx(4 * M_PI).epsilon(1e-15));
  const double u = 0.6;
  CHECK(inverse_doppler_solid_angle(Vec3(0, u, 0)) ==
        doctest::Approx(2 * M_PI / u * std::log((1 + u) / (1 - u))).epsilon(1e-14));
  CHECK_THROWS_AS(inverse_doppler_solid_angle(Vec3(1, 0, 0)), Error);
}

TEST_CASE("interior bound holds on samples") {
  auto samples = interior_samples(40, {10, 100, 1000}, 0.1, 0.9);
  REQUIRE(samples.size() == 40);
  for (const auto& s : samples) {
    CHECK(s.x.norm() <= 0.9 * s.t * (1 + 1e-12));
    CHECK(s.v.norm() <= 0.9 + 1e-12);
  }
  auto rows = phi_interior_rows(samples, 0.1, 1e-3, 0.1, 1.0, 2);
  for (const auto& r : rows) {
    CHECK(r.margin >= 0);
    CHECK(r.bound == doctest::Approx(phi_interior_bound(r.t, 0.1, Vec3(r.speed, 0, 0), 1.0)));
  }
}

TEST_CASE("intermediate decay") {
  PhiDecay d = phi_intermediate_decay({1e3, 1e4, 1e5}, 0.5, 0.1, 0.5, Vec3(0.3, 0, 0), 24, 0.1, 1.0, 2);
  REQUIRE(d.max_abs.size() == 3);
  CHECK(d.fit.exponent <= 0.5 - 2 + 0.1);
  CHECK(d.margin >= 0);
}

TEST_CASE("gamma phase") {
  CutoffSchedule sch;
  CHECK(gamma_phase(Vec3(0.1, 0, 0), Vec3(0, 0.2, 0), 1.0, sch, 1e-3).value == 0);
  CHECK(gamma_phase(Vec3(0.1, 0, 0), Vec3(0, 0.2, 0), 50.0, sch, 1e-3, 0.0).value == 0);
  SUBCASE("v = 0, gradE = 0 against a direct tau quadrature") {
    const double t = 200, st = 1e-3, g = 0.8;
    auto f = [&](double tau) {
      return (std::sin(std::pow(tau, 1 - sch.alpha)) - std::sin(tau * st)) / tau;
    };
    double oracle = -4 * M_PI * g * g * quad::integrate(f, 1, t, 1e-13, 1e-16, 400).value;
    double got = gamma_phase(Vec3::Zero(), Vec3::Zero(), t, sch, st, g).value;
    CHECK(got == doctest::Approx(oracle).epsilon(1e-9));
    // 30-digit reference value of the same integral
    CHECK(got == doctest::Approx(-35.735507491375748744).epsilon(1e-9));
  }
  SUBCASE("the phase freezes once the window closes") {
    const double st = 0.05;
    double T = gamma_freeze_time(sch, st);
    CHECK(T == doctest::Approx(std::pow(st, -1 / sch.alpha)).epsilon(1e-14));
    double a = gamma_phase(Vec3(0.1, 0, 0), Vec3(0.1, 0, 0), 2 * T, sch, st).value;
    double b = gamma_phase(Vec3(0.1, 0, 0), Vec3(0.1, 0, 0), 10 * T, sch, st).value;
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
    CHECK(std::isinf(gamma_freeze_time(sch, 0)));
  }
}

TEST_CASE("smearing function") {
  const double s = 1e4, d = 0.5;
  ChiShape c = chi_shape(s, d);
  CHECK(chi_indicator(Vec3::Zero(), s, d) == 1);
  CHECK(chi_indicator(Vec3(c.a, 0, 0), s, d) == 0);
  CHECK(chi_indicator(Vec3(0, 0, -1.01 * c.a), s, d) == 0);
  CHECK(chi_indicator(Vec3(c.a - c.r / 2, 0, 0), s, d) == doctest::Approx(0.5));
  CHECK_THROWS_AS(chi_shape(2, 0.5), Error);
}

TEST_CASE("smearing transform per axis") {
  ChiShape c = chi_shape(1e6, 0.5);
  for (double q : {0.0, 0.3, 7.0, 55.0}) {
    // oracle: (2 pi)^{-1/2} \int chi(z) cos(qz) dz on the support
    auto f = [&](double z) {
      double az = std::abs(z);
      double chi = az <= c.a - c.r ? 1.0 : (c.a - az) / c.r;
      return chi * std::cos(q * z);
    };
    double oracle = quad::integrate(f, -c.a, c.a, 1e-14, 1e-16, 16).value / std::sqrt(2 * M_PI);
    CHECK(chi_fourier_1d(q, c) == doctest::Approx(oracle).epsilon(1e-11));
  }
  CHECK(chi_fourier_1d(7.0, c) == doctest::Approx(0.095478770033011493160).epsilon(1e-12));
}

TEST_CASE("Parseval, L1 scaling and tail halving") {
  ChiNorms n = chi_norms(1e5, 0.5);
  ChiShape c = chi_shape(1e5, 0.5);
  CHECK(n.l2_space == doctest::Approx(std::pow(2 * c.a - 4 * c.r / 3, 3)).epsilon(1e-14));
  CHECK(std::abs(n.l2_fourier / n.l2_space - 1) < 1e-6);
  ChiScaling sc = chi_l1_scaling(0.5, {1e3, 1e4, 1e5, 1e6}, 2);
  CHECK(sc.l1_fit.exponent <= 1.5 * 0.5 + 0.05);
  for (double r : sc.halving_ratio) CHECK(std::abs(2 * r - 1) < 0.1);
  CHECK(chi_fourier_tail(1e5, 0.5, 200) < chi_fourier_tail(1e5, 0.5, 100));
}

TEST_CASE("mixed coefficients") {
  SUBCASE("equal velocities") {
    MixedCoeffs m = mixed_coeffs(Vec3(0.2, 0.1, 0), Vec3(0.2, 0.1, 0), 1e-3, 0.1);
    CHECK(m.C == 0);
  }
  SUBCASE("swap symmetry") {
    const Vec3 a(0.3, 0, 0.1), b(-0.1, 0.4, 0);
    CHECK(mixed_coeffs(a, b, 1e-3, 0.1).C == doctest::Approx(mixed_coeffs(b, a, 1e-3, 0.1).C).epsilon(1e-12));
  }
  SUBCASE("antiparallel against a 2D adaptive oracle") {
    const double u = 0.25, g = 0.9;
    auto mu_int = [&](double mu) {
      double st = std::sqrt(1 - mu * mu);
      auto ph = [&](double az) {
        double kx = st * std::cos(az);
        double h = g * kx * (-2 * u) / ((1 + u * kx) * (1 - u * kx));
        return h * h;
      };
      return quad::integrate(ph, 0, 2 * M_PI, 1e-13, 1e-16, 4).value;
    };
    double ang = quad::integrate(mu_int, -1, 1, 1e-13, 1e-16, 4).value;
    double oracle = 0.5 * std::log(0.1 / 1e-3) * ang;
    MixedCoeffs m = mixed_coeffs(Vec3(u, 0, 0), Vec3(-u, 0, 0), 1e-3, 0.1, g);
    CHECK(m.C == doctest::Approx(oracle).epsilon(1e-8));
    CHECK(m.angular == doctest::Approx(ang).epsilon(1e-8));
    // 30-digit reference values of the axisymmetric reduction
    CHECK(m.angular == doctest::Approx(0.91640231313561699785).epsilon(1e-10));
    CHECK(m.C == doctest::Approx(2.1100943054113332377).epsilon(1e-10));
  }
}

TEST_CASE("coherent overlap decay") {
  PhysParams p;
  p.m = 4;
  ModeGrid g = build_grid(0.5, 1.0, 1, "octahedral6");
  FockBasis b = enumerate_basis(static_cast<int>(g.size()), 8);
  SUBCASE("equal velocities") {
    p.g = 0.5;
    OverlapDecay o = coherent_overlap_decay(Vec3(0.2, 0, 0), Vec3(0.2, 0, 0), 0.5, 1.0, p, g, b);
    CHECK(std::abs(o.overlap - 1.0) < 1e-13);
    CHECK(o.predicted == doctest::Approx(1));
  }
  SUBCASE("free") {
    p.g = 0;
    OverlapDecay o = coherent_overlap_decay(Vec3(0.2, 0, 0), Vec3(-0.2, 0, 0), 0.5, 1.0, p, g, b);
    CHECK(std::abs(o.overlap - 1.0) < 1e-15);
  }
  SUBCASE("distinct velocities") {
    p.g = 0.5;
    OverlapDecay o = coherent_overlap_decay(Vec3(0.2, 0, 0), Vec3(-0.2, 0, 0), 0.5, 1.0, p, g, b);
    CHECK(o.error <= 1e-3);
    CHECK(o.predicted < 1);
    CHECK_FALSE(o.inflated);
  }
}

TEST_CASE("phase-space partition") {
  auto vel = [](const Vec3& P) -> Vec3 { return P / 4; };
  PartitionSpec one = build_partition(1.0, 1e4, 1e-4, vel);
  CHECK(one.n == 1);
  CHECK(one.centers.size() == 8);
  PartitionSpec two = build_partition(0.6, 2e4, 1e-4, vel);
  REQUIRE(two.n == 2);
  CHECK(two.centers.size() == 64);
  CHECK(two.centers.size() * std::pow(two.side, 3) == doctest::Approx(0.216).epsilon(1e-14));
  for (std::size_t i = 0; i < two.centers.size(); ++i) {
    CHECK(two.velocities[i].norm() < 1);
    CHECK((two.velocities[i] - two.centers[i] / 4).norm() < 1e-15);
  }
}
