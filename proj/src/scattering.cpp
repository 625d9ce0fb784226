#include "nelson/scattering.hpp"

#include <algorithm>
#include <cmath>

#include "nelson/parallel.hpp"
#include "nelson/quadrature.hpp"

namespace nelson {

void validate(const CutoffSchedule& s) {
  auto bad = [](const std::string& what) { fail(ErrorKind::config, what); };
  if (!(s.beta > 1)) bad("schedule: beta > 1 violated");
  if (std::abs(s.alpha - 39.0 / 40) > 1e-15) bad("schedule: alpha must equal 39/40");
  if (!(s.eps_part > 0)) bad("schedule: eps_part > 0 violated");
  if (!(s.delta > 24 * s.eps_part)) bad("schedule: 24*eps_part < delta violated");
  if (!(2 * s.delta + 3 * s.eps_part < 1.0 / 112))
    bad("schedule: 2*delta + 3*eps_part < 1/112 violated");
}

namespace {

double sinc(double x) {
  if (std::abs(x) < 1e-4) return 1 - x * x / 6;
  return std::sin(x) / x;
}

// angular weight after the azimuthal integral about `axis`: 1/sqrt((1 - v_par mu)^2 - v_perp^2 (1 - mu^2))
struct Doppler {
  double par = 0, perp = 0;

  Doppler(const Vec3& v, const Vec3& axis) {
    par = v.dot(axis);
    perp = (v - par * axis).norm();
  }

  double operator()(double mu) const {
    double a = 1 - par * mu;
    double d = a * a - perp * perp * (1 - mu * mu);
    return 1 / std::sqrt(std::max(d, 1e-300));
  }
};

Vec3 axis_of(const Vec3& x) {
  double n = x.norm();
  return n > 0 ? Vec3(x / n) : Vec3(0, 0, 1);
}

void check_speed(const Vec3& v, const char* what) {
  if (!(v.norm() < 1))
    fail(ErrorKind::velocity_domain, std::string(what) + " must have norm < 1");
}

}  // namespace

KernelValue phi_kernel(const Vec3& x, double t, const Vec3& v, double sigma, double kappa1,
                       double g, double rel_tol) {
  check_speed(v, "v");
  if (!(sigma > 0) || !(sigma < kappa1)) fail(ErrorKind::window, "need 0 < sigma < kappa1");
  const double r = x.norm();
  const Doppler xi(v, axis_of(x));
  const double width = kappa1 - sigma, mid = 0.5 * (kappa1 + sigma);
  auto f = [&](double mu) {
    double c = r * mu - t;
    return xi(mu) * width * std::cos(mid * c) * sinc(0.5 * width * c);
  };
  const double pref = 2 * M_PI * g * g;
  int panels = 1 + static_cast<int>(std::ceil(kappa1 * r / M_PI));
  auto res = quad::integrate(f, -1.0, 1.0, rel_tol, 1e-15 * width, panels,
                             std::max(200000, 8 * panels));
  if (!res.converged)
    fail(ErrorKind::accuracy, "phi quadrature unconverged, estimate " + std::to_string(res.error) +
                                  " on value " + std::to_string(res.value));
  return {pref * res.value, pref * res.error};
}

double phi_origin_closed_form(double t, double sigma, double kappa1, double g) {
  return 4 * M_PI * g * g * (std::sin(kappa1 * t) - std::sin(sigma * t)) / t;
}

double inverse_doppler_solid_angle(const Vec3& v) {
  check_speed(v, "v");
  double u = v.norm();
  if (u < 1e-6) return 4 * M_PI * (1 + u * u / 3);
  return 2 * M_PI / u * std::log((1 + u) / (1 - u));
}

double phi_interior_bound(double t, double eta, const Vec3& v, double g) {
  return 2 * g * g * inverse_doppler_solid_angle(v) / (eta * t);
}

std::vector<PhiSample> interior_samples(int count, const std::vector<double>& ts, double eta,
                                        double vmax) {
  std::vector<PhiSample> out;
  if (ts.empty()) return out;
  // golden-ratio sequences give a fixed, well-spread set of directions and radii
  const double phi = 0.6180339887498949;
  for (int i = 0; i < count; ++i) {
    PhiSample s;
    s.t = ts[i % ts.size()];
    double u1 = std::fmod(0.5 + i * phi, 1.0), u2 = std::fmod(0.25 + i * phi * phi, 1.0);
    double u3 = std::fmod(0.1 + i * 0.7548776662466927, 1.0);
    double mu = 2 * u1 - 1, az = 2 * M_PI * u2, st = std::sqrt(1 - mu * mu);
    Vec3 dir(st * std::cos(az), st * std::sin(az), mu);
    s.x = u3 * (1 - eta) * s.t * dir;
    Vec3 vdir(dir.y(), dir.z(), dir.x());
    s.v = vmax * std::fmod(0.3 + i * 0.5698402909980532, 1.0) * vdir;
    out.push_back(s);
  }
  return out;
}

std::vector<PhiRow> phi_interior_rows(const std::vector<PhiSample>& samples, double eta,
                                      double sigma, double kappa1, double g, int threads) {
  std::vector<PhiRow> rows(samples.size());
  parallel_for(static_cast<int>(samples.size()), threads, [&](int i) {
    const PhiSample& s = samples[i];
    PhiRow& row = rows[i];
    row.t = s.t;
    row.x_over_t = s.x.norm() / s.t;
    row.speed = s.v.norm();
    row.bound = phi_interior_bound(s.t, eta, s.v, g);
    row.value = phi_kernel(s.x, s.t, s.v, sigma, kappa1, g).value;
    row.margin = row.bound - std::abs(row.value);
  });
  return rows;
}

PhiDecay phi_intermediate_decay(const std::vector<double>& ts, double alpha, double eta,
                                double eta_prime, const Vec3& v, int n_radii, double kappa1,
                                double g, int threads) {
  if (!(eta_prime > eta)) fail(ErrorKind::config, "need eta' > eta");
  if (n_radii < 2) fail(ErrorKind::sampling, "need at least 2 radii");
  PhiDecay out;
  out.alpha = alpha;
  out.t = ts;
  out.max_abs.assign(ts.size(), 0.0);
  const Vec3 u = v.norm() > 0 ? Vec3(v.normalized()) : Vec3(0, 0, 1);
  Vec3 w = u.unitOrthogonal();
  const std::vector<Vec3> dirs = {u, -u, w};
  const int per_t = n_radii * static_cast<int>(dirs.size());
  std::vector<double> vals(ts.size() * per_t);
  parallel_for(static_cast<int>(vals.size()), threads, [&](int idx) {
    int ti = idx / per_t, rest = idx % per_t;
    int ri = rest / static_cast<int>(dirs.size()), di = rest % static_cast<int>(dirs.size());
    double t = ts[ti];
    // open interval: radii strictly inside the shell
    double frac = (1 - eta_prime) + (eta_prime - eta) * (ri + 0.5) / n_radii;
    double sigma = std::pow(t, -alpha);
    vals[idx] = std::abs(phi_kernel(frac * t * dirs[di], t, v, sigma, kappa1, g, 1e-8).value);
  });
  for (std::size_t i = 0; i < vals.size(); ++i)
    out.max_abs[i / per_t] = std::max(out.max_abs[i / per_t], vals[i]);
  out.fit = fit_power_law(out.t, out.max_abs, 0.0, 3);
  out.margin = alpha - 2 + 0.1 - out.fit.exponent;
  return out;
}

double gamma_freeze_time(const CutoffSchedule& schedule, double sigma_t) {
  if (!(sigma_t > 0)) return INFINITY;
  return std::exp(-std::log(sigma_t) / schedule.alpha);
}

KernelValue gamma_phase(const Vec3& v, const Vec3& gradE, double t, const CutoffSchedule& schedule,
                        double sigma_t, double g, double rel_tol) {
  check_speed(v, "v");
  check_speed(gradE, "gradE");
  if (!(t >= 1)) fail(ErrorKind::config, "gamma needs t >= 1");
  if (!(sigma_t >= 0)) fail(ErrorKind::config, "sigma_t must be >= 0");
  const double T = std::min(t, gamma_freeze_time(schedule, sigma_t));
  if (T <= 1 || g == 0) return {0.0, 0.0};
  const double speed = gradE.norm();
  const Doppler xi(v, axis_of(gradE));
  const double pref = 2 * M_PI * g * g;
  double inner_err = 0;
  auto inner = [&](double tau) {
    double a = tau * sigma_t, b = std::pow(tau, 1 - schedule.alpha);
    if (b <= a) return 0.0;
    auto f = [&](double mu) {
      double c = speed * mu - 1;
      return xi(mu) * (std::sin(b * c) - std::sin(a * c)) / c;
    };
    auto r = quad::integrate(f, -1.0, 1.0, 1e-13, 1e-16);
    if (!r.converged) fail(ErrorKind::accuracy, "gamma inner quadrature unconverged");
    inner_err = std::max(inner_err, r.error);
    return r.value;
  };
  const double U = std::log(T);
  // sin(tau sigma_t) oscillates across the range; seed panels accordingly
  int panels = 1 + static_cast<int>(std::ceil(T * sigma_t / M_PI));
  auto outer = quad::integrate([&](double u) { return inner(std::exp(u)); }, 0.0, U, rel_tol,
                               1e-15, std::min(panels, 100000));
  if (!outer.converged)
    fail(ErrorKind::accuracy, "gamma outer quadrature unconverged, estimate " +
                                  std::to_string(outer.error));
  return {-pref * outer.value, pref * (outer.error + U * inner_err)};
}

ChiShape chi_shape(double s, double delta) {
  if (!(s > 1) || !(delta > 0)) fail(ErrorKind::config, "chi needs s > 1 and delta > 0");
  ChiShape c;
  c.a = 1 / (2 * std::pow(s, delta / 6));
  c.r = std::pow(s, -delta / 2);
  if (!(std::pow(s, delta / 2) > 2 * std::pow(s, delta / 6)))
    fail(ErrorKind::geometry, "ramp does not fit: need s^(delta/2) > 2 s^(delta/6)");
  return c;
}

namespace {

double chi_1d(double z, const ChiShape& c) {
  double x = std::abs(z);
  if (x >= c.a) return 0.0;
  if (x <= c.a - c.r) return 1.0;
  return (c.a - x) / c.r;
}

}  // namespace

double chi_fourier_1d(double q, const ChiShape& c) {
  const double norm = 1 / std::sqrt(2 * M_PI);
  if (std::abs(q) * c.a < 1e-6) return norm * (2 * c.a - c.r);
  // cos(q(a-r)) - cos(qa) = 2 sin(q(2a-r)/2) sin(qr/2), no cancellation near q = 0
  return norm * 4 / (c.r * q * q) * std::sin(q * (2 * c.a - c.r) / 2) * std::sin(q * c.r / 2);
}

double chi_indicator(const Vec3& z, double s, double delta, double scale) {
  ChiShape c = chi_shape(s, delta);
  return chi_1d(z.x() / scale, c) * chi_1d(z.y() / scale, c) * chi_1d(z.z() / scale, c);
}

cplx chi_fourier(const Vec3& q, double s, double delta, double scale) {
  ChiShape c = chi_shape(s, delta);
  double v = scale * scale * scale;
  for (int k = 0; k < 3; ++k) v *= chi_fourier_1d(scale * q[k], c);
  return {v, 0.0};
}

namespace {

// mean of |sin(Aq) sin(Bq)| and sin^2 sin^2 over long ranges, for generic A/B
constexpr double mean_abs_ss = 4 / (M_PI * M_PI);
constexpr double mean_sq_ss = 0.25;

double abs_tail(const ChiShape& c, double Q) {
  return 4 / (std::sqrt(2 * M_PI) * c.r) * mean_abs_ss / Q;
}

double sq_tail(const ChiShape& c, double Q) {
  return 16 / (2 * M_PI * c.r * c.r) * mean_sq_ss / (3 * Q * Q * Q);
}

int chi_panels(const ChiShape& c, double lo, double hi) {
  return 1 + static_cast<int>(std::ceil((hi - lo) * c.a / M_PI));
}

double abs_integral(const ChiShape& c, double lo, double hi) {
  auto f = [&](double q) { return std::abs(chi_fourier_1d(q, c)); };
  int p = chi_panels(c, lo, hi);
  auto r = quad::integrate(f, lo, hi, 1e-10, 1e-16, p, std::max(200000, 20 * p));
  if (!r.converged) fail(ErrorKind::accuracy, "chi L1 quadrature unconverged");
  return r.value;
}

}  // namespace

ChiNorms chi_norms(double s, double delta) {
  ChiShape c = chi_shape(s, delta);
  ChiNorms n;
  double l2z = 2 * c.a - 4 * c.r / 3;
  n.l2_space = l2z * l2z * l2z;
  const double Q = 4000 / c.r;
  auto sq = [&](double q) {
    double v = chi_fourier_1d(q, c);
    return v * v;
  };
  int p = chi_panels(c, 0, Q);
  auto r = quad::integrate(sq, 0.0, Q, 1e-12, 1e-18, p, std::max(200000, 20 * p));
  if (!r.converged) fail(ErrorKind::accuracy, "chi L2 quadrature unconverged");
  double l2q = 2 * (r.value + sq_tail(c, Q));
  n.l2_fourier = l2q * l2q * l2q;
  double l1 = 2 * (abs_integral(c, 0, Q) + abs_tail(c, Q));
  n.l1_fourier = l1 * l1 * l1;
  return n;
}

double chi_fourier_tail(double s, double delta, double lambda) {
  ChiShape c = chi_shape(s, delta);
  if (!(lambda > 0)) fail(ErrorKind::config, "tail cutoff must be > 0");
  const double Q = std::max(4000 / c.r, 40 * lambda);
  double t1 = 2 * (abs_integral(c, lambda, Q) + abs_tail(c, Q));
  double L = 2 * abs_integral(c, 0, lambda) + t1;
  return L * L * L - std::pow(L - t1, 3);
}

ChiScaling chi_l1_scaling(double delta, const std::vector<double>& s_values, int threads) {
  if (s_values.size() < 4) fail(ErrorKind::sampling, "chi scaling needs at least 4 sweep points");
  ChiScaling out;
  out.delta = delta;
  out.s = s_values;
  const std::size_t n = s_values.size();
  out.l1.resize(n);
  out.tail.resize(n);
  out.halving_ratio.resize(n);
  double r_min = INFINITY;
  for (double s : s_values) r_min = std::min(r_min, chi_shape(s, delta).r);
  const double lambda_fix = 50 / r_min;
  parallel_for(static_cast<int>(n), threads, [&](int i) {
    double s = s_values[i];
    ChiShape c = chi_shape(s, delta);
    out.l1[i] = chi_norms(s, delta).l1_fourier;
    out.tail[i] = chi_fourier_tail(s, delta, lambda_fix);
    double lam = 50 / c.r;
    out.halving_ratio[i] = chi_fourier_tail(s, delta, 2 * lam) / chi_fourier_tail(s, delta, lam);
  });
  out.l1_fit = fit_power_law(out.s, out.l1, 0.0, 4);
  out.tail_fit = fit_power_law(out.s, out.tail, 0.0, 4);
  const double cap = 1.5 * delta + 0.05;
  out.l1_margin = cap - out.l1_fit.exponent;
  out.tail_margin = cap - out.tail_fit.exponent;
  double worst = 0;
  for (double q : out.halving_ratio) worst = std::max(worst, std::abs(2 * q - 1));
  out.halving_margin = 0.1 - worst;
  return out;
}

MixedCoeffs mixed_coeffs(const Vec3& v_i, const Vec3& v_j, double sigma, double kappa1, double g) {
  check_speed(v_i, "v_i");
  check_speed(v_j, "v_j");
  if (!(sigma > 0) || !(sigma < kappa1)) fail(ErrorKind::window, "need 0 < sigma < kappa1");
  MixedCoeffs out;
  const Vec3 dv = v_j - v_i;
  out.h = [=](const Vec3& k) { return g * k.dot(dv) / ((1 - k.dot(v_j)) * (1 - k.dot(v_i))); };
  if (dv.norm() == 0.0 || g == 0.0) return out;
  auto h = out.h;
  auto outer = [&](double mu) {
    double st = std::sqrt(std::max(0.0, 1 - mu * mu));
    auto f = [&](double az) {
      double v = h(Vec3(st * std::cos(az), st * std::sin(az), mu));
      return v * v;
    };
    return quad::integrate(f, 0.0, 2 * M_PI, 1e-13, 1e-18, 4).value;
  };
  out.angular = quad::integrate(outer, -1.0, 1.0, 1e-12, 1e-18, 2).value;
  out.C = 0.5 * std::log(kappa1 / sigma) * out.angular;
  return out;
}

OverlapDecay coherent_overlap_decay(const Vec3& v_i, const Vec3& v_j, double lo, double hi,
                                    const PhysParams& p, const ModeGrid& grid,
                                    const FockBasis& basis, int dressing_order) {
  DressingSpec di = make_dressing(p, grid, lo, hi, v_i);
  DressingSpec dj = make_dressing(p, grid, lo, hi, v_j);
  State vac = vacuum_state(basis);
  WeylResult wi = apply_weyl(dressing_generator(di, grid, basis), vac, dressing_order);
  WeylResult wj = apply_weyl(dressing_generator(dj, grid, basis), vac, dressing_order);
  OverlapDecay out;
  out.overlap = wi.state.dot(wj.state);
  MixedCoeffs mc = mixed_coeffs(v_i, v_j, std::max(lo, 1e-300), std::max(hi, 2 * lo), p.g);
  for (int m : grid.window(lo, hi)) {
    const Mode& md = grid.modes[m];
    double k = md.norm();
    double h = mc.h(md.k / k);
    out.C_discrete += md.w * h * h / (2 * k * k * k);
  }
  out.predicted = std::exp(-out.C_discrete / 2);
  out.error = std::abs(out.overlap - out.predicted);
  out.norm_deviation = std::max(wi.norm_deviation, wj.norm_deviation);
  out.inflated = out.norm_deviation > 1e-8;
  return out;
}

PartitionSpec build_partition(double L, double log2_t, double eps_part, const VelocityField& vel,
                              int max_level) {
  if (!(L > 0)) fail(ErrorKind::config, "partition box side must be > 0");
  if (!(log2_t > 0)) fail(ErrorKind::config, "partition needs t > 1");
  if (!(eps_part > 0)) fail(ErrorKind::config, "eps_part must be > 0");
  PartitionSpec p;
  p.L = L;
  p.log2_t = log2_t;
  p.eps_part = eps_part;
  p.n = static_cast<int>(std::floor(eps_part * log2_t + 1e-12));
  if (p.n > max_level)
    fail(ErrorKind::budget, "partition level " + std::to_string(p.n) + " exceeds " +
                                std::to_string(max_level));
  const int per = 1 << p.n;
  p.side = L / per;
  for (int ix = 0; ix < per; ++ix)
    for (int iy = 0; iy < per; ++iy)
      for (int iz = 0; iz < per; ++iz) {
        Vec3 c(-L / 2 + (ix + 0.5) * p.side, -L / 2 + (iy + 0.5) * p.side,
               -L / 2 + (iz + 0.5) * p.side);
        p.centers.push_back(c);
        Vec3 v = Vec3::Constant(std::nan(""));
        bool bad = false;
        try {
          v = vel(c);
          bad = !(v.norm() < 1);
        } catch (const Error&) {
          bad = true;
        }
        p.velocities.push_back(v);
        p.flagged.push_back(bad);
      }
  return p;
}

}  // namespace nelson
