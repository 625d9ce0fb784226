#include "nelson/hamiltonian.hpp"

#include <cmath>
#include <sstream>

namespace nelson {

std::vector<std::string> validate(const PhysParams& p) {
  std::vector<std::string> warn;
  auto bad = [](const std::string& what) { fail(ErrorKind::config, what); };
  if (!(p.g >= 0)) bad("g must be >= 0");
  if (!(p.m > 0)) bad("m must be > 0");
  if (!(p.kappa > 0)) bad("kappa must be > 0");
  if (!(p.kappa1 > 0) || !(p.kappa1 <= p.kappa)) bad("need 0 < kappa1 <= kappa");
  if (!(p.eps > 0) || !(p.eps < 0.25)) bad("need 0 < eps < 1/4");
  if (!(p.m_r > 0)) bad("m_r must be > 0");
  if (!p.P.allFinite()) bad("P must be finite");

  const double eps_strict = std::pow(0.25, 16);
  const double m_strict = 25.0 * std::pow(4.0, 20);
  const bool coupling_ok = 2 * M_PI * p.g * p.g * p.kappa <= 0.25;
  const bool eps_ok = p.eps < eps_strict;
  const bool mass_ok = p.m > m_strict;
  const bool sigma_ok = p.P.norm() <= std::sqrt(p.m);
  if (p.strict_paper_regime) {
    if (!coupling_ok) bad("strict regime: 2*pi*g^2*kappa <= 1/4 violated");
    if (!eps_ok) bad("strict regime: eps < (1/4)^16 violated");
    if (!mass_ok) bad("strict regime: m > 25*4^20 violated");
    if (!sigma_ok) bad("strict regime: |P| <= sqrt(m) violated");
  } else {
    if (!coupling_ok) warn.push_back("2*pi*g^2*kappa exceeds 1/4");
    if (!eps_ok) warn.push_back("eps outside the strict range (1/4)^16, relaxed regime");
    if (!mass_ok) warn.push_back("m below the strict bound 25*4^20, relaxed regime");
    if (!sigma_ok) warn.push_back("|P| exceeds sqrt(m)");
  }
  return warn;
}

namespace {

void check_window(const ModeGrid& grid, double lo, double hi) {
  const double tol = 1e-12 * grid.kappa;
  if (!(lo >= grid.sigma - tol) || !(hi <= grid.kappa + tol) || !(lo <= hi))
    fail(ErrorKind::window, "window [" + std::to_string(lo) + ", " + std::to_string(hi) +
                                "] outside grid shell [" + std::to_string(grid.sigma) + ", " +
                                std::to_string(grid.kappa) + "]");
}

void check_velocity(const Vec3& v) {
  if (!(v.norm() < 1.0))
    fail(ErrorKind::velocity_domain, "|v| = " + std::to_string(v.norm()) + " must be < 1");
}

}  // namespace

std::vector<double> coupling_amplitudes(const PhysParams& p, const ModeGrid& grid, double sigma,
                                        double hi) {
  std::vector<double> g(grid.size(), 0.0);
  for (int m : grid.window(sigma, hi)) {
    const Mode& md = grid.modes[m];
    g[m] = p.g * std::sqrt(md.w) / std::sqrt(2.0 * md.norm());
  }
  return g;
}

DressingSpec make_dressing(const PhysParams& p, const ModeGrid& grid, double lo, double hi,
                           const Vec3& v) {
  check_velocity(v);
  check_window(grid, lo, hi);
  DressingSpec d;
  d.v = v;
  d.lo = lo;
  d.hi = hi;
  d.f.assign(grid.size(), 0.0);
  for (int m : grid.window(lo, hi)) {
    const Mode& md = grid.modes[m];
    double k = md.norm();
    d.f[m] = p.g * std::sqrt(md.w) / (std::sqrt(2.0) * std::pow(k, 1.5) * (1.0 - md.k.dot(v) / k));
  }
  return d;
}

Op window_field(const PhysParams& p, const ModeGrid& grid, const FockBasis& basis, double lo,
                double hi) {
  check_window(grid, lo, hi);
  return field_from_amplitudes(basis, coupling_amplitudes(p, grid, lo, hi));
}

Op assemble_fiber_hamiltonian(const PhysParams& p, const ModeGrid& grid, const FockBasis& basis,
                              double sigma) {
  check_window(grid, sigma, p.kappa);
  Op h = window_field(p, grid, basis, sigma, p.kappa);
  Op diag = diagonal_op(basis, [&](const Occupation& o) {
    Vec3 pm = Vec3::Zero();
    double e = 0;
    for (std::size_t m = 0; m < o.size(); ++m) {
      if (o[m] == 0) continue;
      pm += o[m] * grid.modes[m].k;
      e += o[m] * grid.modes[m].norm();
    }
    double kin = p.recoil ? (p.P - pm).squaredNorm() : p.P.squaredNorm() - 2.0 * p.P.dot(pm);
    return kin / (2.0 * p.m) + e;
  });
  // diag_op drops exact zeros; the vacuum entry P^2/2m may vanish, which is fine
  h.mat += diag.mat;
  h.mat.makeCompressed();
  h.hermitian = true;
  return h;
}

double ground_constant(const PhysParams& p, const ModeGrid& grid, double sigma, const Vec3& v) {
  check_velocity(v);
  double acc = 0;
  for (const Mode& md : grid.modes) {
    double lo = std::max(md.r_lo, sigma), hi = std::min(md.r_hi, p.kappa);
    if (hi <= lo) continue;
    acc += md.omega * (hi - lo) / (2.0 * (1.0 - md.k.normalized().dot(v)));
  }
  return p.P.squaredNorm() / (2 * p.m) - p.g * p.g * acc;
}

double mode_sum_constant(const PhysParams& p, const ModeGrid& grid, double sigma, const Vec3& v) {
  check_velocity(v);
  double acc = 0;
  for (int m : grid.window(sigma, p.kappa)) {
    const Mode& md = grid.modes[m];
    double k = md.norm();
    acc += md.w / (2 * k * k * (1.0 - md.k.dot(v) / k));
  }
  return p.P.squaredNorm() / (2 * p.m) - p.g * p.g * acc;
}

Vec3 dressing_momentum_shift(const ModeGrid& grid, const DressingSpec& d) {
  Vec3 K = Vec3::Zero();
  for (std::size_t m = 0; m < grid.size(); ++m) K += grid.modes[m].k * d.f[m] * d.f[m];
  return K;
}

Op dressing_generator(const DressingSpec& spec, const ModeGrid& grid, const FockBasis& basis) {
  check_velocity(spec.v);
  if (spec.f.size() != grid.size()) fail(ErrorKind::config, "dressing profile size mismatch");
  return skew_from_amplitudes(basis, spec.f);
}

WeylResult apply_weyl(const Op& generator, const State& psi, int order) {
  if (order < 1) fail(ErrorKind::config, "dressing order must be >= 1");
  WeylResult out;
  const double ref = psi.norm();
  out.state = psi;
  State term = psi;
  double prev = ref;
  int n = 1;
  for (; n <= order; ++n) {
    State next = generator.mat * term;
    term = next * (-1.0 / n);
    double tn = term.norm();
    out.state += term;
    out.last_term_norm = tn;
    if (n > order / 2 && tn > prev && tn > 1e-17 * ref)
      fail(ErrorKind::truncation, "exponential series not converging: term " + std::to_string(n) +
                                      " norm " + std::to_string(tn));
    prev = tn;
    if (tn <= 1e-17 * ref) break;
  }
  if (n > order && out.last_term_norm > 1e-12 * ref)
    fail(ErrorKind::truncation, "exponential series unconverged after " + std::to_string(order) +
                                    " terms, last term norm " + std::to_string(out.last_term_norm));
  out.terms = std::min(n, order);
  out.norm_deviation = std::abs(out.state.norm() - ref);
  return out;
}

std::array<Op, 3> dressed_momentum(const ModeGrid& grid, const FockBasis& basis,
                                   const DressingSpec& d) {
  CompositeOps c = composite_ops(grid, basis);
  std::array<Op, 3> pi;
  for (int i = 0; i < 3; ++i) {
    std::vector<double> amp(grid.size());
    for (std::size_t m = 0; m < grid.size(); ++m) amp[m] = grid.modes[m].k[i] * d.f[m];
    Op field = field_from_amplitudes(basis, amp);
    pi[i].mat = c.meson_momentum[i].mat - field.mat;
    pi[i].mat.makeCompressed();
    pi[i].hermitian = true;
  }
  return pi;
}

Vec3 consistent_mean_pi(const PhysParams& p, const ModeGrid& grid, double sigma, const Vec3& v) {
  DressingSpec d = make_dressing(p, grid, sigma, p.kappa, v);
  return p.P - dressing_momentum_shift(grid, d) - p.m * v;
}

Op assemble_dressed_hamiltonian(const PhysParams& p, const ModeGrid& grid, const FockBasis& basis,
                                double sigma, const Vec3& v, const Vec3& mean_pi) {
  DressingSpec d = make_dressing(p, grid, sigma, p.kappa, v);
  auto pi = dressed_momentum(grid, basis, d);
  const auto dim = static_cast<Eigen::Index>(basis.size());
  Eigen::SparseMatrix<cplx> id(dim, dim);
  id.setIdentity();
  Eigen::SparseMatrix<cplx> h(dim, dim);
  for (int i = 0; i < 3; ++i) {
    Eigen::SparseMatrix<cplx> shifted = pi[i].mat - mean_pi[i] * id;
    Eigen::SparseMatrix<cplx> sq = shifted * shifted;
    h += sq * (0.5 / p.m);
  }
  Op tilted = diagonal_op(basis, [&](const Occupation& o) {
    double e = 0;
    for (std::size_t m = 0; m < o.size(); ++m)
      if (o[m]) e += o[m] * (grid.modes[m].norm() - grid.modes[m].k.dot(v));
    return e;
  });
  Vec3 K = dressing_momentum_shift(grid, d);
  double c = mode_sum_constant(p, grid, sigma, v) - (K + mean_pi).squaredNorm() / (2 * p.m);
  h += tilted.mat;
  h += c * id;
  Op out;
  out.mat = h;
  return hermitize(out);
}

}  // namespace nelson
