#pragma once

#include <string>
#include <vector>

#include "nelson/fock.hpp"

namespace nelson {

struct PhysParams {
  double g = 0.0;
  double m = 1.0;
  double kappa = 1.0;
  double kappa1 = 0.1;
  double eps = 0.2;
  Vec3 P = Vec3::Zero();
  double m_r = 1.0;
  bool strict_paper_regime = false;
  bool recoil = true;  // keep the (P^mes)^2/2m term
};

// Throws config error on violations; returns warnings for relaxed-mode departures.
std::vector<std::string> validate(const PhysParams& p);

struct DressingSpec {
  Vec3 v = Vec3::Zero();
  double lo = 0, hi = 0;
  std::vector<double> f;  // per grid mode, zero outside the window
};

// f_m = g sqrt(w_m) / (sqrt(2) |k_m|^{3/2} (1 - k_m.v/|k_m|)) on the window [lo, hi]
DressingSpec make_dressing(const PhysParams& p, const ModeGrid& grid, double lo, double hi,
                           const Vec3& v);

// g_m = g sqrt(w_m) / sqrt(2 |k_m|) for modes in [sigma, kappa], zero elsewhere
std::vector<double> coupling_amplitudes(const PhysParams& p, const ModeGrid& grid, double sigma,
                                        double hi);

Op assemble_fiber_hamiltonian(const PhysParams& p, const ModeGrid& grid, const FockBasis& basis,
                              double sigma);

// The interaction alone on the frequency window [lo, hi].
Op window_field(const PhysParams& p, const ModeGrid& grid, const FockBasis& basis, double lo,
                double hi);

// P^2/2m - g^2 int_{sigma}^{kappa} d^3k / (2|k|^2 (1 - khat.v)): angular rule of the grid,
// radial integral exact per cell.
double ground_constant(const PhysParams& p, const ModeGrid& grid, double sigma, const Vec3& v);

// Same constant on the discrete measure (node values times cell volumes); this is the value an
// exact conjugation of the discrete Hamiltonian produces.
double mode_sum_constant(const PhysParams& p, const ModeGrid& grid, double sigma, const Vec3& v);

// K = sum_m k_m f_m^2
Vec3 dressing_momentum_shift(const ModeGrid& grid, const DressingSpec& d);

Op dressing_generator(const DressingSpec& spec, const ModeGrid& grid, const FockBasis& basis);

struct WeylResult {
  State state;
  double norm_deviation = 0;
  int terms = 0;
  double last_term_norm = 0;
};

// exp(-A) psi by its Taylor series, stopping once a term falls below 1e-17 relative.
WeylResult apply_weyl(const Op& generator, const State& psi, int order);

// Pi = P^mes - sum_m k_m f_m (b_m + b_m^dagger), per component
std::array<Op, 3> dressed_momentum(const ModeGrid& grid, const FockBasis& basis,
                                   const DressingSpec& d);

// (Pi - mean_pi)^2/2m + sum (|k| - k.v) b^dagger b + c, with
// c = mode_sum_constant - (K + mean_pi)^2/2m. Dressing window [sigma, kappa].
Op assemble_dressed_hamiltonian(const PhysParams& p, const ModeGrid& grid, const FockBasis& basis,
                                double sigma, const Vec3& v, const Vec3& mean_pi);

// mean_pi at which the direct assembly coincides with W H W^dagger: P - K - m v
Vec3 consistent_mean_pi(const PhysParams& p, const ModeGrid& grid, double sigma, const Vec3& v);

}  // namespace nelson
