#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nelson/types.hpp"

namespace nelson {

enum class Spacing { geometric, linear };

struct Mode {
  Vec3 k;
  double w = 0;      // cell volume
  double omega = 0;  // solid angle of the angular cell
  double r_lo = 0, r_hi = 0;
  int shell = 0;
  int angular = 0;

  double norm() const { return k.norm(); }
};

struct ModeGrid {
  std::vector<Mode> modes;
  double sigma = 0;
  double kappa = 0;
  Spacing spacing = Spacing::geometric;
  std::string angular_rule;

  std::size_t size() const { return modes.size(); }
  // indices of modes whose node lies in [lo, hi]
  std::vector<int> window(double lo, double hi) const;
};

struct AngularRule {
  std::vector<Vec3> directions;
  std::vector<double> weights;
};

// "single", "antipodal2", "octahedral6", or "glNxM" (Gauss-Legendre in cos(theta) x uniform phi)
AngularRule angular_rule(const std::string& id);

ModeGrid build_grid(double sigma, double kappa, int n_radial, const std::string& rule,
                    Spacing spacing = Spacing::geometric);

// Geometric cells between consecutive edges (ascending), cells_per_interval per interval.
ModeGrid build_grid_edges(const std::vector<double>& edges, int cells_per_interval,
                          const std::string& rule);

// Keep only the modes with index in `keep` (order preserved).
ModeGrid subgrid(const ModeGrid& grid, const std::vector<int>& keep);

using Occupation = std::vector<std::uint8_t>;

struct FockBasis {
  int n_modes = 0;
  int n_max = 0;
  std::vector<Occupation> states;
  std::map<Occupation, std::size_t> index;

  std::size_t size() const { return states.size(); }
  std::optional<std::size_t> find(const Occupation& occ) const;
  int total(std::size_t i) const;
};

inline constexpr std::size_t default_basis_budget = 2'000'000;

double binomial(int n, int k);

FockBasis enumerate_basis(int n_modes, int n_max, std::size_t budget = default_basis_budget);

template <typename Scalar>
struct SparseOperator {
  Eigen::SparseMatrix<Scalar> mat;
  bool hermitian = false;

  Eigen::Index dim() const { return mat.rows(); }
};

using Op = SparseOperator<cplx>;

struct Ladder {
  Op annihilation;
  Op creation;
};

Ladder ladder_ops(const FockBasis& basis, int mode);

struct CompositeOps {
  Op number_total;
  std::array<Op, 3> meson_momentum;
  Op meson_energy;
};

CompositeOps composite_ops(const ModeGrid& grid, const FockBasis& basis);

// F = sum_m conj(a_m) b_m + a_m b_m^dagger, a_m = profile(k_m) sqrt(w_m)
Op smeared_field(const ModeGrid& grid, const FockBasis& basis,
                 const std::function<cplx(const Vec3&)>& profile);

// sum_m c_m (b_m + b_m^dagger) with per-mode real amplitudes (zero entries skipped)
Op field_from_amplitudes(const FockBasis& basis, const std::vector<double>& amp);

// sum_m c_m (b_m - b_m^dagger)
Op skew_from_amplitudes(const FockBasis& basis, const std::vector<double>& amp);

// diagonal operator with entries fn(occupation)
Op diagonal_op(const FockBasis& basis, const std::function<double(const Occupation&)>& fn);

// (A + A^dagger)/2, exact conjugate symmetry of stored entries
Op hermitize(const Op& a);

bool is_hermitian_exact(const Eigen::SparseMatrix<cplx>& m);

// Embed a state from a basis over a subset of modes (sub_modes[i] = mode index in the full basis).
State embed_state(const State& psi, const FockBasis& sub, const FockBasis& full,
                  const std::vector<int>& sub_modes);

State vacuum_state(const FockBasis& basis);

}  // namespace nelson
