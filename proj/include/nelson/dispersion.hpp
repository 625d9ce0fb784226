#pragma once

#include <vector>

#include "nelson/eigensolver.hpp"
#include "nelson/hamiltonian.hpp"
#include "nelson/report.hpp"

namespace nelson {

// (P - <P^mes>)/m on the normalized ground vector
Vec3 gradient_hf(const EigResult& ground, const PhysParams& p, const ModeGrid& grid,
                 const FockBasis& basis);

struct SolverOptions {
  double tol = 1e-12;
  int max_iter = 4000;
  int threads = 1;
};

// Fiber problem at cutoff sigma restricted to the modes with |k| >= sigma; the modes below
// decouple from the ground state, so E and its gradient are those of the full grid.
struct FiberProblem {
  PhysParams params;
  ModeGrid grid;
  FockBasis basis;
  double sigma = 0;
};

FiberProblem fiber_problem(const PhysParams& p, const ModeGrid& grid, int n_max, double sigma,
                           std::size_t budget = default_basis_budget);

struct PointSolve {
  Vec3 P;
  double E = 0;
  double gap = 0;
  Vec3 gradE = Vec3::Zero();
  EigResult eig;
};

PointSolve solve_point(const FiberProblem& fp, const Vec3& P, const SolverOptions& opt);

// central differences of E(P), step h per coordinate
Vec3 gradient_fd(const FiberProblem& fp, const Vec3& P, double h, const SolverOptions& opt);

struct DispersionRow {
  Vec3 P;
  double sigma = 0;
  double E = 0;
  Vec3 gradE = Vec3::Zero();
  double gap = 0;
  bool ok = true;
};

struct DispersionScan {
  std::vector<Vec3> P;
  std::vector<double> sigma;
  std::vector<DispersionRow> rows;
  double g = 0;
  double m = 1;
  double kappa = 1;
  // per sigma: sum_m g_m^2/|k_m|, the exact lower bound of H_f + phi on the grid
  std::vector<double> binding;
};

// rows ordered sigma-major, then P
DispersionScan scan_dispersion(const PhysParams& p, const ModeGrid& grid, int n_max,
                               const std::vector<Vec3>& Ps, const std::vector<double>& sigmas,
                               const SolverOptions& opt);

struct VelocityCheck {
  double max_velocity = 0;
  double margin = 0;           // 1 - max
  double min_chain_margin = 0;  // min over rows of sqrt(2/m)(E + binding)^{1/2} - |gradE|
  std::vector<LedgerEntry> ledger;
};

VelocityCheck check_velocity_bound(const DispersionScan& scan);

struct B1Row {
  double radius = 0;
  double sigma = 0;
  double dE = 0;
  double d2E = 0;
  double det_dJ = 0;
};

struct B1Check {
  std::vector<B1Row> rows;
  double m_r = 0;  // smallest constant satisfying both inequalities on every row
  bool finite = false;
  std::vector<LedgerEntry> ledger;
};

// radial derivatives along P = r * direction by 5-point stencils with step h
B1Check check_B1(const PhysParams& p, const ModeGrid& grid, int n_max, const Vec3& direction,
                 const std::vector<double>& radii, const std::vector<double>& sigmas, double h,
                 const SolverOptions& opt);

struct HoelderFit {
  std::vector<double> steps;
  std::vector<double> increments;
  PowerFit fit;
  double bound = 0;  // exponent the fit is compared against
  LedgerEntry entry;
};

// |gradE(P + dP) - gradE(P)| over the supplied increments
HoelderFit hoelder_gradient(const FiberProblem& fp, const Vec3& P, const std::vector<Vec3>& dPs,
                            const SolverOptions& opt);

// phase-aligned distance of the dressed, phase-fixed ground states at P and P + dP
HoelderFit hoelder_state(const FiberProblem& fp, const Vec3& P, const std::vector<Vec3>& dPs,
                         const SolverOptions& opt, int dressing_order = 60);

// dyadic increments base * 2^{-i} along direction, down to min_step
std::vector<Vec3> dyadic_steps(const Vec3& direction, double base, double min_step);

// dressed, phase-fixed ground state W_sigma(gradE) psi
State dressed_ground(const FiberProblem& fp, const PointSolve& s, int dressing_order);

struct FixedPointResult {
  Vec3 v_star = Vec3::Zero();
  std::vector<Vec3> history;
  std::vector<double> step_norms;
  bool converged = false;
  bool diverged = false;
  Vec3 gradient = Vec3::Zero();  // Hellmann-Feynman value it is compared with
  double mismatch = 0;
  bool agrees = false;  // mismatch <= 10 tol
};

FixedPointResult p1_fixed_point(const FiberProblem& fp, double tol, int max_iter,
                                const SolverOptions& opt, double damping = 0.5,
                                int dressing_order = 60);

}  // namespace nelson
