#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nelson/eigensolver.hpp"
#include "nelson/hamiltonian.hpp"
#include "nelson/report.hpp"

namespace nelson {

enum class GridPolicy { fixed, refine };

struct CascadeConfig {
  PhysParams params;
  int J = 6;
  GridPolicy grid_policy = GridPolicy::fixed;
  int cells_per_window = 1;
  std::string angular_rule = "antipodal2";
  int n_max = 3;
  std::size_t budget = default_basis_budget;
  double tol = 1e-11;
  int max_iter = 4000;
  int dressing_order = 60;
  int n_quad = 64;
  int n_neumann = 8;
  double neumann_distance_tol = 1e-6;
  double phase_floor = 1e-8;
  int kato_dim_limit = 1200;
  bool run_neumann = true;
  std::vector<double> g_scan;
  int threads = 1;
};

void validate(const CascadeConfig& cfg);

// sigma_j = eps^{(j+1)/2}
double cascade_sigma(double eps, int j);

// Grid whose cell edges include every sigma_j, j = 0..J+1, and kappa.
ModeGrid cascade_grid(const CascadeConfig& cfg);

struct GroundStateRecord {
  int j = 0;
  double sigma = 0;
  double E = 0;
  double gap = 0;
  Vec3 gradE = Vec3::Zero();
  State state_raw;
  State state_dressed;
  cplx vacuum_overlap = 0;
  cplx phase_applied = 1;
  double dressing_norm_defect = 0;
  double residual = 0;
  int iterations = 0;
  bool degenerate = false;
};

struct NeumannCheck {
  int j = 0;
  bool ok = false;
  std::string error;
  double distance = 0;
  double fitted_ratio = 0;
  std::vector<double> term_norms;
  double kato = -1;  // negative when skipped
  int dim = 0;
};

struct ConvergenceFit {
  PowerFit raw;
  PowerFit dressed;
};

struct CascadeReport {
  CascadeConfig config;
  ModeGrid grid;
  std::vector<GroundStateRecord> records;
  std::vector<double> diffs_raw;
  std::vector<double> diffs_dressed;
  ConvergenceFit fit;
  std::vector<NeumannCheck> neumann;
  std::optional<double> g_accept;
  std::vector<LedgerEntry> ledger;
  std::vector<std::string> warnings;
  bool aborted = false;
  bool approximate_embedding = false;
  std::string abort_reason;
};

CascadeReport run_cascade(const CascadeConfig& cfg);

struct PhaseFixed {
  State state;
  cplx phase;
};

PhaseFixed fix_phase(const State& state, const FockBasis& basis, double floor = 1e-8);

// min over theta of |a - e^{i theta} b|
double aligned_distance(const State& a, const State& b);

std::vector<LedgerEntry> check_gap_bounds(const CascadeReport& report);

ConvergenceFit fit_convergence(const CascadeReport& report);

NeumannCheck check_neumann_step(const CascadeConfig& cfg, int j);

struct GapScan {
  std::vector<double> g;
  std::vector<double> min_margin;  // min_j gap_j - sigma_{j+1}/2
  std::optional<double> g_accept;
};

GapScan scan_gap_acceptance(const CascadeConfig& cfg, std::vector<double> g_values);

// sqrt(1 + (11 sqrt(eps) / (10 - 11 sqrt(eps)))^2)
double q_constant(double eps);

// Restricted problem of step j: modes >= sigma_{j+1}, interaction [sigma_j, kappa].
struct StepSpace {
  ModeGrid grid;
  FockBasis basis;
  std::vector<int> modes;  // indices into the cascade grid
};

StepSpace step_space(const CascadeConfig& cfg, const ModeGrid& full, int j);

}  // namespace nelson
