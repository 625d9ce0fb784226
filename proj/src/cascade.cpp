#include "nelson/cascade.hpp"

#include <algorithm>
#include <cmath>

#include "nelson/dispersion.hpp"

namespace nelson {

void validate(const CascadeConfig& cfg) {
  validate(cfg.params);
  auto bad = [](const std::string& what) { fail(ErrorKind::config, what); };
  if (cfg.J < 1) bad("cascade needs J >= 1");
  if (cfg.n_max < 1) bad("n_max must be >= 1");
  if (cfg.cells_per_window < 1) bad("cells_per_window must be >= 1");
  if (!(cfg.tol > 0)) bad("eigensolver tolerance must be > 0");
  if (cfg.max_iter < 1) bad("max_iter must be >= 1");
  if (cfg.dressing_order < 1) bad("dressing_order must be >= 1");
  if (cfg.n_quad < 8) bad("n_quad must be >= 8");
  if (cfg.n_neumann < 1) bad("n_neumann must be >= 1");
  if (!(cfg.phase_floor > 0)) bad("phase_floor must be > 0");
  if (!(cascade_sigma(cfg.params.eps, 0) < cfg.params.kappa))
    bad("sigma_0 = sqrt(eps) must lie below kappa");
  angular_rule(cfg.angular_rule);
}

double cascade_sigma(double eps, int j) { return std::pow(eps, (j + 1) / 2.0); }

namespace {

std::vector<double> cascade_edges(const CascadeConfig& cfg, int lowest) {
  std::vector<double> edges;
  for (int j = lowest; j >= 0; --j) edges.push_back(cascade_sigma(cfg.params.eps, j));
  edges.push_back(cfg.params.kappa);
  return edges;
}

}  // namespace

ModeGrid cascade_grid(const CascadeConfig& cfg) {
  return build_grid_edges(cascade_edges(cfg, cfg.J + 1), cfg.cells_per_window, cfg.angular_rule);
}

StepSpace step_space(const CascadeConfig& cfg, const ModeGrid& full, int j) {
  const double lo = cascade_sigma(cfg.params.eps, j + 1);
  StepSpace s;
  if (cfg.grid_policy == GridPolicy::fixed) {
    s.modes = full.window(lo * (1 - 1e-12), full.kappa);
    s.grid = subgrid(full, s.modes);
  } else {
    s.grid = build_grid_edges(cascade_edges(cfg, j + 1), cfg.cells_per_window, cfg.angular_rule);
    for (const Mode& md : s.grid.modes) {
      int hit = -1;
      for (std::size_t m = 0; m < full.size(); ++m)
        if ((full.modes[m].k - md.k).norm() <= 1e-12 * full.kappa) hit = static_cast<int>(m);
      if (hit < 0) fail(ErrorKind::window, "refined step grid has a mode absent from the cascade grid");
      s.modes.push_back(hit);
    }
  }
  s.grid.sigma = std::min(s.grid.sigma, lo);
  s.basis = enumerate_basis(static_cast<int>(s.modes.size()), cfg.n_max, cfg.budget);
  return s;
}

PhaseFixed fix_phase(const State& state, const FockBasis& basis, double floor) {
  if (basis.size() == 0 || state.size() == 0) fail(ErrorKind::phase_undefined, "empty state");
  cplx ov = state[0];  // vacuum sits at index 0
  double a = std::abs(ov);
  if (!(a > floor))
    fail(ErrorKind::phase_undefined, "vacuum overlap " + std::to_string(a) + " below floor " +
                                         std::to_string(floor));
  PhaseFixed out;
  out.phase = std::conj(ov) / a;
  out.state = state * out.phase;
  out.state[0] = cplx(std::abs(out.state[0]), 0.0);
  return out;
}

double aligned_distance(const State& a, const State& b) {
  cplx ov = b.dot(a);  // <b, a>
  cplx phase = std::abs(ov) > 0 ? ov / std::abs(ov) : cplx(1.0);
  return (a - phase * b).norm();
}

double q_constant(double eps) {
  double s = std::sqrt(eps);
  double r = 11 * s / (10 - 11 * s);
  return std::sqrt(1 + r * r);
}

std::vector<LedgerEntry> check_gap_bounds(const CascadeReport& report) {
  std::vector<LedgerEntry> out;
  const double eps = report.config.params.eps;
  for (const auto& r : report.records) {
    double next = cascade_sigma(eps, r.j + 1);
    out.push_back(ledger_entry("gap_thm15", "gap_j >= sigma_{j+1}/2", r.gap - 0.5 * next, r.j));
    out.push_back(ledger_entry("gap_lemma12", "gap_j >= (3/5) sigma_{j+1}", r.gap - 0.6 * next, r.j));
  }
  return out;
}

ConvergenceFit fit_convergence(const CascadeReport& report) {
  std::vector<double> x;
  for (std::size_t j = 0; j < report.diffs_raw.size(); ++j)
    x.push_back(report.records.at(j).sigma);
  // differences below the eigensolver accuracy are noise, not data
  const double floor = std::max(1e-12, 100 * report.config.tol);
  ConvergenceFit f;
  f.raw = fit_power_law(x, report.diffs_raw, floor);
  f.dressed = fit_power_law(x, report.diffs_dressed, floor);
  return f;
}

NeumannCheck check_neumann_step(const CascadeConfig& cfg, int j) {
  NeumannCheck out;
  out.j = j;
  try {
    ModeGrid full = cascade_grid(cfg);
    StepSpace ss = step_space(cfg, full, j);
    const double sj = cascade_sigma(cfg.params.eps, j);
    const double sj1 = cascade_sigma(cfg.params.eps, j + 1);
    Op base = assemble_fiber_hamiltonian(cfg.params, ss.grid, ss.basis, sj);
    Op dH = window_field(cfg.params, ss.grid, ss.basis, sj1, sj);
    Op next;
    next.mat = base.mat + dH.mat;
    next.hermitian = true;
    out.dim = static_cast<int>(ss.basis.size());
    EigResult e0 = lowest_pair(base, cfg.tol, cfg.max_iter);
    EigResult e1 = lowest_pair(next, cfg.tol, cfg.max_iter);
    ContourSpec spec;
    spec.center = e0.E0;
    spec.radius = 0.55 * sj1;
    spec.n_quad = cfg.n_quad;
    spec.n_neumann = cfg.n_neumann;
    NeumannResult nr = neumann_projector_apply(base, dH, spec, e0.v0, cfg.n_neumann, 1e-12,
                                               cfg.threads);
    out.term_norms = nr.term_norms;
    out.fitted_ratio = nr.fitted_ratio;
    double n = nr.state.norm();
    if (!(n > 0)) fail(ErrorKind::divergence, "projected vector vanishes");
    out.distance = aligned_distance(nr.state / n, e1.v0.normalized());
    if (out.dim <= cfg.kato_dim_limit) out.kato = kato_smallness(base, dH, spec);
    out.ok = true;
  } catch (const Error& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

namespace {

struct StepSolve {
  StepSpace space;
  EigResult eig;
};

StepSolve solve_step(const CascadeConfig& cfg, const PhysParams& p, const ModeGrid& full, int j) {
  StepSolve s;
  s.space = step_space(cfg, full, j);
  Op H = assemble_fiber_hamiltonian(p, s.space.grid, s.space.basis, cascade_sigma(p.eps, j));
  s.eig = lowest_pair(H, cfg.tol, cfg.max_iter);
  return s;
}

}  // namespace

GapScan scan_gap_acceptance(const CascadeConfig& cfg, std::vector<double> g_values) {
  std::sort(g_values.begin(), g_values.end());
  GapScan out;
  ModeGrid full = cascade_grid(cfg);
  bool prefix = true;
  for (double g : g_values) {
    PhysParams p = cfg.params;
    p.g = g;
    double worst = INFINITY;
    try {
      for (int j = 0; j <= cfg.J; ++j) {
        StepSolve s = solve_step(cfg, p, full, j);
        worst = std::min(worst, s.eig.E1 - s.eig.E0 - 0.5 * cascade_sigma(p.eps, j + 1));
      }
    } catch (const Error&) {
      worst = std::nan("");
    }
    out.g.push_back(g);
    out.min_margin.push_back(worst);
    if (prefix && worst >= 0)
      out.g_accept = g;
    else
      prefix = false;
  }
  return out;
}

CascadeReport run_cascade(const CascadeConfig& cfg) {
  validate(cfg);
  CascadeReport rep;
  rep.config = cfg;
  rep.warnings = validate(cfg.params);
  rep.approximate_embedding = cfg.grid_policy == GridPolicy::refine;
  if (rep.approximate_embedding)
    rep.warnings.push_back("refine-per-step grid: states embedded by zero padding (approximate)");
  rep.grid = cascade_grid(cfg);
  const PhysParams& p = cfg.params;
  FockBasis full = enumerate_basis(static_cast<int>(rep.grid.size()), cfg.n_max, cfg.budget);

  bool phase_ok = true;
  for (int j = 0; j <= cfg.J; ++j) {
    GroundStateRecord r;
    r.j = j;
    r.sigma = cascade_sigma(p.eps, j);
    try {
      StepSolve s = solve_step(cfg, p, rep.grid, j);
      r.E = s.eig.E0;
      r.gap = s.eig.E1 - s.eig.E0;
      r.residual = s.eig.residual;
      r.iterations = s.eig.iterations;
      r.degenerate = s.eig.degenerate;
      if (r.degenerate) {
        phase_ok = false;
        rep.warnings.push_back("degenerate ground state at step " + std::to_string(j) +
                               "; phase-dependent entries skipped");
        rep.records.push_back(r);
        continue;
      }
      r.gradE = gradient_hf(s.eig, p, s.space.grid, s.space.basis);
      State raw = embed_state(s.eig.v0.normalized(), s.space.basis, full, s.space.modes);
      r.state_raw = fix_phase(raw, full, cfg.phase_floor).state;
      DressingSpec d = make_dressing(p, rep.grid, r.sigma, p.kappa, r.gradE);
      WeylResult w = apply_weyl(dressing_generator(d, rep.grid, full), r.state_raw, cfg.dressing_order);
      r.dressing_norm_defect = w.norm_deviation;
      PhaseFixed pf = fix_phase(w.state, full, cfg.phase_floor);
      r.state_dressed = pf.state;
      r.phase_applied = pf.phase;
      r.vacuum_overlap = pf.state[0];
    } catch (const Error& e) {
      rep.aborted = true;
      rep.abort_reason = "step " + std::to_string(j) + ": " + e.what();
      break;
    }
    rep.records.push_back(r);
  }

  const int n = static_cast<int>(rep.records.size());
  for (int j = 0; j + 1 < n; ++j) {
    const auto& a = rep.records[j];
    const auto& b = rep.records[j + 1];
    if (a.degenerate || b.degenerate) {
      rep.diffs_raw.push_back(std::nan(""));
      rep.diffs_dressed.push_back(std::nan(""));
      continue;
    }
    rep.diffs_raw.push_back(aligned_distance(a.state_raw, b.state_raw));
    rep.diffs_dressed.push_back(aligned_distance(a.state_dressed, b.state_dressed));
  }

  for (int j = 0; j + 1 < n; ++j) {
    const double Ej = rep.records[j].E, En = rep.records[j + 1].E;
    const double lower = Ej - 40 * M_PI * p.g * p.g * rep.records[j].sigma;
    // equal energies at g = 0 differ only by eigensolver rounding
    LedgerEntry e = ledger_entry("lemma13", "E_j - 40 pi g^2 sigma_j <= E_{j+1} <= E_j",
                                 std::min(Ej - En, En - lower), j);
    e.pass = e.margin >= -10 * cfg.tol * std::max(1.0, std::abs(Ej));
    rep.ledger.push_back(e);
  }
  for (auto& e : check_gap_bounds(rep)) rep.ledger.push_back(e);

  if (phase_ok) {
    for (int j = 0; j + 1 < n; ++j) {
      double margin = rep.diffs_raw[j] - rep.diffs_dressed[j];
      LedgerEntry e = ledger_entry("dressed_vs_raw", "d_j^w < d_j", margin, j);
      e.pass = margin > 0;
      rep.ledger.push_back(e);
    }
    for (const auto& r : rep.records) {
      rep.ledger.push_back(ledger_entry("dressing_norm", "| ||W psi|| - 1 | <= 1e-10",
                                        1e-10 - r.dressing_norm_defect, r.j));
      rep.ledger.push_back(ledger_entry("phase", "|Im <Omega, phi_j>| <= 1e-12, Re >= 0",
                                        std::min(1e-12 - std::abs(r.vacuum_overlap.imag()),
                                                 r.vacuum_overlap.real()),
                                        r.j));
    }
    try {
      rep.fit = fit_convergence(rep);
      double margin = rep.fit.dressed.saturated ? 0.0 : rep.fit.dressed.exponent - 1.0 / 16;
      rep.ledger.push_back(ledger_entry("cauchy_fit", "dressed exponent >= 1/16", margin));
    } catch (const Error& e) {
      rep.warnings.push_back(std::string("convergence fit: ") + e.what());
      rep.ledger.push_back(ledger_entry("cauchy_fit", "dressed exponent >= 1/16", std::nan("")));
    }
  }

  if (cfg.run_neumann) {
    for (int j = 0; j + 1 < n; ++j) {
      NeumannCheck c = check_neumann_step(cfg, j);
      if (!c.ok) {
        rep.warnings.push_back("Neumann check at step " + std::to_string(j) + " (g = " +
                               std::to_string(p.g) + "): " + c.error);
        rep.ledger.push_back(ledger_entry("neumann_ratio", "fitted term ratio < 1/12", std::nan(""), j));
      } else {
        rep.ledger.push_back(
            ledger_entry("neumann_ratio", "fitted term ratio < 1/12", 1.0 / 12 - c.fitted_ratio, j));
        rep.ledger.push_back(ledger_entry("neumann_distance", "|psi_Neumann - psi_eig| <= tol",
                                          cfg.neumann_distance_tol - c.distance, j));
        if (c.kato >= 0)
          rep.ledger.push_back(ledger_entry("kato", "||R^1/2 dH R^1/2|| < 1", 1.0 - c.kato, j));
      }
      rep.neumann.push_back(std::move(c));
    }
  }

  if (!cfg.g_scan.empty()) {
    GapScan gs = scan_gap_acceptance(cfg, cfg.g_scan);
    rep.g_accept = gs.g_accept;
  }
  return rep;
}

}  // namespace nelson
