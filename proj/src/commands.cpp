#include "nelson/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "nelson/acceptance.hpp"
#include "nelson/dispersion.hpp"
#include "nelson/parallel.hpp"

namespace nelson {

namespace {

std::string fd(double v) { return fmt_double(v); }

std::string join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void write_ledger(const std::string& dir, const std::vector<LedgerEntry>& ledger,
                  const std::string& command, std::ostream& log) {
  write_atomic(join(dir, "ledger_" + command + ".json"), ledger_json(ledger, command));
  int failed = 0;
  for (const auto& e : ledger) failed += !e.pass;
  log << command << ": " << ledger.size() << " ledger entries, " << failed << " failed\n";
}

}  // namespace

int cmd_cascade(const RunConfig& cfg, const std::string& out_dir, int threads, std::ostream& log) {
  CascadeConfig cc = cfg.cascade;
  cc.threads = resolve_threads(threads);
  CascadeReport rep = run_cascade(cc);
  // parameter warnings were already reported at load
  for (const auto& w : rep.warnings)
    if (std::find(cfg.warnings.begin(), cfg.warnings.end(), w) == cfg.warnings.end())
      log << "warning: " << w << "\n";

  auto margin_of = [&](const std::string& name, int j) {
    for (const auto& e : rep.ledger)
      if (e.name == name && e.step == j) return e.margin;
    return std::nan("");
  };
  CsvWriter csv({"j", "sigma", "E", "gap", "grad_norm", "d_raw", "d_dressed", "margin_lemma13",
                 "margin_gap_thm15", "margin_gap_lemma12", "vacuum_overlap", "dressing_norm_defect",
                 "residual", "iterations"});
  for (std::size_t i = 0; i < rep.records.size(); ++i) {
    const auto& r = rep.records[i];
    double dr = i < rep.diffs_raw.size() ? rep.diffs_raw[i] : std::nan("");
    double dw = i < rep.diffs_dressed.size() ? rep.diffs_dressed[i] : std::nan("");
    csv.row({std::to_string(r.j), fd(r.sigma), fd(r.E), fd(r.gap), fd(r.gradE.norm()), fd(dr),
             fd(dw), fd(margin_of("lemma13", r.j)), fd(margin_of("gap_thm15", r.j)),
             fd(margin_of("gap_lemma12", r.j)), fd(r.vacuum_overlap.real()),
             fd(r.dressing_norm_defect), fd(r.residual), std::to_string(r.iterations)});
  }
  write_atomic(join(out_dir, "cascade.csv"), csv.str());

  CsvWriter fit({"kind", "exponent", "prefactor", "saturated", "points"});
  fit.row({"raw", fd(rep.fit.raw.exponent), fd(rep.fit.raw.prefactor),
           std::to_string(rep.fit.raw.saturated), std::to_string(rep.fit.raw.points)});
  fit.row({"dressed", fd(rep.fit.dressed.exponent), fd(rep.fit.dressed.prefactor),
           std::to_string(rep.fit.dressed.saturated), std::to_string(rep.fit.dressed.points)});
  write_atomic(join(out_dir, "cascade_fit.csv"), fit.str());

  if (!rep.neumann.empty()) {
    std::vector<std::string> head = {"j", "dim", "ok", "distance", "fitted_ratio", "kato"};
    for (int n = 1; n <= cc.n_neumann; ++n) head.push_back("term" + std::to_string(n));
    CsvWriter nc(head);
    for (const auto& c : rep.neumann) {
      std::vector<std::string> row = {std::to_string(c.j), std::to_string(c.dim), std::to_string(c.ok),
                                      fd(c.distance), fd(c.fitted_ratio), fd(c.kato)};
      for (int n = 0; n < cc.n_neumann; ++n)
        row.push_back(n < static_cast<int>(c.term_norms.size()) ? fd(c.term_norms[n]) : "nan");
      nc.row(row);
    }
    write_atomic(join(out_dir, "neumann.csv"), nc.str());
  }

  if (!cc.g_scan.empty()) {
    GapScan gs = scan_gap_acceptance(cc, cc.g_scan);
    CsvWriter g({"g", "min_gap_margin"});
    for (std::size_t i = 0; i < gs.g.size(); ++i) g.row({fd(gs.g[i]), fd(gs.min_margin[i])});
    write_atomic(join(out_dir, "gap_scan.csv"), g.str());
    log << "g_accept: " << (gs.g_accept ? fd(*gs.g_accept) : std::string("none")) << "\n";
  }

  write_ledger(out_dir, rep.ledger, "cascade", log);
  if (rep.aborted) {
    log << "error: cascade aborted at " << rep.abort_reason << "\n";
    return 2;
  }
  return 0;
}

int cmd_dispersion(const RunConfig& cfg, const std::string& out_dir, int threads, std::ostream& log) {
  const CascadeConfig& cc = cfg.cascade;
  const DispersionOptions& d = cfg.dispersion;
  const PhysParams& p = cc.params;
  SolverOptions opt;
  opt.tol = std::min(cc.tol, 1e-12);
  opt.max_iter = cc.max_iter;
  opt.threads = resolve_threads(threads);
  const double sm = std::sqrt(p.m);
  ModeGrid grid = cascade_grid(cc);
  std::vector<double> sigmas;
  for (int j : d.sigma_steps) sigmas.push_back(cascade_sigma(p.eps, j));
  const Vec3 dir = d.ray_direction.normalized();

  // momentum grid inside the ball |P| <= sqrt(m), plus the ray
  std::vector<Vec3> Ps;
  const int n = d.grid_points;
  for (int ix = 0; ix < n; ++ix)
    for (int iy = 0; iy < n; ++iy)
      for (int iz = 0; iz < n; ++iz) {
        auto c = [&](int i) { return n == 1 ? 0.0 : sm * (-0.5 + double(i) / (n - 1)); };
        Vec3 P(c(ix), c(iy), c(iz));
        if (P.norm() <= sm) Ps.push_back(P);
      }
  for (double r : d.ray_radii) Ps.push_back(r * sm * dir);

  DispersionScan scan = scan_dispersion(p, grid, cc.n_max, Ps, sigmas, opt);
  CsvWriter tab({"sigma", "Px", "Py", "Pz", "E", "gradEx", "gradEy", "gradEz", "gap", "ok"});
  for (const auto& r : scan.rows)
    tab.row({fd(r.sigma), fd(r.P.x()), fd(r.P.y()), fd(r.P.z()), fd(r.E), fd(r.gradE.x()),
             fd(r.gradE.y()), fd(r.gradE.z()), fd(r.gap), std::to_string(r.ok)});
  write_atomic(join(out_dir, "dispersion.csv"), tab.str());

  std::vector<LedgerEntry> ledger;
  VelocityCheck vc = check_velocity_bound(scan);
  ledger.insert(ledger.end(), vc.ledger.begin(), vc.ledger.end());

  // Hellmann-Feynman against central differences along the ray
  CsvWriter gtab({"sigma", "Px", "Py", "Pz", "hf_x", "hf_y", "hf_z", "fd_x", "fd_y", "fd_z", "rel_diff"});
  double worst_rel = 0;
  for (double s : sigmas) {
    FiberProblem fp = fiber_problem(p, grid, cc.n_max, s, cc.budget);
    std::vector<std::array<Vec3, 2>> out(d.ray_radii.size());
    parallel_for(static_cast<int>(d.ray_radii.size()), opt.threads, [&](int i) {
      SolverOptions one = opt;
      one.threads = 1;
      Vec3 P = d.ray_radii[i] * sm * dir;
      out[i] = {solve_point(fp, P, one).gradE, gradient_fd(fp, P, d.fd_step * sm, one)};
    });
    for (std::size_t i = 0; i < out.size(); ++i) {
      Vec3 P = d.ray_radii[i] * sm * dir;
      const Vec3 &hf = out[i][0], &fdg = out[i][1];
      double rel = (hf - fdg).norm() / std::max(hf.norm(), 1e-300);
      worst_rel = std::max(worst_rel, rel);
      gtab.row({fd(s), fd(P.x()), fd(P.y()), fd(P.z()), fd(hf.x()), fd(hf.y()), fd(hf.z()),
                fd(fdg.x()), fd(fdg.y()), fd(fdg.z()), fd(rel)});
    }
  }
  write_atomic(join(out_dir, "gradient.csv"), gtab.str());
  ledger.push_back(ledger_entry("gradient_fd", "|hf - fd| / |hf| <= tol", cfg.acceptance.gradient - worst_rel));

  std::vector<double> radii;
  for (double r : d.ray_radii) radii.push_back(r * sm);
  B1Check b1 = check_B1(p, grid, cc.n_max, dir, radii, sigmas, d.b1_step * sm, opt);
  CsvWriter btab({"sigma", "radius", "dE", "d2E", "det_dJ", "inv_mr3"});
  for (const auto& r : b1.rows)
    btab.row({fd(r.sigma), fd(r.radius), fd(r.dE), fd(r.d2E), fd(r.det_dJ),
              fd(b1.finite ? 1 / std::pow(b1.m_r, 3) : std::nan(""))});
  write_atomic(join(out_dir, "b1.csv"), btab.str());
  log << "inferred m_r: " << fd(b1.m_r) << "\n";
  ledger.insert(ledger.end(), b1.ledger.begin(), b1.ledger.end());

  const double s_low = sigmas.empty() ? grid.sigma : *std::min_element(sigmas.begin(), sigmas.end());
  FiberProblem fp = fiber_problem(p, grid, cc.n_max, s_low, cc.budget);
  Vec3 P0 = d.hoelder_P * sm;
  std::vector<Vec3> steps = dyadic_steps(dir, d.hoelder_base * sm, d.hoelder_min * sm);
  HoelderFit hg = hoelder_gradient(fp, P0, steps, opt);
  HoelderFit hs = hoelder_state(fp, P0, steps, opt, cc.dressing_order);
  CsvWriter htab({"kind", "step", "increment"});
  for (std::size_t i = 0; i < steps.size(); ++i) htab.row({"gradient", fd(hg.steps[i]), fd(hg.increments[i])});
  for (std::size_t i = 0; i < steps.size(); ++i) htab.row({"state", fd(hs.steps[i]), fd(hs.increments[i])});
  write_atomic(join(out_dir, "hoelder.csv"), htab.str());
  ledger.push_back(hg.entry);
  ledger.push_back(hs.entry);

  FiberProblem fpp = fp;
  FixedPointResult fx = p1_fixed_point(fpp, d.fixed_point_tol, d.fixed_point_max_iter, opt, d.damping,
                                       cc.dressing_order);
  CsvWriter ftab({"iter", "vx", "vy", "vz", "step_norm"});
  for (std::size_t i = 0; i < fx.history.size(); ++i)
    ftab.row({std::to_string(i), fd(fx.history[i].x()), fd(fx.history[i].y()), fd(fx.history[i].z()),
              i < fx.step_norms.size() ? fd(fx.step_norms[i]) : "nan"});
  write_atomic(join(out_dir, "fixed_point.csv"), ftab.str());
  LedgerEntry fe = ledger_entry("fixed_point", "|v* - grad E| <= 10 tol",
                                10 * d.fixed_point_tol - fx.mismatch);
  fe.pass = fx.agrees;
  ledger.push_back(fe);

  write_ledger(out_dir, ledger, "dispersion", log);
  return 0;
}

int cmd_scatter(const RunConfig& cfg, const std::string& out_dir, int threads, std::ostream& log) {
  const ScatterOptions& o = cfg.scatter;
  const PhysParams& p = cfg.cascade.params;
  const int th = resolve_threads(threads);
  std::vector<LedgerEntry> ledger;

  CsvWriter ctab({"t", "value", "closed_form", "rel_err"});
  double worst = 0;
  for (double t : o.closed_form_t) {
    double v = phi_kernel(Vec3::Zero(), t, Vec3::Zero(), o.sigma, p.kappa1, o.g).value;
    double c = phi_origin_closed_form(t, o.sigma, p.kappa1, o.g);
    double rel = std::abs(v - c) / std::max(std::abs(c), 1e-300);
    worst = std::max(worst, rel);
    ctab.row({fd(t), fd(v), fd(c), fd(rel)});
  }
  write_atomic(join(out_dir, "phi_origin.csv"), ctab.str());
  ledger.push_back(ledger_entry("phi_closed_form", "relative error <= tol", cfg.acceptance.phi_closed_form - worst));

  auto rows = phi_interior_rows(interior_samples(o.interior_samples, o.interior_t, o.eta, o.vmax),
                                o.eta, o.sigma, p.kappa1, o.g, th);
  CsvWriter itab({"t", "x_over_t", "speed", "bound", "value", "margin"});
  double min_margin = INFINITY;
  for (const auto& r : rows) {
    itab.row({fd(r.t), fd(r.x_over_t), fd(r.speed), fd(r.bound), fd(r.value), fd(r.margin)});
    min_margin = std::min(min_margin, r.margin);
  }
  write_atomic(join(out_dir, "phi_interior.csv"), itab.str());
  ledger.push_back(ledger_entry("phi_interior", "|phi| <= (1/(eta t)) \\oint 2g^2/(1 - khat.v)", min_margin));

  PhiDecay dec = phi_intermediate_decay(o.decay_t, o.decay_alpha, o.eta, o.eta_prime, o.decay_v,
                                        o.decay_radii, p.kappa1, o.g, th);
  CsvWriter dtab({"t", "max_abs_phi"});
  for (std::size_t i = 0; i < dec.t.size(); ++i) dtab.row({fd(dec.t[i]), fd(dec.max_abs[i])});
  write_atomic(join(out_dir, "phi_decay.csv"), dtab.str());
  log << "phi intermediate decay exponent: " << fd(dec.fit.exponent) << "\n";
  ledger.push_back(ledger_entry("phi_decay", "fitted exponent <= alpha - 2 + 0.1",
                                dec.margin - 0.1 + cfg.acceptance.phi_decay_slack));

  CsvWriter gtab({"t", "sigma_t", "gamma", "error"});
  for (double t : o.gamma_t) {
    double st = o.gamma_sigma_t ? *o.gamma_sigma_t : std::exp(-cfg.schedule.beta * std::log(t));
    KernelValue g = gamma_phase(o.gamma_v, o.gamma_gradE, t, cfg.schedule, st, o.g);
    gtab.row({fd(t), fd(st), fd(g.value), fd(g.error)});
  }
  write_atomic(join(out_dir, "gamma.csv"), gtab.str());

  ChiScaling chi = chi_l1_scaling(o.chi_delta, o.chi_s, th);
  CsvWriter xtab({"s", "l1", "tail", "halving_ratio", "l2_space", "l2_fourier"});
  double worst_parseval = 0;
  for (std::size_t i = 0; i < chi.s.size(); ++i) {
    ChiNorms nrm = chi_norms(chi.s[i], o.chi_delta);
    worst_parseval = std::max(worst_parseval, std::abs(nrm.l2_fourier / nrm.l2_space - 1));
    xtab.row({fd(chi.s[i]), fd(chi.l1[i]), fd(chi.tail[i]), fd(chi.halving_ratio[i]),
              fd(nrm.l2_space), fd(nrm.l2_fourier)});
  }
  write_atomic(join(out_dir, "chi.csv"), xtab.str());
  ledger.push_back(ledger_entry("chi_parseval", "relative Parseval defect <= tol", cfg.acceptance.parseval - worst_parseval));
  ledger.push_back(ledger_entry("chi_l1", "L1 exponent <= 3 delta/2 + slack",
                                chi.l1_margin - 0.05 + cfg.acceptance.chi_l1_slack));
  ledger.push_back(ledger_entry("chi_tail", "tail exponent <= 3 delta/2 + slack",
                                chi.tail_margin - 0.05 + cfg.acceptance.chi_l1_slack));
  ledger.push_back(ledger_entry("chi_halving", "|2 T(2a)/T(a) - 1| <= tol",
                                chi.halving_margin - 0.1 + cfg.acceptance.chi_halving));

  CsvWriter mtab({"vix", "viy", "viz", "vjx", "vjy", "vjz", "C_ij", "C_ji", "angular"});
  for (const auto& [vi, vj] : o.mixed_pairs) {
    MixedCoeffs a = mixed_coeffs(vi, vj, o.sigma, p.kappa1, o.g);
    MixedCoeffs b = mixed_coeffs(vj, vi, o.sigma, p.kappa1, o.g);
    mtab.row({fd(vi.x()), fd(vi.y()), fd(vi.z()), fd(vj.x()), fd(vj.y()), fd(vj.z()), fd(a.C),
              fd(b.C), fd(a.angular)});
  }
  write_atomic(join(out_dir, "mixed.csv"), mtab.str());

  const OverlapOptions& ov = o.overlap;
  PhysParams po = p;
  po.g = ov.g;
  ModeGrid og = build_grid(ov.lo, ov.hi, 1, ov.angular_rule);
  CsvWriter otab({"n_max", "dim", "overlap_re", "overlap_im", "predicted", "error", "C_discrete", "inflated"});
  std::vector<double> errs;
  for (int nm : ov.n_max) {
    FockBasis b = enumerate_basis(static_cast<int>(og.size()), nm, cfg.cascade.budget);
    OverlapDecay od = coherent_overlap_decay(ov.v_i, ov.v_j, ov.lo, ov.hi, po, og, b);
    errs.push_back(od.error);
    otab.row({std::to_string(nm), std::to_string(b.size()), fd(od.overlap.real()), fd(od.overlap.imag()),
              fd(od.predicted), fd(od.error), fd(od.C_discrete), std::to_string(od.inflated)});
  }
  write_atomic(join(out_dir, "overlap.csv"), otab.str());
  if (!errs.empty()) {
    ledger.push_back(ledger_entry("overlap", "|<W_i O, W_j O> - exp(-C/2)| <= tol", cfg.acceptance.overlap - errs.back()));
    double mono = INFINITY;
    for (std::size_t i = 1; i < errs.size(); ++i) mono = std::min(mono, errs[i - 1] - errs[i]);
    if (errs.size() > 1) ledger.push_back(ledger_entry("overlap_monotone", "error decreases with n_max", mono));
  }

  // cell velocities from the dispersion at the lowest grid cutoff
  ModeGrid grid = cascade_grid(cfg.cascade);
  FiberProblem fp = fiber_problem(p, grid, cfg.cascade.n_max, grid.sigma, cfg.cascade.budget);
  SolverOptions sopt;
  sopt.tol = std::min(cfg.cascade.tol, 1e-12);
  sopt.max_iter = cfg.cascade.max_iter;
  PartitionSpec part = build_partition(o.partition_L * std::sqrt(p.m), o.partition_log2_t,
                                       cfg.schedule.eps_part,
                                       [&](const Vec3& P) { return solve_point(fp, P, sopt).gradE; });
  CsvWriter ptab({"cell", "Px", "Py", "Pz", "vx", "vy", "vz", "flagged"});
  double vmax = 0;
  for (std::size_t i = 0; i < part.centers.size(); ++i) {
    const Vec3 &c = part.centers[i], &v = part.velocities[i];
    ptab.row({std::to_string(i), fd(c.x()), fd(c.y()), fd(c.z()), fd(v.x()), fd(v.y()), fd(v.z()),
              std::to_string(part.flagged[i])});
    vmax = std::max(vmax, part.flagged[i] ? 1.0 : v.norm());
  }
  write_atomic(join(out_dir, "partition.csv"), ptab.str());
  ledger.push_back(ledger_entry("partition_velocity", "max_i |v_i| < 1", 1 - vmax));

  write_ledger(out_dir, ledger, "scatter", log);
  return 0;
}

void list_criteria(std::ostream& out) {
  for (const auto& c : acceptance_criteria())
    out << c.id << " " << c.name << ": " << c.summary << "\n";
}

int cmd_validate(const RunConfig& cfg, int threads, std::ostream& out) {
  auto results = run_acceptance(cfg, resolve_threads(threads), &out);
  int failed = 0;
  for (const auto& r : results) failed += !r.pass;
  out << (failed ? "FAIL" : "PASS") << ": " << results.size() - failed << "/" << results.size()
      << " criteria passed\n";
  return failed ? 1 : 0;
}

}  // namespace nelson
