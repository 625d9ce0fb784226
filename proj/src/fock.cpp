#include "nelson/fock.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

#include "nelson/quadrature.hpp"

namespace nelson {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_shell: return "invalid-shell";
    case ErrorKind::config: return "config error";
    case ErrorKind::budget: return "budget error";
    case ErrorKind::window: return "window error";
    case ErrorKind::velocity_domain: return "velocity-domain error";
    case ErrorKind::truncation: return "truncation error";
    case ErrorKind::iteration: return "iteration error";
    case ErrorKind::contract: return "contract error";
    case ErrorKind::conditioning: return "conditioning error";
    case ErrorKind::divergence: return "divergence error";
    case ErrorKind::phase_undefined: return "phase-undefined";
    case ErrorKind::undefined_gradient: return "undefined-gradient";
    case ErrorKind::sampling: return "sampling error";
    case ErrorKind::accuracy: return "accuracy error";
    case ErrorKind::geometry: return "geometry error";
    case ErrorKind::fit_undefined: return "fit-undefined";
    case ErrorKind::io: return "io error";
  }
  return "error";
}

std::vector<int> ModeGrid::window(double lo, double hi) const {
  std::vector<int> out;
  for (std::size_t m = 0; m < modes.size(); ++m) {
    double r = modes[m].norm();
    if (r >= lo && r <= hi) out.push_back(static_cast<int>(m));
  }
  return out;
}

AngularRule angular_rule(const std::string& id) {
  AngularRule rule;
  const double four_pi = 4.0 * M_PI;
  if (id == "single") {
    rule.directions = {Vec3(0, 0, 1)};
    rule.weights = {four_pi};
  } else if (id == "antipodal2") {
    rule.directions = {Vec3(0, 0, 1), Vec3(0, 0, -1)};
    rule.weights = {2 * M_PI, 2 * M_PI};
  } else if (id == "octahedral6") {
    rule.directions = {Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3(0, 1, 0),
                       Vec3(0, -1, 0), Vec3(0, 0, 1), Vec3(0, 0, -1)};
    rule.weights.assign(6, four_pi / 6);
  } else {
    std::smatch match;
    static const std::regex gl(R"(gl(\d+)x(\d+))");
    if (!std::regex_match(id, match, gl)) fail(ErrorKind::config, "unknown angular rule '" + id + "'");
    int nmu = std::stoi(match[1]), nphi = std::stoi(match[2]);
    if (nmu < 1 || nphi < 1) fail(ErrorKind::config, "angular rule '" + id + "' needs positive counts");
    auto g = quad::gauss_legendre(nmu);
    for (int i = 0; i < nmu; ++i) {
      double mu = g.x[i], st = std::sqrt(std::max(0.0, 1 - mu * mu));
      for (int j = 0; j < nphi; ++j) {
        double phi = 2 * M_PI * (j + 0.5) / nphi;
        rule.directions.emplace_back(st * std::cos(phi), st * std::sin(phi), mu);
        rule.weights.push_back(g.w[i] * 2 * M_PI / nphi);
      }
    }
  }
  return rule;
}

namespace {

ModeGrid assemble(const std::vector<double>& cell_edges, const std::vector<double>& nodes,
                  const AngularRule& rule) {
  ModeGrid grid;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    double lo = cell_edges[i], hi = cell_edges[i + 1];
    for (std::size_t a = 0; a < rule.directions.size(); ++a) {
      Mode m;
      m.k = nodes[i] * rule.directions[a];
      m.omega = rule.weights[a];
      m.w = rule.weights[a] * (hi * hi * hi - lo * lo * lo) / 3.0;
      m.r_lo = lo;
      m.r_hi = hi;
      m.shell = static_cast<int>(i);
      m.angular = static_cast<int>(a);
      grid.modes.push_back(m);
    }
  }
  // radii are strictly increasing per shell, so (shell, angular) is the (|k|, angular) order
  return grid;
}

}  // namespace

ModeGrid build_grid(double sigma, double kappa, int n_radial, const std::string& rule,
                    Spacing spacing) {
  if (!(sigma > 0) || !(sigma < kappa))
    fail(ErrorKind::invalid_shell, "need 0 < sigma < kappa, got sigma=" + std::to_string(sigma) +
                                       " kappa=" + std::to_string(kappa));
  if (n_radial < 1) fail(ErrorKind::config, "n_radial must be >= 1");
  AngularRule ar = angular_rule(rule);
  std::vector<double> edges(n_radial + 1), nodes(n_radial);
  for (int i = 0; i <= n_radial; ++i) {
    double t = static_cast<double>(i) / n_radial;
    edges[i] = spacing == Spacing::geometric ? sigma * std::pow(kappa / sigma, t)
                                             : sigma + (kappa - sigma) * t;
  }
  edges.front() = sigma;
  edges.back() = kappa;
  for (int i = 0; i < n_radial; ++i) {
    double t = (i + 0.5) / n_radial;
    nodes[i] = spacing == Spacing::geometric ? sigma * std::pow(kappa / sigma, t)
                                             : 0.5 * (edges[i] + edges[i + 1]);
  }
  ModeGrid grid = assemble(edges, nodes, ar);
  grid.sigma = sigma;
  grid.kappa = kappa;
  grid.spacing = spacing;
  grid.angular_rule = rule;
  return grid;
}

ModeGrid build_grid_edges(const std::vector<double>& edges, int cells_per_interval,
                          const std::string& rule) {
  if (edges.size() < 2) fail(ErrorKind::invalid_shell, "need at least two edges");
  if (cells_per_interval < 1) fail(ErrorKind::config, "cells_per_interval must be >= 1");
  for (std::size_t i = 0; i + 1 < edges.size(); ++i)
    if (!(edges[i] > 0) || !(edges[i] < edges[i + 1]))
      fail(ErrorKind::invalid_shell, "edges must be positive and strictly increasing");
  AngularRule ar = angular_rule(rule);
  std::vector<double> cell_edges{edges.front()}, nodes;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    double lo = edges[i], hi = edges[i + 1];
    for (int c = 0; c < cells_per_interval; ++c) {
      double t1 = static_cast<double>(c + 1) / cells_per_interval;
      double th = (c + 0.5) / cells_per_interval;
      nodes.push_back(lo * std::pow(hi / lo, th));
      cell_edges.push_back(c + 1 == cells_per_interval ? hi : lo * std::pow(hi / lo, t1));
    }
  }
  ModeGrid grid = assemble(cell_edges, nodes, ar);
  grid.sigma = edges.front();
  grid.kappa = edges.back();
  grid.spacing = Spacing::geometric;
  grid.angular_rule = rule;
  return grid;
}

ModeGrid subgrid(const ModeGrid& grid, const std::vector<int>& keep) {
  ModeGrid out = grid;
  out.modes.clear();
  for (int m : keep) out.modes.push_back(grid.modes.at(m));
  if (!out.modes.empty()) out.sigma = std::max(grid.sigma, out.modes.front().r_lo);
  return out;
}

std::optional<std::size_t> FockBasis::find(const Occupation& occ) const {
  auto it = index.find(occ);
  if (it == index.end()) return std::nullopt;
  return it->second;
}

int FockBasis::total(std::size_t i) const {
  int n = 0;
  for (auto v : states[i]) n += v;
  return n;
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  double r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

namespace {

void fill_grade(Occupation& cur, int pos, int remaining, std::vector<Occupation>& out) {
  if (pos + 1 == static_cast<int>(cur.size())) {
    cur[pos] = static_cast<std::uint8_t>(remaining);
    out.push_back(cur);
    return;
  }
  for (int v = 0; v <= remaining; ++v) {
    cur[pos] = static_cast<std::uint8_t>(v);
    fill_grade(cur, pos + 1, remaining - v, out);
  }
}

}  // namespace

FockBasis enumerate_basis(int n_modes, int n_max, std::size_t budget) {
  if (n_modes < 1) fail(ErrorKind::config, "n_modes must be >= 1");
  if (n_max < 0 || n_max > 255) fail(ErrorKind::config, "n_max must lie in [0, 255]");
  double dim = binomial(n_modes + n_max, n_max);
  if (dim > static_cast<double>(budget))
    fail(ErrorKind::budget, "basis dimension " + std::to_string(static_cast<long long>(dim)) +
                                " exceeds budget " + std::to_string(budget));
  FockBasis b;
  b.n_modes = n_modes;
  b.n_max = n_max;
  b.states.reserve(static_cast<std::size_t>(dim));
  Occupation cur(n_modes, 0);
  for (int n = 0; n <= n_max; ++n) fill_grade(cur, 0, n, b.states);
  for (std::size_t i = 0; i < b.states.size(); ++i) b.index.emplace(b.states[i], i);
  return b;
}

namespace {

using Triplet = Eigen::Triplet<cplx>;

Op from_triplets(Eigen::Index dim, const std::vector<Triplet>& t, bool hermitian) {
  Op op;
  op.mat.resize(dim, dim);
  op.mat.setFromTriplets(t.begin(), t.end());
  op.mat.makeCompressed();
  op.hermitian = hermitian;
  return op;
}

// visit (lowered state index, state index, sqrt(n_m)) for every state with n_m >= 1
template <typename Fn>
void for_each_lowering(const FockBasis& basis, int mode, Fn&& fn) {
  Occupation tmp;
  for (std::size_t s = 0; s < basis.size(); ++s) {
    int n = basis.states[s][mode];
    if (n == 0) continue;
    tmp = basis.states[s];
    tmp[mode] = static_cast<std::uint8_t>(n - 1);
    fn(basis.index.at(tmp), s, std::sqrt(static_cast<double>(n)));
  }
}

}  // namespace

Ladder ladder_ops(const FockBasis& basis, int mode) {
  if (mode < 0 || mode >= basis.n_modes) fail(ErrorKind::config, "mode index out of range");
  std::vector<Triplet> t;
  for_each_lowering(basis, mode, [&](std::size_t lo, std::size_t s, double amp) {
    t.emplace_back(static_cast<int>(lo), static_cast<int>(s), amp);
  });
  Ladder l;
  auto dim = static_cast<Eigen::Index>(basis.size());
  l.annihilation = from_triplets(dim, t, false);
  l.creation.mat = l.annihilation.mat.adjoint();
  l.creation.mat.makeCompressed();
  l.creation.hermitian = false;
  return l;
}

Op diagonal_op(const FockBasis& basis, const std::function<double(const Occupation&)>& fn) {
  std::vector<Triplet> t;
  t.reserve(basis.size());
  for (std::size_t s = 0; s < basis.size(); ++s) {
    double v = fn(basis.states[s]);
    if (v != 0.0) t.emplace_back(static_cast<int>(s), static_cast<int>(s), v);
  }
  return from_triplets(static_cast<Eigen::Index>(basis.size()), t, true);
}

CompositeOps composite_ops(const ModeGrid& grid, const FockBasis& basis) {
  if (static_cast<int>(grid.size()) != basis.n_modes)
    fail(ErrorKind::config, "grid and basis mode counts differ");
  CompositeOps c;
  c.number_total = diagonal_op(basis, [](const Occupation& o) {
    double n = 0;
    for (auto v : o) n += v;
    return n;
  });
  for (int i = 0; i < 3; ++i) {
    c.meson_momentum[i] = diagonal_op(basis, [&](const Occupation& o) {
      double p = 0;
      for (std::size_t m = 0; m < o.size(); ++m) p += o[m] * grid.modes[m].k[i];
      return p;
    });
  }
  c.meson_energy = diagonal_op(basis, [&](const Occupation& o) {
    double e = 0;
    for (std::size_t m = 0; m < o.size(); ++m) e += o[m] * grid.modes[m].norm();
    return e;
  });
  return c;
}

Op smeared_field(const ModeGrid& grid, const FockBasis& basis,
                 const std::function<cplx(const Vec3&)>& profile) {
  std::vector<Triplet> t;
  for (int m = 0; m < basis.n_modes; ++m) {
    cplx a = profile(grid.modes[m].k) * std::sqrt(grid.modes[m].w);
    if (a == cplx(0)) continue;
    for_each_lowering(basis, m, [&](std::size_t lo, std::size_t s, double amp) {
      t.emplace_back(static_cast<int>(lo), static_cast<int>(s), std::conj(a) * amp);
      t.emplace_back(static_cast<int>(s), static_cast<int>(lo), a * amp);
    });
  }
  return from_triplets(static_cast<Eigen::Index>(basis.size()), t, true);
}

Op field_from_amplitudes(const FockBasis& basis, const std::vector<double>& amp) {
  std::vector<Triplet> t;
  for (int m = 0; m < basis.n_modes; ++m) {
    if (amp[m] == 0.0) continue;
    for_each_lowering(basis, m, [&](std::size_t lo, std::size_t s, double a) {
      t.emplace_back(static_cast<int>(lo), static_cast<int>(s), amp[m] * a);
      t.emplace_back(static_cast<int>(s), static_cast<int>(lo), amp[m] * a);
    });
  }
  return from_triplets(static_cast<Eigen::Index>(basis.size()), t, true);
}

Op skew_from_amplitudes(const FockBasis& basis, const std::vector<double>& amp) {
  std::vector<Triplet> t;
  for (int m = 0; m < basis.n_modes; ++m) {
    if (amp[m] == 0.0) continue;
    for_each_lowering(basis, m, [&](std::size_t lo, std::size_t s, double a) {
      t.emplace_back(static_cast<int>(lo), static_cast<int>(s), amp[m] * a);
      t.emplace_back(static_cast<int>(s), static_cast<int>(lo), -amp[m] * a);
    });
  }
  return from_triplets(static_cast<Eigen::Index>(basis.size()), t, false);
}

Op hermitize(const Op& a) {
  Op out;
  Eigen::SparseMatrix<cplx> adj = a.mat.adjoint();
  out.mat = (a.mat + adj) * 0.5;
  out.mat.prune(cplx(0));
  out.mat.makeCompressed();
  out.hermitian = true;
  return out;
}

bool is_hermitian_exact(const Eigen::SparseMatrix<cplx>& m) {
  if (m.rows() != m.cols()) return false;
  Eigen::SparseMatrix<cplx> adj = m.adjoint();
  Eigen::SparseMatrix<cplx> d = m - adj;
  for (int k = 0; k < d.outerSize(); ++k)
    for (Eigen::SparseMatrix<cplx>::InnerIterator it(d, k); it; ++it)
      if (it.value() != cplx(0)) return false;
  return true;
}

State embed_state(const State& psi, const FockBasis& sub, const FockBasis& full,
                  const std::vector<int>& sub_modes) {
  State out = State::Zero(static_cast<Eigen::Index>(full.size()));
  Occupation occ(full.n_modes, 0);
  for (std::size_t s = 0; s < sub.size(); ++s) {
    std::fill(occ.begin(), occ.end(), 0);
    for (std::size_t i = 0; i < sub_modes.size(); ++i) occ[sub_modes[i]] = sub.states[s][i];
    auto idx = full.find(occ);
    if (!idx) fail(ErrorKind::budget, "embedded state leaves the full basis");
    out[static_cast<Eigen::Index>(*idx)] = psi[static_cast<Eigen::Index>(s)];
  }
  return out;
}

State vacuum_state(const FockBasis& basis) {
  State v = State::Zero(static_cast<Eigen::Index>(basis.size()));
  v[0] = 1.0;
  return v;
}

}  // namespace nelson
