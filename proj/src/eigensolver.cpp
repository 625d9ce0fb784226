#include "nelson/eigensolver.hpp"

#include <cmath>
#include <limits>

#include <Eigen/SparseLU>

#include "nelson/parallel.hpp"

namespace nelson {

namespace {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

// Deterministic start vectors; the modulation keeps them off any mode-permutation symmetric
// subspace, which an all-ones vector would not leave.
template <typename Scalar>
Vec<Scalar> start_vector(Eigen::Index n, int which) {
  Vec<Scalar> v(n);
  for (Eigen::Index i = 0; i < n; ++i)
    v[i] = Scalar(1.0 + 0.5 * std::sin(1.3 * static_cast<double>(i) + 0.7 + 2.1 * which));
  return v / v.norm();
}

template <typename Scalar>
EigResult lanczos(const Eigen::SparseMatrix<Scalar>& A, double tol, int max_iter) {
  const Eigen::Index n = A.rows();
  EigResult res;
  if (n == 1) {
    res.E0 = std::real(A.coeff(0, 0));
    res.E1 = std::numeric_limits<double>::infinity();
    res.v0 = State::Ones(1);
    return res;
  }
  const Eigen::Index kmax = std::min<Eigen::Index>(n, max_iter);
  Mat<Scalar> V(n, std::min<Eigen::Index>(kmax, 64));
  std::vector<double> alpha, beta;
  Vec<Scalar> q = start_vector<Scalar>(n, 0);
  V.col(0) = q;
  int restarts = 0;
  double best = std::numeric_limits<double>::infinity();
  Eigen::Index next_check = 4;

  for (Eigen::Index j = 0; j < kmax; ++j) {
    Vec<Scalar> w = A * V.col(j);
    double a = std::real(V.col(j).dot(w));
    alpha.push_back(a);
    w -= a * V.col(j);
    if (j > 0) w -= beta[j - 1] * V.col(j - 1);
    for (int pass = 0; pass < 2; ++pass) {
      Vec<Scalar> c = V.leftCols(j + 1).adjoint() * w;
      w -= V.leftCols(j + 1) * c;
    }
    double b = w.norm();
    const Eigen::Index m = j + 1;
    const bool exhausted = (m == n);
    bool breakdown = b < 1e-13 * std::max(1.0, std::abs(a));

    if (m >= 2 && (m >= next_check || exhausted || breakdown || m == kmax)) {
      next_check = m + std::max<Eigen::Index>(4, m / 8);
      Eigen::VectorXd d = Eigen::Map<Eigen::VectorXd>(alpha.data(), m);
      Eigen::VectorXd e(m - 1);
      for (Eigen::Index i = 0; i + 1 < m; ++i) e[i] = beta[i];
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
      tri.computeFromTridiagonal(d, e, Eigen::ComputeEigenvectors);
      const auto& S = tri.eigenvectors();
      double bb = breakdown ? 0.0 : b;
      double r0 = bb * std::abs(S(m - 1, 0));
      double r1 = bb * std::abs(S(m - 1, 1));
      best = std::min(best, r0);
      if ((r0 <= tol && r1 <= tol) || exhausted) {
        Vec<Scalar> v0 = V.leftCols(m) * S.col(0).cast<Scalar>();
        v0 /= v0.norm();
        double E0 = tri.eigenvalues()[0];
        double rr = (A * v0 - E0 * v0).norm();
        if (rr <= tol || exhausted) {
          res.E0 = E0;
          res.E1 = tri.eigenvalues()[1];
          res.v0 = v0.template cast<cplx>();
          res.residual = rr;
          res.iterations = static_cast<int>(m);
          res.degenerate = res.E1 - res.E0 < 1e-9 * std::max(std::abs(res.E0), 1e-12);
          return res;
        }
      }
    }
    if (exhausted) break;
    if (V.cols() < m + 1) V.conservativeResize(Eigen::NoChange, std::min<Eigen::Index>(kmax, 2 * V.cols()));
    if (breakdown) {
      // invariant subspace: continue from a fresh direction orthogonal to the Krylov basis
      w = start_vector<Scalar>(n, ++restarts);
      for (int pass = 0; pass < 2; ++pass) {
        Vec<Scalar> c = V.leftCols(m).adjoint() * w;
        w -= V.leftCols(m) * c;
      }
      double wn = w.norm();
      if (wn < 1e-10) fail(ErrorKind::iteration, "Lanczos restart produced a dependent vector");
      beta.push_back(0.0);
      V.col(m) = w / wn;
    } else {
      beta.push_back(b);
      V.col(m) = w / b;
    }
  }
  fail(ErrorKind::iteration, "Lanczos did not converge in " + std::to_string(kmax) +
                                 " iterations, best residual " + std::to_string(best));
}

bool is_real(const Eigen::SparseMatrix<cplx>& m) {
  for (int k = 0; k < m.outerSize(); ++k)
    for (Eigen::SparseMatrix<cplx>::InnerIterator it(m, k); it; ++it)
      if (it.value().imag() != 0.0) return false;
  return true;
}

}  // namespace

EigResult lowest_pair(const Op& H, double tol, int max_iter) {
  if (!(tol > 0)) fail(ErrorKind::config, "tolerance must be > 0");
  if (!H.hermitian || !is_hermitian_exact(H.mat))
    fail(ErrorKind::contract, "lowest_pair needs a hermitian operator");
  if (H.dim() == 0) fail(ErrorKind::contract, "empty operator");
  if (is_real(H.mat)) {
    Eigen::SparseMatrix<double> re = H.mat.real();
    return lanczos<double>(re, tol, max_iter);
  }
  return lanczos<cplx>(H.mat, tol, max_iter);
}

struct Resolvent::Impl {
  Eigen::SparseMatrix<cplx> shifted;
  Eigen::SparseLU<Eigen::SparseMatrix<cplx>, Eigen::AMDOrdering<int>> lu;
};

Resolvent::Resolvent(const Op& H, cplx z) : impl_(std::make_unique<Impl>()), z_(z) {
  const auto n = H.dim();
  Eigen::SparseMatrix<cplx> id(n, n);
  id.setIdentity();
  impl_->shifted = H.mat - z * id;
  impl_->shifted.makeCompressed();
  impl_->lu.compute(impl_->shifted);
  if (impl_->lu.info() != Eigen::Success)
    fail(ErrorKind::conditioning, "factorization of H - z failed near z = (" +
                                      std::to_string(z.real()) + ", " + std::to_string(z.imag()) + ")");
}

Resolvent::~Resolvent() = default;
Resolvent::Resolvent(Resolvent&&) noexcept = default;
Resolvent& Resolvent::operator=(Resolvent&&) noexcept = default;

State Resolvent::apply(const State& rhs, double tol) const {
  State x = impl_->lu.solve(rhs);
  const double scale = std::max(rhs.norm(), std::numeric_limits<double>::min());
  State r = rhs - impl_->shifted * x;
  if (r.norm() > tol * scale) {
    x += impl_->lu.solve(r);
    r = rhs - impl_->shifted * x;
  }
  if (!x.allFinite() || r.norm() > tol * scale)
    fail(ErrorKind::conditioning, "resolvent residual " + std::to_string(r.norm() / scale) +
                                      " above tolerance at shift (" + std::to_string(z_.real()) +
                                      ", " + std::to_string(z_.imag()) + ")");
  return x;
}

State resolvent_apply(const Op& H, cplx z, const State& rhs, double tol) {
  return Resolvent(H, z).apply(rhs, tol);
}

void validate(const ContourSpec& spec) {
  if (!(spec.radius > 0)) fail(ErrorKind::config, "contour radius must be > 0");
  if (spec.n_quad < 8) fail(ErrorKind::config, "contour needs n_quad >= 8");
  if (spec.n_neumann < 1) fail(ErrorKind::config, "contour needs n_neumann >= 1");
}

namespace {

cplx contour_point(const ContourSpec& s, int k) {
  return s.center + s.radius * std::polar(1.0, 2 * M_PI * k / s.n_quad);
}

// weight of node k in -(1/2 pi i) \oint ... dE
cplx contour_weight(const ContourSpec& s, int k) {
  return -(s.radius / s.n_quad) * std::polar(1.0, 2 * M_PI * k / s.n_quad);
}

}  // namespace

ProjectorResult contour_projector_apply(const Op& H, const ContourSpec& spec, const State& psi,
                                        double tol, int threads) {
  validate(spec);
  std::vector<State> parts(spec.n_quad);
  std::vector<double> gains(spec.n_quad);
  parallel_for(spec.n_quad, threads, [&](int k) {
    Resolvent R(H, contour_point(spec, k));
    State x = R.apply(psi, tol);
    gains[k] = x.norm() / std::max(psi.norm(), 1e-300);
    parts[k] = contour_weight(spec, k) * x;
  });
  ProjectorResult out;
  out.state = State::Zero(psi.size());
  for (int k = 0; k < spec.n_quad; ++k) {
    out.state += parts[k];
    out.max_gain = std::max(out.max_gain, gains[k]);
  }
  // an eigenvalue within 10 tol of the circle shows up as a resolvent gain above 1/(10 tol)
  out.ill_conditioned = out.max_gain > 1.0 / (10 * tol);
  return out;
}

double geometric_ratio(const std::vector<double>& values) {
  std::vector<double> xs, ys;
  double floor = 0;
  for (double v : values) floor = std::max(floor, v);
  floor *= 1e-13;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > floor)) continue;
    xs.push_back(static_cast<double>(i));
    ys.push_back(std::log(values[i]));
  }
  if (xs.size() < 2) return 0.0;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= xs.size();
  my /= xs.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return std::exp(sxy / sxx);
}

NeumannResult neumann_projector_apply(const Op& H_base, const Op& dH, const ContourSpec& spec,
                                      const State& psi, int n_terms, double tol, int threads) {
  validate(spec);
  if (n_terms < 1) fail(ErrorKind::config, "n_terms must be >= 1");
  std::vector<std::vector<State>> parts(spec.n_quad);
  parallel_for(spec.n_quad, threads, [&](int k) {
    Resolvent R(H_base, contour_point(spec, k));
    cplx wk = contour_weight(spec, k);
    auto& mine = parts[k];
    State y = R.apply(psi, tol);
    mine.push_back(wk * y);
    for (int n = 1; n <= n_terms; ++n) {
      State rhs = -(dH.mat * y);
      y = R.apply(rhs, tol);
      mine.push_back(wk * y);
    }
  });
  NeumannResult out;
  out.state = State::Zero(psi.size());
  std::vector<State> terms(n_terms + 1, State::Zero(psi.size()));
  for (int k = 0; k < spec.n_quad; ++k)
    for (int n = 0; n <= n_terms; ++n) terms[n] += parts[k][n];
  for (int n = 0; n <= n_terms; ++n) out.state += terms[n];
  int rising = 0;
  // terms at rounding level carry no trend
  const double noise = 1e-14 * psi.norm();
  for (int n = 1; n <= n_terms; ++n) {
    out.term_norms.push_back(terms[n].norm());
    if (n >= 2 && out.term_norms[n - 1] > noise) {
      rising = out.term_norms[n - 1] >= out.term_norms[n - 2] ? rising + 1 : 0;
      if (rising >= 3)
        fail(ErrorKind::divergence, "Neumann term norms non-decreasing for 3 consecutive orders "
                                    "(order " + std::to_string(n) + ")");
    }
  }
  out.fitted_ratio = geometric_ratio(out.term_norms);
  return out;
}

double kato_smallness(const Op& H_base, const Op& dH, const ContourSpec& spec) {
  validate(spec);
  Eigen::MatrixXcd h = Eigen::MatrixXcd(H_base.mat);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  const Eigen::MatrixXcd& U = es.eigenvectors();
  Eigen::MatrixXcd M = U.adjoint() * (dH.mat * U);
  if (M.norm() == 0.0) return 0.0;
  double worst = 0;
  const auto n = M.rows();
  for (int k = 0; k < spec.n_quad; ++k) {
    cplx E = contour_point(spec, k);
    Eigen::VectorXd d(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double dist = std::abs(es.eigenvalues()[i] - E);
      if (dist == 0.0) fail(ErrorKind::conditioning, "contour point on the spectrum");
      d[i] = 1.0 / std::sqrt(dist);
    }
    Eigen::MatrixXcd B = d.asDiagonal() * M * d.asDiagonal();
    Eigen::VectorXcd x = start_vector<cplx>(n, 0);
    double lam = 0;
    for (int it = 0; it < 500; ++it) {
      Eigen::VectorXcd y = B.adjoint() * (B * x);
      double ny = y.norm();
      if (ny == 0.0) break;
      double next = std::sqrt(ny);
      x = y / ny;
      if (std::abs(next - lam) <= 1e-13 * next) {
        lam = next;
        break;
      }
      lam = next;
    }
    worst = std::max(worst, lam);
  }
  return worst;
}

}  // namespace nelson
