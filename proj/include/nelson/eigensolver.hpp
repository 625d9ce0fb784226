#pragma once

#include <memory>
#include <vector>

#include "nelson/fock.hpp"

namespace nelson {

struct EigResult {
  double E0 = 0;
  double E1 = 0;
  State v0;
  double residual = 0;
  int iterations = 0;
  bool degenerate = false;
};

// Lanczos with full reorthogonalization. Runs in real arithmetic when H is real.
EigResult lowest_pair(const Op& H, double tol = 1e-10, int max_iter = 2000);

// Factorization of (H - z) reused across right-hand sides.
class Resolvent {
 public:
  Resolvent(const Op& H, cplx z);
  ~Resolvent();
  Resolvent(Resolvent&&) noexcept;
  Resolvent& operator=(Resolvent&&) noexcept;

  State apply(const State& rhs, double tol) const;
  cplx shift() const { return z_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  cplx z_;
};

State resolvent_apply(const Op& H, cplx z, const State& rhs, double tol = 1e-10);

struct ContourSpec {
  cplx center = 0;
  double radius = 1;
  int n_quad = 64;
  int n_neumann = 8;
};

void validate(const ContourSpec& spec);

struct ProjectorResult {
  State state;
  double max_gain = 0;  // max_k |R(E_k) psi| / |psi|
  bool ill_conditioned = false;
};

// -(1/2 pi i) \oint (H - E)^{-1} psi dE, trapezoidal on the circle
ProjectorResult contour_projector_apply(const Op& H, const ContourSpec& spec, const State& psi,
                                        double tol = 1e-10, int threads = 1);

struct NeumannResult {
  State state;
  std::vector<double> term_norms;  // n = 1 .. n_terms
  double fitted_ratio = 0;         // geometric fit of term_norms
};

NeumannResult neumann_projector_apply(const Op& H_base, const Op& dH, const ContourSpec& spec,
                                      const State& psi, int n_terms, double tol = 1e-10,
                                      int threads = 1);

// max over contour samples of || |H-E|^{-1/2} dH |H-E|^{-1/2} || (dense functional calculus)
double kato_smallness(const Op& H_base, const Op& dH, const ContourSpec& spec);

// log-linear least-squares ratio of a positive sequence (exp of the slope)
double geometric_ratio(const std::vector<double>& values);

}  // namespace nelson
