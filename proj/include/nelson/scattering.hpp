#pragma once

#include <functional>
#include <string>
#include <vector>

#include "nelson/hamiltonian.hpp"
#include "nelson/report.hpp"

namespace nelson {

struct CutoffSchedule {
  double beta = 128;       // sigma_t = t^{-beta}
  double alpha = 39.0 / 40;  // sigma^S_tau = tau^{-alpha}
  double delta = 0.004;
  double eps_part = 1e-4;
};

// beta > 1, alpha = 39/40, 24 eps_part < delta, 2 delta + 3 eps_part < 1/112
void validate(const CutoffSchedule& s);

struct KernelValue {
  double value = 0;
  double error = 0;  // absolute estimate
};

// g^2 \int_sigma^kappa1 d|k| \oint dOmega cos(k.x - |k| t) / (1 - khat.v)
KernelValue phi_kernel(const Vec3& x, double t, const Vec3& v, double sigma, double kappa1,
                       double g = 1.0, double rel_tol = 1e-10);

// 4 pi g^2 (sin(kappa1 t) - sin(sigma t)) / t
double phi_origin_closed_form(double t, double sigma, double kappa1, double g);

// \oint dOmega / (1 - khat.v)
double inverse_doppler_solid_angle(const Vec3& v);

// (1/(eta t)) \oint 2 g^2 / (1 - khat.v) dOmega, valid for |x| <= (1 - eta) t
double phi_interior_bound(double t, double eta, const Vec3& v, double g);

struct PhiSample {
  Vec3 x;
  double t = 0;
  Vec3 v = Vec3::Zero();
};

struct PhiRow {
  double t = 0;
  double x_over_t = 0;
  double speed = 0;
  double bound = 0;
  double value = 0;
  double margin = 0;  // bound - |value|
};

// deterministic samples with |x| <= (1 - eta) t and |v| <= vmax
std::vector<PhiSample> interior_samples(int count, const std::vector<double>& ts, double eta,
                                        double vmax);

std::vector<PhiRow> phi_interior_rows(const std::vector<PhiSample>& samples, double eta,
                                      double sigma, double kappa1, double g, int threads = 1);

struct PhiDecay {
  std::vector<double> t;
  std::vector<double> max_abs;  // over the sampled intermediate shell
  PowerFit fit;
  double alpha = 0;
  double margin = 0;  // alpha - 2 + 0.1 - slope
};

// max |phi| over (1 - eta') t < |x| < (1 - eta) t with sigma = t^{-alpha}
PhiDecay phi_intermediate_decay(const std::vector<double>& ts, double alpha, double eta,
                                double eta_prime, const Vec3& v, int n_radii, double kappa1,
                                double g, int threads = 1);

// -\int_1^t dtau/tau g^2 \int_{tau sigma_t}^{tau^{1-alpha}} d|q| \oint cos(q.gradE - |q|)/(1 - qhat.v) dOmega,
// with the integrand frozen to zero once tau^{-alpha} < sigma_t
KernelValue gamma_phase(const Vec3& v, const Vec3& gradE, double t, const CutoffSchedule& schedule,
                        double sigma_t, double g = 1.0, double rel_tol = 1e-10);

// tau beyond which the phase no longer accumulates
double gamma_freeze_time(const CutoffSchedule& schedule, double sigma_t);

struct ChiShape {
  double a = 0;  // support half-width 1/(2 s^{delta/6})
  double r = 0;  // ramp width s^{-delta/2}
};

ChiShape chi_shape(double s, double delta);

double chi_indicator(const Vec3& z, double s, double delta, double scale = 1.0);
cplx chi_fourier(const Vec3& q, double s, double delta, double scale = 1.0);

// one axis, unitary convention (2 pi)^{-1/2} \int e^{-iqz}
double chi_fourier_1d(double q, const ChiShape& c);

struct ChiNorms {
  double l2_space = 0;    // \int chi^2 d^3z (closed form)
  double l2_fourier = 0;  // \int |chi~|^2 d^3q (numerical)
  double l1_fourier = 0;  // \int |chi~| d^3q
};

ChiNorms chi_norms(double s, double delta);

// \int over the complement of the cube |q_k| <= lambda of |chi~| d^3q
double chi_fourier_tail(double s, double delta, double lambda);

struct ChiScaling {
  std::vector<double> s;
  std::vector<double> l1;
  std::vector<double> tail;           // at a fixed cutoff common to the sweep
  std::vector<double> halving_ratio;  // T(2 lambda_s) / T(lambda_s), lambda_s = 50/r(s)
  PowerFit l1_fit;
  PowerFit tail_fit;
  double delta = 0;
  double l1_margin = 0;
  double tail_margin = 0;
  double halving_margin = 0;  // 0.1 - max |2 ratio - 1|
};

ChiScaling chi_l1_scaling(double delta, const std::vector<double>& s_values, int threads = 1);

struct MixedCoeffs {
  std::function<double(const Vec3&)> h;  // on unit vectors
  double C = 0;
  double angular = 0;  // \oint |h|^2 dOmega
};

// h(khat) = g khat.(v_j - v_i) / ((1 - khat.v_j)(1 - khat.v_i)), C = (1/2) ln(kappa1/sigma) \oint |h|^2
MixedCoeffs mixed_coeffs(const Vec3& v_i, const Vec3& v_j, double sigma, double kappa1,
                         double g = 1.0);

struct OverlapDecay {
  cplx overlap = 0;
  double predicted = 0;
  double C_discrete = 0;
  double error = 0;  // |overlap - predicted|
  double norm_deviation = 0;
  bool inflated = false;  // dressing tail above 1e-8
};

OverlapDecay coherent_overlap_decay(const Vec3& v_i, const Vec3& v_j, double lo, double hi,
                                    const PhysParams& p, const ModeGrid& grid,
                                    const FockBasis& basis, int dressing_order = 80);

struct PartitionSpec {
  double L = 0;
  double log2_t = 0;
  double eps_part = 0;
  int n = 0;
  double side = 0;
  std::vector<Vec3> centers;
  std::vector<Vec3> velocities;
  std::vector<bool> flagged;
};

using VelocityField = std::function<Vec3(const Vec3&)>;

// n = floor(eps_part log2 t), (2^n)^3 cells over [-L/2, L/2]^3; t enters through log2 t
// because admissible eps_part makes t itself overflow.
PartitionSpec build_partition(double L, double log2_t, double eps_part, const VelocityField& vel,
                              int max_level = 6);

}  // namespace nelson
