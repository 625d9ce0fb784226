#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nelson/cascade.hpp"
#include "nelson/scattering.hpp"

namespace nelson {

struct DispersionOptions {
  Vec3 ray_direction = Vec3(0, 0, 1);
  std::vector<double> ray_radii;       // fractions of sqrt(m)
  std::vector<int> sigma_steps;        // cascade indices j, sigma = sigma_j
  int grid_points = 3;                 // per axis of the 3D momentum grid inside the ball
  double fd_step = 1e-4;               // times sqrt(m)
  double b1_step = 1e-3;               // times sqrt(m)
  Vec3 hoelder_P = Vec3(0, 0, 0.25);   // times sqrt(m)
  double hoelder_base = 0.05;          // times sqrt(m)
  double hoelder_min = 1e-4;           // times sqrt(m)
  double fixed_point_tol = 1e-10;
  int fixed_point_max_iter = 200;
  double damping = 0.5;
};

struct OverlapOptions {
  double g = 0.5;
  double lo = 0.5;
  double hi = 1.0;
  std::string angular_rule = "octahedral6";
  std::vector<int> n_max = {4, 6, 8};
  Vec3 v_i = Vec3(0.2, 0, 0);
  Vec3 v_j = Vec3(-0.2, 0, 0);
};

struct ScatterOptions {
  double g = 1.0;
  double sigma = 1e-3;  // infrared cutoff for the closed-form and interior samples
  std::vector<double> closed_form_t = {10, 100, 1000, 10000};
  std::vector<double> interior_t = {10, 100, 1000, 10000};
  int interior_samples = 100;
  double eta = 0.1;
  double eta_prime = 0.5;
  double vmax = 0.9;
  double decay_alpha = 0.5;
  std::vector<double> decay_t = {1000, 3162.2776601683795, 10000, 31622.776601683792, 100000};
  int decay_radii = 64;
  Vec3 decay_v = Vec3(0.3, 0, 0);
  std::vector<double> gamma_t = {1, 10, 100, 1000};
  Vec3 gamma_v = Vec3(0.2, 0, 0);
  Vec3 gamma_gradE = Vec3(0.1, 0, 0);
  std::optional<double> gamma_sigma_t;  // default t^{-beta}
  double chi_delta = 0.5;
  std::vector<double> chi_s = {1e3, 1e4, 1e5, 1e6, 1e7, 1e8};
  double chi_scale = 1.0;
  std::vector<std::pair<Vec3, Vec3>> mixed_pairs = {
      {Vec3(0.1, 0, 0), Vec3(-0.1, 0, 0)}, {Vec3(0.3, 0, 0), Vec3(0, 0.3, 0)}};
  OverlapOptions overlap;
  double partition_L = 0.5;       // times sqrt(m)
  double partition_log2_t = 20000;
};

// Tolerances of the acceptance criteria; the config may tighten or loosen any of them.
struct AcceptanceTolerances {
  double quadrature = 1e-6;
  double free_theory = 1e-12;
  double oscillator = 1e-8;
  double eigensolver = 1e-10;
  double projector = 1e-8;
  double neumann_ratio = 1.0 / 12;
  double gradient = 1e-6;
  double gradient_zero = 1e-10;
  double phi_closed_form = 1e-8;
  double phi_decay_slack = 0.1;
  double parseval = 1e-6;
  double chi_l1_slack = 0.05;
  double chi_halving = 0.1;
  double overlap = 1e-3;
  double mixed = 1e-6;
};

struct RunConfig {
  CascadeConfig cascade;
  DispersionOptions dispersion;
  CutoffSchedule schedule;
  ScatterOptions scatter;
  AcceptanceTolerances acceptance;
  std::string out_dir = "out";
  std::string source;  // path the config came from
  std::vector<std::string> warnings;
};

// Parse and validate; errors carry "path:line: message".
RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text, const std::string& source = "<string>");

}  // namespace nelson
