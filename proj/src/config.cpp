#include "nelson/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace nelson {

namespace {

using nlohmann::json;

int line_of(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + offset, '\n'));
}

// Locates "key" inside the section's text span; falls back to the section, then line 1.
class Locator {
 public:
  Locator(const std::string& text, std::string source) : text_(text), source_(std::move(source)) {}

  [[noreturn]] void fail_at(const std::string& section, const std::string& key,
                            std::string msg) const {
    // rethrown validation errors already carry the kind prefix
    const std::string prefix = std::string(to_string(ErrorKind::config)) + ": ";
    if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
    std::size_t pos = 0;
    if (!section.empty()) {
      std::size_t s = text_.find("\"" + section + "\"");
      if (s != std::string::npos) {
        pos = s;
        std::size_t k = key.empty() ? std::string::npos : text_.find("\"" + key + "\"", s);
        if (k != std::string::npos) pos = k;
      }
    } else if (!key.empty()) {
      std::size_t k = text_.find("\"" + key + "\"");
      if (k != std::string::npos) pos = k;
    }
    fail(ErrorKind::config, source_ + ":" + std::to_string(line_of(text_, pos)) + ": " + msg);
  }

  const std::string& source() const { return source_; }
  const std::string& text() const { return text_; }

 private:
  const std::string& text_;
  std::string source_;
};

class Section {
 public:
  Section(const json& obj, std::string name, const Locator& loc)
      : obj_(obj), name_(std::move(name)), loc_(loc) {
    if (!obj_.is_object()) loc_.fail_at(name_, "", "section '" + name_ + "' must be an object");
  }

  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() == 0) check_unknown();
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key);
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = obj_.at(key).get<T>();
    } catch (const json::exception&) {
      loc_.fail_at(name_, key, "'" + name_ + "." + key + "' has the wrong type");
    }
  }

  void get_vec3(const std::string& key, Vec3& out) {
    if (!has(key)) return;
    const json& v = obj_.at(key);
    if (!v.is_array() || v.size() != 3)
      loc_.fail_at(name_, key, "'" + name_ + "." + key + "' must be a 3-element array");
    for (int i = 0; i < 3; ++i) {
      if (!v[i].is_number()) loc_.fail_at(name_, key, "'" + name_ + "." + key + "' must be numeric");
      out[i] = v[i].get<double>();
    }
  }

  const json* child(const std::string& key) {
    if (!has(key)) return nullptr;
    return &obj_.at(key);
  }

  [[noreturn]] void bad(const std::string& key, const std::string& msg) const {
    loc_.fail_at(name_, key, msg);
  }

 private:
  void check_unknown() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!seen_.count(it.key()))
        loc_.fail_at(name_, it.key(),
                     "unknown key '" + (name_.empty() ? "" : name_ + ".") + it.key() + "'");
  }

  const json& obj_;
  std::string name_;
  const Locator& loc_;
  std::set<std::string> seen_;
};

Vec3 to_vec3(const json& v, Section& sec, const std::string& key) {
  if (!v.is_array() || v.size() != 3) sec.bad(key, "'" + key + "' entries must be 3-element arrays");
  Vec3 out;
  for (int i = 0; i < 3; ++i) {
    if (!v[i].is_number()) sec.bad(key, "'" + key + "' entries must be numeric");
    out[i] = v[i].get<double>();
  }
  return out;
}

void read_physics(Section s, PhysParams& p) {
  s.get("g", p.g);
  s.get("m", p.m);
  s.get("kappa", p.kappa);
  s.get("kappa1", p.kappa1);
  s.get("eps", p.eps);
  s.get_vec3("P", p.P);
  s.get("m_r", p.m_r);
  s.get("strict_paper_regime", p.strict_paper_regime);
  s.get("recoil", p.recoil);
}

void read_grid(Section s, CascadeConfig& c) {
  s.get("angular_rule", c.angular_rule);
  s.get("cells_per_window", c.cells_per_window);
  std::string policy = "fixed";
  s.get("policy", policy);
  if (policy == "fixed")
    c.grid_policy = GridPolicy::fixed;
  else if (policy == "refine")
    c.grid_policy = GridPolicy::refine;
  else
    s.bad("policy", "grid.policy must be 'fixed' or 'refine'");
}

void read_basis(Section s, CascadeConfig& c) {
  s.get("n_max", c.n_max);
  s.get("budget", c.budget);
}

void read_cascade(Section s, CascadeConfig& c) {
  s.get("J", c.J);
  s.get("dressing_order", c.dressing_order);
  s.get("n_quad", c.n_quad);
  s.get("n_neumann", c.n_neumann);
  s.get("run_neumann", c.run_neumann);
  s.get("kato_dim_limit", c.kato_dim_limit);
  s.get("g_scan", c.g_scan);
}

void read_dispersion(Section s, DispersionOptions& d) {
  s.get_vec3("ray_direction", d.ray_direction);
  s.get("ray_radii", d.ray_radii);
  s.get("sigma_steps", d.sigma_steps);
  s.get("grid_points", d.grid_points);
  s.get("fd_step", d.fd_step);
  s.get("b1_step", d.b1_step);
  s.get_vec3("hoelder_P", d.hoelder_P);
  s.get("hoelder_base", d.hoelder_base);
  s.get("hoelder_min", d.hoelder_min);
  s.get("fixed_point_tol", d.fixed_point_tol);
  s.get("fixed_point_max_iter", d.fixed_point_max_iter);
  s.get("damping", d.damping);
  if (d.ray_direction.norm() == 0) s.bad("ray_direction", "dispersion.ray_direction must be nonzero");
  if (d.grid_points < 1) s.bad("grid_points", "dispersion.grid_points must be >= 1");
  if (!(d.fd_step > 0)) s.bad("fd_step", "dispersion.fd_step must be > 0");
  if (!(d.b1_step > 0)) s.bad("b1_step", "dispersion.b1_step must be > 0");
  if (!(d.hoelder_min > 0) || !(d.hoelder_base >= d.hoelder_min))
    s.bad("hoelder_min", "need 0 < dispersion.hoelder_min <= dispersion.hoelder_base");
}

void read_schedule(Section s, CutoffSchedule& c, const Locator& loc) {
  s.get("beta", c.beta);
  s.get("alpha", c.alpha);
  s.get("delta", c.delta);
  s.get("eps_part", c.eps_part);
  try {
    validate(c);
  } catch (const Error& e) {
    // anchor at the key most likely to be at fault
    std::string what = e.what();
    std::string key = what.find("beta") != std::string::npos    ? "beta"
                      : what.find("alpha") != std::string::npos ? "alpha"
                                                                : "eps_part";
    loc.fail_at("schedule", key, what);
  }
}

void read_overlap(Section s, OverlapOptions& o) {
  s.get("g", o.g);
  s.get("lo", o.lo);
  s.get("hi", o.hi);
  s.get("angular_rule", o.angular_rule);
  s.get("n_max", o.n_max);
  s.get_vec3("v_i", o.v_i);
  s.get_vec3("v_j", o.v_j);
}

void read_scatter(Section s, ScatterOptions& o, const Locator& loc) {
  s.get("g", o.g);
  s.get("sigma", o.sigma);
  s.get("closed_form_t", o.closed_form_t);
  s.get("interior_t", o.interior_t);
  s.get("interior_samples", o.interior_samples);
  s.get("eta", o.eta);
  s.get("eta_prime", o.eta_prime);
  s.get("vmax", o.vmax);
  s.get("decay_alpha", o.decay_alpha);
  s.get("decay_t", o.decay_t);
  s.get("decay_radii", o.decay_radii);
  s.get_vec3("decay_v", o.decay_v);
  s.get("gamma_t", o.gamma_t);
  s.get_vec3("gamma_v", o.gamma_v);
  s.get_vec3("gamma_gradE", o.gamma_gradE);
  if (s.has("gamma_sigma_t")) {
    double v = 0;
    s.get("gamma_sigma_t", v);
    o.gamma_sigma_t = v;
  }
  s.get("chi_delta", o.chi_delta);
  s.get("chi_s", o.chi_s);
  s.get("chi_scale", o.chi_scale);
  if (const json* pairs = s.child("mixed_pairs")) {
    if (!pairs->is_array()) s.bad("mixed_pairs", "scatter.mixed_pairs must be an array");
    o.mixed_pairs.clear();
    for (const auto& pr : *pairs) {
      if (!pr.is_array() || pr.size() != 2)
        s.bad("mixed_pairs", "scatter.mixed_pairs entries must be [v_i, v_j]");
      o.mixed_pairs.emplace_back(to_vec3(pr[0], s, "mixed_pairs"), to_vec3(pr[1], s, "mixed_pairs"));
    }
  }
  if (const json* ov = s.child("overlap")) read_overlap(Section(*ov, "overlap", loc), o.overlap);
  s.get("partition_L", o.partition_L);
  s.get("partition_log2_t", o.partition_log2_t);
  if (!(o.eta > 0 && o.eta < 1)) s.bad("eta", "scatter.eta must lie in (0, 1)");
  if (!(o.eta_prime > o.eta && o.eta_prime < 1)) s.bad("eta_prime", "need eta < eta_prime < 1");
  if (!(o.vmax >= 0 && o.vmax < 1)) s.bad("vmax", "scatter.vmax must lie in [0, 1)");
  if (!(o.chi_scale > 0)) s.bad("chi_scale", "scatter.chi_scale must be > 0");
}

void read_tolerances(Section s, CascadeConfig& c, AcceptanceTolerances& a, const Locator& loc) {
  s.get("eig_tol", c.tol);
  s.get("max_iter", c.max_iter);
  s.get("neumann_distance", c.neumann_distance_tol);
  s.get("phase_floor", c.phase_floor);
  if (const json* acc = s.child("acceptance")) {
    Section t(*acc, "acceptance", loc);
    t.get("quadrature", a.quadrature);
    t.get("free_theory", a.free_theory);
    t.get("oscillator", a.oscillator);
    t.get("eigensolver", a.eigensolver);
    t.get("projector", a.projector);
    t.get("neumann_ratio", a.neumann_ratio);
    t.get("gradient", a.gradient);
    t.get("gradient_zero", a.gradient_zero);
    t.get("phi_closed_form", a.phi_closed_form);
    t.get("phi_decay_slack", a.phi_decay_slack);
    t.get("parseval", a.parseval);
    t.get("chi_l1_slack", a.chi_l1_slack);
    t.get("chi_halving", a.chi_halving);
    t.get("overlap", a.overlap);
    t.get("mixed", a.mixed);
  }
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::config, source + ":" + std::to_string(line_of(text, e.byte ? e.byte - 1 : 0)) +
                                ": malformed JSON (" + e.what() + ")");
  }
  Locator loc(text, source);
  RunConfig rc;
  rc.source = source;
  {
    Section top(doc, "", loc);
    if (const json* j = top.child("physics")) read_physics(Section(*j, "physics", loc), rc.cascade.params);
    if (const json* j = top.child("grid")) read_grid(Section(*j, "grid", loc), rc.cascade);
    if (const json* j = top.child("basis")) read_basis(Section(*j, "basis", loc), rc.cascade);
    if (const json* j = top.child("cascade")) read_cascade(Section(*j, "cascade", loc), rc.cascade);
    if (const json* j = top.child("dispersion"))
      read_dispersion(Section(*j, "dispersion", loc), rc.dispersion);
    if (const json* j = top.child("schedule"))
      read_schedule(Section(*j, "schedule", loc), rc.schedule, loc);
    else
      validate(rc.schedule);
    if (const json* j = top.child("scatter")) read_scatter(Section(*j, "scatter", loc), rc.scatter, loc);
    if (const json* j = top.child("tolerances"))
      read_tolerances(Section(*j, "tolerances", loc), rc.cascade, rc.acceptance, loc);
    if (const json* j = top.child("output")) {
      Section s(*j, "output", loc);
      s.get("dir", rc.out_dir);
    }
  }
  auto& d = rc.dispersion;
  if (d.ray_radii.empty()) d.ray_radii = {0.1, 0.2, 0.3, 0.4, 0.5};
  if (d.sigma_steps.empty()) d.sigma_steps = {0, rc.cascade.J / 2, rc.cascade.J};
  for (int j : d.sigma_steps)
    if (j < 0 || j > rc.cascade.J) loc.fail_at("dispersion", "sigma_steps", "sigma_steps entries must lie in [0, J]");
  try {
    validate(rc.cascade);
    rc.warnings = validate(rc.cascade.params);
  } catch (const Error& e) {
    std::string what = e.what();
    std::string key;
    for (const char* k : {"kappa1", "kappa", "eps", "m_r", "g", "m", "P"})
      if (what.find(std::string(k) + " ") != std::string::npos ||
          what.find(std::string(k) + " must") != std::string::npos) {
        key = k;
        break;
      }
    loc.fail_at(key.empty() ? "" : "physics", key, what);
  }
  return rc;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace nelson
