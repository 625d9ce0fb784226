#pragma once

#include <algorithm>
#include <cmath>
#include <queue>
#include <utility>
#include <vector>

namespace nelson::quad {

struct Rule {
  std::vector<double> x;
  std::vector<double> w;
};

// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on P_n.
inline Rule gauss_legendre(int n) {
  Rule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = 0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    r.x[i] = -z;
    r.x[n - 1 - i] = z;
    r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return r;
}

struct Result {
  double value = 0;
  double error = 0;
  int intervals = 0;
  bool converged = true;
};

namespace detail {

inline constexpr double xgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double wgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double wg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename F>
std::pair<double, double> gk15(F& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double fc = f(c);
  double resk = fc * wgk[7];
  double resg = fc * wg[3];
  for (int j = 0; j < 7; ++j) {
    double dx = h * xgk[j];
    double f1 = f(c - dx), f2 = f(c + dx);
    resk += wgk[j] * (f1 + f2);
    if (j % 2 == 1) resg += wg[j / 2] * (f1 + f2);
  }
  return {resk * h, std::abs((resk - resg) * h)};
}

}  // namespace detail

// Adaptive Gauss-Kronrod (7/15) with global error control; [a, b] is first cut into
// `panels` equal pieces so oscillatory integrands start resolved.
template <typename F>
Result integrate(F&& f, double a, double b, double rel_tol = 1e-10, double abs_tol = 1e-14,
                 int panels = 1, int max_intervals = 200000) {
  struct Seg {
    double a, b, val, err;
    bool operator<(const Seg& o) const { return err < o.err; }
  };
  std::priority_queue<Seg> heap;
  Result out;
  double total = 0, err = 0;
  panels = std::max(1, panels);
  for (int i = 0; i < panels; ++i) {
    double lo = a + (b - a) * i / panels;
    double hi = (i + 1 == panels) ? b : a + (b - a) * (i + 1) / panels;
    auto [v, e] = detail::gk15(f, lo, hi);
    heap.push({lo, hi, v, e});
    total += v;
    err += e;
  }
  int count = panels;
  while (err > std::max(abs_tol, rel_tol * std::abs(total))) {
    if (count >= max_intervals) {
      out.converged = false;
      break;
    }
    Seg s = heap.top();
    heap.pop();
    double mid = 0.5 * (s.a + s.b);
    auto [v1, e1] = detail::gk15(f, s.a, mid);
    auto [v2, e2] = detail::gk15(f, mid, s.b);
    total += v1 + v2 - s.val;
    err += e1 + e2 - s.err;
    heap.push({s.a, mid, v1, e1});
    heap.push({mid, s.b, v2, e2});
    ++count;
    if (err < 0) err = 0;
  }
  // resum to limit drift from incremental updates
  total = 0;
  err = 0;
  while (!heap.empty()) {
    total += heap.top().val;
    err += heap.top().err;
    heap.pop();
  }
  out.value = total;
  out.error = err;
  out.intervals = count;
  return out;
}

}  // namespace nelson::quad
