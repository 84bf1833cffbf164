#pragma once

// Reference computations written independently of the library code paths
// they check: direct sums instead of recursions, closed forms instead of
// special functions, explicit enumeration instead of the environment class.

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace oracle {

/// A_t = Σ_{l≥0} (γλ)^l δ_{t+l}, stopping after the first terminal step.
inline std::vector<double> gae_direct(const std::vector<double>& r, const std::vector<double>& v,
                                      const std::vector<std::uint8_t>& done, double bootstrap, double gamma,
                                      double lambda) {
  const std::size_t n = r.size();
  std::vector<double> delta(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double next = t + 1 < n ? v[t + 1] : bootstrap;
    delta[t] = r[t] + (done[t] ? 0.0 : gamma * next) - v[t];
  }
  std::vector<double> adv(n, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    double w = 1.0;
    for (std::size_t k = t; k < n; ++k) {
      adv[t] += w * delta[k];
      if (done[k]) break;
      w *= gamma * lambda;
    }
  }
  return adv;
}

/// Student-t CDF for 4 degrees of freedom in closed form.
inline double t_cdf_dof4(double t) {
  const double u = t / std::sqrt(t * t + 4.0);
  return 0.5 + 0.75 * u * (1.0 - u * u / 3.0);
}

struct Welch {
  double t, dof, p;
};

/// Welch statistic and Welch–Satterthwaite dof by direct arithmetic; p only for dof = 4.
inline Welch welch_direct(const std::vector<double>& a, const std::vector<double>& b) {
  auto stats = [](const std::vector<double>& x, double& m, double& var) {
    m = 0.0;
    for (double v : x) m += v;
    m /= static_cast<double>(x.size());
    var = 0.0;
    for (double v : x) var += (v - m) * (v - m);
    var /= static_cast<double>(x.size() - 1);
  };
  double ma, va, mb, vb;
  stats(a, ma, va);
  stats(b, mb, vb);
  const double sa = va / static_cast<double>(a.size()), sb = vb / static_cast<double>(b.size());
  Welch w;
  w.t = (ma - mb) / std::sqrt(sa + sb);
  w.dof = (sa + sb) * (sa + sb) /
          (sa * sa / static_cast<double>(a.size() - 1) + sb * sb / static_cast<double>(b.size() - 1));
  w.p = 2.0 * (1.0 - t_cdf_dof4(std::abs(w.t)));
  return w;
}

/// Central finite-difference gradient of f at x.
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double fp = f(x);
    x[i] = x0 - h;
    const double fm = f(x);
    x[i] = x0;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// ||a - b|| / max(||a||, ||b||); 0 when both vanish.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double scale = std::sqrt(std::max(na, nb));
  return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

/// Plays one action sequence on a (b, d) tree graph by the textual rules; returns the reward
/// or -1 if the sequence does not end exactly when the episode does.
inline int play_tree(int branch, int depth, const std::vector<int>& goal, const std::vector<int>& actions) {
  enum { home, wait, decide } where = home;
  int level = 0;
  std::vector<int> path;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const int a = actions[i];
    const bool last = i + 1 == actions.size();
    if (where == home || where == wait) {
      if (a != 0) return last ? 0 : -1;
      if (where == home) {
        where = wait;
        level = 1;
      } else {
        where = decide;
      }
      continue;
    }
    if (a < 1 || a > branch) return last ? 0 : -1;
    path.push_back(a - 1);
    if (level == depth) {
      if (!last) return -1;
      return path == goal ? 1 : 0;
    }
    ++level;
    where = wait;
  }
  return -1;
}

}  // namespace oracle
