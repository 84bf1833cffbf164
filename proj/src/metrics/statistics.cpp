#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/students_t.hpp>

#include "maskrl/errors.hpp"
#include "maskrl/metrics.hpp"
#include "maskrl/random.hpp"

namespace maskrl::metrics {

double mean(std::span<const double> x) {
  if (x.empty()) throw ConfigError("mean of an empty sample");
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.size() < 2) throw ConfigError("sample variance needs at least two values");
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

double student_t_cdf(double t, double dof) {
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  return boost::math::cdf(boost::math::students_t(dof), t);
}

double student_t_quantile(double p, double dof) { return boost::math::quantile(boost::math::students_t(dof), p); }

WelchResult welch_ttest(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw ConfigError("Welch t-test needs at least two values per sample");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = mean(a), mb = mean(b);
  const double sa = variance(a) / na, sb = variance(b) / nb;

  WelchResult r;
  if (sa + sb == 0.0) {
    r.dof = na + nb - 2.0;
    if (ma == mb) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = ma > mb ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
      r.p = 0.0;
    }
    return r;
  }
  r.t = (ma - mb) / std::sqrt(sa + sb);
  r.dof = (sa + sb) * (sa + sb) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  r.p = 2.0 * boost::math::cdf(boost::math::complement(boost::math::students_t(r.dof), std::abs(r.t)));
  r.p = std::min(r.p, 1.0);
  return r;
}

namespace {

double percentile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0 || sorted[lo] == sorted[hi]) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double resampled_mean(std::span<const double> x, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[pick(rng)];
  return s / static_cast<double>(x.size());
}

}  // namespace

Interval bootstrap_ci(std::span<const double> a, std::span<const double> b, int iterations, double level,
                      std::uint64_t seed) {
  if (a.empty() || b.empty()) throw ConfigError("bootstrap needs non-empty samples");
  if (iterations < 1) throw ConfigError("bootstrap iterations must be >= 1");
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("confidence level must lie in (0, 1)");

  Rng rng(seed);
  std::vector<double> diffs(static_cast<std::size_t>(iterations));
  for (auto& d : diffs) {
    const double ra = resampled_mean(a, rng);
    d = ra - resampled_mean(b, rng);
  }
  std::sort(diffs.begin(), diffs.end());
  const double tail = (1.0 - level) / 2.0;
  return Interval{percentile(diffs, tail), percentile(diffs, 1.0 - tail), mean(a) - mean(b)};
}

MeanCi mean_ci(std::span<const double> values, double level) {
  MeanCi ci;
  ci.n = values.size();
  ci.mean = mean(values);
  if (values.size() < 2) {
    ci.half_width = std::numeric_limits<double>::quiet_NaN();
    return ci;
  }
  const double sd = std::sqrt(variance(values));
  const double q = student_t_quantile(0.5 + level / 2.0, static_cast<double>(values.size() - 1));
  ci.half_width = q * sd / std::sqrt(static_cast<double>(values.size()));
  return ci;
}

}  // namespace maskrl::metrics
