#include <doctest.h>

#include <cmath>
#include <limits>

#include "fixtures.hpp"
#include "maskrl/errors.hpp"
#include "maskrl/metrics.hpp"
#include "oracles.hpp"

using namespace maskrl;
using namespace maskrl::metrics;

TEST_CASE("ledger ordering and totals") {
  MetricsLedger ledger;
  ledger.add_evaluation({10, 0, 10, {0.5, 0.25}, 0.0});
  CHECK(ledger.evaluations()[0].total == 0.75);
  CHECK_THROWS_AS(ledger.add_evaluation({10, 0, 20, {1, 1}, 0.0}), UsageError);
  CHECK_THROWS_AS(ledger.add_evaluation({5, 0, 20, {1, 1}, 0.0}), UsageError);
  ledger.add_evaluation({20, 1, 10, {1, 1}, 0.0});
  CHECK(total_eval_auc(ledger) == 2.75);
  ledger.add_training_point(1, 0.5);
  CHECK(ledger.training_curve(1).size() == 1);
  CHECK(ledger.training_curve(0).empty());
  CHECK_THROWS_AS(ledger.training_curve(4), std::out_of_range);
  CHECK_THROWS_AS(total_eval_auc(MetricsLedger{}), ConfigError);
}

TEST_CASE("curve AUC and forward transfer") {
  const std::vector<double> c{0.0, 0.5, 1.0, 1.0};
  CHECK(curve_auc(c) == doctest::Approx(0.625));
  CHECK(curve_auc(c, 0.0, 2.0) == doctest::Approx(0.3125));
  const std::vector<double> ref{0.0, 0.0, 0.5, 1.0};
  CHECK(*forward_transfer(c, ref) == doctest::Approx((0.625 - 0.375) / 0.625));
  CHECK(*forward_transfer(ref, ref) == 0.0);
  CHECK(*forward_transfer(ref, c) < 0.0);
  const std::vector<double> ones{1, 1, 1, 1};
  CHECK_FALSE(forward_transfer(c, ones).has_value());
  CHECK_THROWS_AS(forward_transfer(c, std::vector<double>{0, 1}), DimensionError);
}

TEST_CASE("mean and unbiased variance") {
  const std::vector<double> x{1, 2, 3, 4};
  CHECK(mean(x) == 2.5);
  CHECK(variance(x) == doctest::Approx(5.0 / 3.0));
}

TEST_CASE("t distribution against tabulated values") {
  CHECK(student_t_cdf(2.0, 4.5) == doctest::Approx(0.9458710464094375).epsilon(1e-12));
  CHECK(student_t_cdf(-0.7, 2.3) == doctest::Approx(0.2740036105323291).epsilon(1e-12));
  CHECK(student_t_cdf(1.5, 10) == doctest::Approx(0.9177463367772799).epsilon(1e-12));
  CHECK(student_t_cdf(3.2, 1) == doctest::Approx(0.9035887520207704).epsilon(1e-12));
  CHECK(student_t_cdf(0.25, 30) == doctest::Approx(0.5978542954597125).epsilon(1e-12));
  CHECK(student_t_quantile(0.975, 2) == doctest::Approx(4.302652729696142).epsilon(1e-10));
  CHECK(student_t_quantile(0.975, 23) == doctest::Approx(2.0686576104190406).epsilon(1e-10));
  for (double t : {-5.0, -1.3, 0.0, 0.4, 2.2, 7.0}) {
    CHECK(std::abs(student_t_cdf(t, 4.0) - oracle::t_cdf_dof4(t)) < 1e-13);
  }
}

TEST_CASE("Welch test against direct arithmetic") {
  const std::vector<double> a{1, 2, 3}, b{2.5, 3.5, 4.5};
  const auto w = welch_ttest(a, b);
  const auto o = oracle::welch_direct(a, b);
  CHECK(std::abs(w.t - o.t) < 1e-10);
  CHECK(std::abs(w.dof - 4.0) < 1e-10);
  CHECK(std::abs(w.p - o.p) < 1e-10);
  CHECK(std::abs(w.p - 0.14006598491201774) < 1e-12);

  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    const auto x = fixtures::random_tensor(7, 1, rng, 0, 3);
    const auto y = fixtures::random_tensor(11, 1, rng, -1, 2);
    const std::vector<double> xs(x.data(), x.data() + 7), ys(y.data(), y.data() + 11);
    const auto r = welch_ttest(xs, ys);
    const auto d = oracle::welch_direct(xs, ys);
    CHECK(std::abs(r.t - d.t) < 1e-10);
    CHECK(std::abs(r.dof - d.dof) < 1e-10);
    CHECK(r.p >= 0.0);
    CHECK(r.p <= 1.0);
    // Symmetry under swapping the samples.
    const auto s = welch_ttest(ys, xs);
    CHECK(s.t == doctest::Approx(-r.t));
    CHECK(s.p == doctest::Approx(r.p));
  }
}

TEST_CASE("Welch degenerate inputs") {
  const std::vector<double> x{1, 2, 3};
  const auto self = welch_ttest(x, x);
  CHECK(self.t == 0.0);
  CHECK(self.p == doctest::Approx(1.0).epsilon(1e-14));
  const std::vector<double> c{2, 2, 2}, d{3, 3};
  const auto same = welch_ttest(c, c);
  CHECK(same.p == 1.0);
  const auto diff = welch_ttest(c, d);
  CHECK(diff.p == 0.0);
  CHECK(std::isinf(diff.t));
  CHECK_THROWS_AS(welch_ttest(std::vector<double>{1}, c), ConfigError);
}

TEST_CASE("bootstrap interval") {
  const std::vector<double> a{0.3, 0.3, 0.3}, b{0.1, 0.1};
  const auto deg = bootstrap_ci(a, b, 500, 0.95, 9);
  CHECK(deg.lower == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(deg.upper == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(deg.excludes_zero());

  Rng rng(2);
  const auto x = fixtures::random_tensor(20, 1, rng, 0, 1);
  const auto y = fixtures::random_tensor(20, 1, rng, 0, 1);
  const std::vector<double> xs(x.data(), x.data() + 20), ys(y.data(), y.data() + 20);
  const auto i1 = bootstrap_ci(xs, ys, 2000, 0.95, 5);
  const auto i2 = bootstrap_ci(xs, ys, 2000, 0.95, 5);
  CHECK(i1.lower == i2.lower);
  CHECK(i1.upper == i2.upper);
  CHECK(i1.lower <= i1.estimate);
  CHECK(i1.estimate <= i1.upper);
  CHECK(i1.estimate == doctest::Approx(mean(xs) - mean(ys)));
  const auto narrow = bootstrap_ci(xs, ys, 2000, 0.5, 5);
  CHECK(narrow.upper - narrow.lower < i1.upper - i1.lower);
}

TEST_CASE("mean confidence interval") {
  const std::vector<double> x{1, 2, 3};
  const auto ci = mean_ci(x);
  CHECK(ci.mean == 2.0);
  CHECK(ci.n == 3);
  CHECK(ci.half_width == doctest::Approx(4.302652729696142 / std::sqrt(3.0)).epsilon(1e-10));
  CHECK(std::isnan(mean_ci(std::vector<double>{1}).half_width));
}

TEST_CASE("analysis matrices") {
  const auto arch = fixtures::small_arch();
  Rng rng(3);
  masknet::MaskStore store;
  for (int i = 0; i < 3; ++i) {
    masknet::StoredMask e;
    e.task_id = i;
    e.scores = fixtures::random_score_set(arch, masknet::MaskMode::binary, rng, -1, 1);
    nnx::Vector b = nnx::Vector::Constant(i + 1, 1.0 / (i + 1));
    e.betas.assign(arch.layer_count(), b);
    store.append(std::move(e));
  }
  const auto beta = beta_matrix(store, 1);
  REQUIRE(beta.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) CHECK(beta[k].size() == k + 1);
  const auto dist = distance_matrix(store, 0);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(dist[i][i] == 0.0);
    for (std::size_t j = 0; j < 3; ++j) CHECK(dist[i][j] == dist[j][i]);
  }
  masknet::MaskStore plain;
  plain.append({0, store[0].scores, {}});
  CHECK_THROWS_AS(beta_matrix(plain, 0), ConfigError);
}
