// Acceptance runner. Usage: acceptance [criterion ...]  (default: all)
// Prints one "criterion N PASS|FAIL: detail" line per requested criterion and
// exits non-zero if any of them failed.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "maskrl/cli.hpp"
#include "maskrl/lifelong.hpp"
#include "maskrl/metrics.hpp"
#include "maskrl/ppo.hpp"
#include "oracles.hpp"

using namespace maskrl;
using lifelong::Variant;
using nnx::Tensor2;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string num(double v, int precision = 3) {
  std::ostringstream ss;
  ss.precision(precision);
  ss << std::fixed << v;
  return ss.str();
}

lifelong::RunConfig config_for(const std::string& curriculum, Variant v, std::uint64_t seed) {
  cli::ExperimentConfig c;
  c.curriculum = curriculum;
  c.variant = v;
  return c.run_config(seed);
}

// Full-budget runs are expensive, so each (curriculum, variant, seed) runs once per process.
std::map<std::string, lifelong::RunResult> run_cache;

const lifelong::RunResult& cached_run(const std::string& curriculum, Variant v, std::uint64_t seed,
                                      const lifelong::Hooks& hooks = {}) {
  const std::string key = curriculum + "/" + lifelong::to_string(v) + "/" + std::to_string(seed);
  auto it = run_cache.find(key);
  if (it != run_cache.end()) return it->second;
  const auto t0 = std::chrono::steady_clock::now();
  auto r = lifelong::run_lifelong(config_for(curriculum, v, seed), hooks);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cerr << "  run " << key << ": total eval " << num(r.ledger.evaluations().empty() ? 0.0 : metrics::total_eval_auc(r.ledger), 2)
            << (r.aborted ? " (aborted: " + r.error + ")" : "") << " in " << num(secs, 0) << " s\n";
  return run_cache.emplace(key, std::move(r)).first->second;
}

// STE training curves for every task, averaged over seeds.
std::vector<std::vector<double>> ste_reference(const std::string& curriculum, const std::vector<std::uint64_t>& seeds) {
  const auto base = config_for(curriculum, Variant::ste, 0);
  std::vector<std::vector<double>> ref(base.tasks.size());
  for (auto seed : seeds) {
    const auto c = config_for(curriculum, Variant::ste, seed);
    for (std::size_t k = 0; k < c.tasks.size(); ++k) {
      const auto r = lifelong::run_ste(c, static_cast<int>(k));
      const auto& curve = r.ledger.training_curve(0);
      if (ref[k].empty()) ref[k].assign(curve.size(), 0.0);
      for (std::size_t i = 0; i < curve.size(); ++i) ref[k][i] += curve[i] / static_cast<double>(seeds.size());
    }
    std::cerr << "  STE " << curriculum << " seed " << seed << " done\n";
  }
  return ref;
}

Verdict criterion1() {
  const auto c = config_for("CT4", Variant::mask_ri, 0);
  Rng rng(derive_seed(0, "probe-observations"));
  // Node images of the CT4 graph plus random patterns, 50 rows in total.
  const ctgraph::ImageBank bank(c.tasks.front().config);
  Tensor2 x = fixtures::random_tensor(50, ctgraph::kObservationSize, rng, 0.0, 1.0);
  for (std::size_t i = 0; i < bank.node_count() && i < 50; ++i) x.row(static_cast<Eigen::Index>(i)) = bank.image(bank.nodes()[i]).transpose();

  std::vector<Tensor2> captured;
  int mismatches = 0;
  std::uint64_t final_hash = 0;
  lifelong::Hooks hooks;
  hooks.on_task_end = [&](int k, const lifelong::Agent& a) { captured.push_back(nnx::infer(a.policy(k), x).logits); };
  hooks.on_run_end = [&](const lifelong::Agent& a) {
    final_hash = dynamic_cast<const lifelong::MaskAgent&>(a).backbone().content_hash();
    for (std::size_t k = 0; k < captured.size(); ++k) {
      if (!fixtures::bit_equal(nnx::infer(a.policy(static_cast<int>(k)), x).logits, captured[k])) ++mismatches;
    }
  };
  const auto& r = cached_run("CT4", Variant::mask_ri, 0, hooks);
  const bool ok = !r.aborted && captured.size() == 4 && mismatches == 0 && final_hash == r.backbone_hash;
  return {ok, std::to_string(captured.size()) + " tasks captured, " + std::to_string(mismatches) +
                  " tasks with differing logits on 50 probes, backbone " + (final_hash == r.backbone_hash ? "unchanged" : "CHANGED")};
}

Verdict criterion2() {
  int qualifying = 0;
  std::ostringstream d;
  for (std::uint64_t seed : {0, 1, 2}) {
    const auto& r = cached_run("CT4", Variant::mask_ri, seed);
    bool learned = true, final_ok = true;
    std::ostringstream reach, fin;
    for (std::size_t k = 0; k < 4; ++k) {
      const auto& curve = r.ledger.training_curve(static_cast<int>(k));
      double best = 0.0;
      for (double v : curve) best = std::max(best, v);
      learned = learned && best >= 0.9;
      const double f = r.ledger.evaluations().back().task_returns[k];
      final_ok = final_ok && f >= 0.9;
      reach << (k ? "/" : "") << num(best, 2);
      fin << (k ? "/" : "") << num(f, 1);
    }
    const bool q = learned && final_ok && !r.aborted;
    qualifying += q;
    d << "seed " << seed << " best train " << reach.str() << " final eval " << fin.str() << (q ? " ok" : " no") << "; ";
  }
  d << qualifying << "/3 seeds qualify (need 2)";
  return {qualifying >= 2, d.str()};
}

Verdict criterion3() {
  std::vector<double> ri, blc;
  for (std::uint64_t seed : {0, 1, 2}) {
    ri.push_back(metrics::total_eval_auc(cached_run("CT8", Variant::mask_ri, seed).ledger));
    blc.push_back(metrics::total_eval_auc(cached_run("CT8", Variant::mask_blc, seed).ledger));
  }
  const double mri = metrics::mean(ri), mblc = metrics::mean(blc);
  const double lo = 699.33 * 0.85, hi = 699.33 * 1.15;
  const bool ok = mri >= lo && mri <= hi;
  return {ok, "MASK_RI mean total eval " + num(mri, 2) + " (window " + num(lo, 2) + " to " + num(hi, 2) +
                  "); MASK_BLC mean " + num(mblc, 2) + ", ordering BLC >= RI " + (mblc >= mri ? "holds" : "does not hold") +
                  " (reported only)"};
}

Verdict criterion4() {
  const std::vector<std::uint64_t> seeds{0, 1, 2};
  const auto ref = ste_reference("CT8", seeds);
  std::vector<double> ft_blc, ft_ewc;
  int undefined = 0;
  for (auto seed : seeds) {
    for (auto [v, out] : {std::pair{Variant::mask_blc, &ft_blc}, std::pair{Variant::ewc_mh, &ft_ewc}}) {
      const auto& r = cached_run("CT8", v, seed);
      for (std::size_t k = 0; k < ref.size(); ++k) {
        const auto ft = metrics::forward_transfer(r.ledger.training_curve(static_cast<int>(k)), ref[k]);
        if (ft) out->push_back(*ft);
        else ++undefined;
      }
    }
  }
  const auto w = metrics::welch_ttest(ft_blc, ft_ewc);
  const double mb = metrics::mean(ft_blc), me = metrics::mean(ft_ewc);
  const bool ok = mb > 0.0 && mb > me && w.p < 0.05;
  return {ok, "mean FT MASK_BLC " + num(mb) + " (n=" + std::to_string(ft_blc.size()) + "), EWC_MH " + num(me) +
                  " (n=" + std::to_string(ft_ewc.size()) + "), Welch t " + num(w.t) + " dof " + num(w.dof, 1) + " p " +
                  num(w.p, 4) + (undefined ? ", " + std::to_string(undefined) + " undefined FT values skipped" : "")};
}

Verdict criterion5() {
  const std::string curriculum = "custom:b2d2:0,1;b2d3:0,1";
  std::vector<double> margins;
  std::ostringstream d;
  for (std::uint64_t seed : {0, 1, 2}) {
    const auto& lc = cached_run(curriculum, Variant::mask_lc, seed);
    const auto& ri = cached_run(curriculum, Variant::mask_ri, seed);
    for (int k : {2, 3}) {
      margins.push_back(metrics::curve_auc(lc.ledger.training_curve(k)) - metrics::curve_auc(ri.ledger.training_curve(k)));
      d << "seed " << seed << " task " << k + 1 << " LC-RI " << num(margins.back()) << "; ";
    }
  }
  const double m = metrics::mean(margins);
  d << "mean margin " << num(m, 4);
  return {m > 0.0, d.str()};
}

Verdict criterion6() {
  const ctgraph::Config c{2, 3, 1};
  ctgraph::Environment env(ctgraph::TaskSpec::for_leaf(c, 5));
  Rng rng(derive_seed(0, "monte-carlo"));
  std::uniform_int_distribution<int> act(0, c.action_count() - 1);
  const long n = 100000;
  long hits = 0;
  for (long i = 0; i < n; ++i) {
    env.reset();
    while (!env.done()) hits += env.step(act(rng)).reward > 0.0;
  }
  const double p = 1.0 / 2187.0;
  const double expected = n * p, sigma = std::sqrt(n * p * (1 - p));
  const double z = (hits - expected) / sigma;
  return {std::abs(z) <= 3.0, std::to_string(hits) + " hits in " + std::to_string(n) + " episodes, expected " +
                                  num(expected, 2) + " (z = " + num(z, 2) + ")"};
}

Verdict criterion7() {
  Rng rng(derive_seed(0, "gradient-suite"));
  double worst_fd = 0.0;
  for (int i = 0; i < 100; ++i) worst_fd = std::max(worst_fd, fixtures::continuous_gradient_error(rng));
  std::uniform_real_distribution<double> u(-2, 2), p(0.5, 1.0);
  std::uniform_int_distribution<int> len(1, 64);
  std::bernoulli_distribution done(0.1);
  double worst_gae = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const int n = len(rng);
    std::vector<double> r(n), v(n);
    std::vector<std::uint8_t> dn(n);
    for (int t = 0; t < n; ++t) {
      r[t] = u(rng);
      v[t] = u(rng);
      dn[t] = done(rng);
    }
    const double boot = u(rng), g = p(rng), l = p(rng);
    const auto a = ppo::gae_sequence(r, v, dn, boot, g, l);
    const auto b = oracle::gae_direct(r, v, dn, boot, g, l);
    for (int t = 0; t < n; ++t) worst_gae = std::max(worst_gae, std::abs(a[t] - b[t]));
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "max FD relative error %.3e over 100 instances, max GAE deviation %.3e over 1000 sequences",
                worst_fd, worst_gae);
  return {worst_fd < 1e-4 && worst_gae <= 1e-12, buf};
}

Verdict criterion8() {
  const bool bin = fixtures::consolidation_equivalent(masknet::MaskMode::binary, derive_seed(0, "consolidation", 0), 100);
  const bool cont = fixtures::consolidation_equivalent(masknet::MaskMode::continuous, derive_seed(0, "consolidation", 1), 100);
  return {bin && cont, std::string("binary ") + (bin ? "identical" : "DIFFERS") + ", continuous " + (cont ? "identical" : "DIFFERS") +
                           " on 100 inputs"};
}

Verdict criterion9() {
  const std::vector<double> a{1, 2, 3}, b{2, 3, 4};
  const auto w = metrics::welch_ttest(a, b);
  const auto o = oracle::welch_direct(a, b);
  const double err = std::max({std::abs(w.t - o.t), std::abs(w.dof - o.dof), std::abs(w.p - o.p)});

  const std::vector<double> ca{0.7, 0.7, 0.7, 0.7}, cb{0.2, 0.2, 0.2};
  const auto deg = metrics::bootstrap_ci(ca, cb, 10000, 0.95, 3);
  const double point = metrics::mean(ca) - metrics::mean(cb);
  const bool collapsed = deg.lower == point && deg.upper == point;

  Rng rng(11);
  const auto x = fixtures::random_tensor(24, 1, rng), y = fixtures::random_tensor(24, 1, rng);
  const std::vector<double> xs(x.data(), x.data() + 24), ys(y.data(), y.data() + 24);
  const auto i1 = metrics::bootstrap_ci(xs, ys, 10000, 0.95, 42);
  const auto i2 = metrics::bootstrap_ci(xs, ys, 10000, 0.95, 42);
  const bool det = i1.lower == i2.lower && i1.upper == i2.upper;

  char buf[200];
  std::snprintf(buf, sizeof buf, "Welch t %.10f dof %.6f p %.10f, max oracle deviation %.2e; degenerate interval %s; "
                "bootstrap %s", w.t, w.dof, w.p, err, collapsed ? "collapses to the point difference" : "DOES NOT collapse",
                det ? "deterministic" : "NOT deterministic");
  return {err < 1e-10 && collapsed && det, buf};
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::function<Verdict()>> criteria{
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4}, {5, criterion5},
      {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9}};
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::atoi(argv[i]));
  if (wanted.empty()) {
    for (const auto& [k, f] : criteria) wanted.push_back(k);
  }
  int failed = 0;
  for (int k : wanted) {
    const auto it = criteria.find(k);
    if (it == criteria.end()) {
      std::cerr << "unknown criterion " << k << "\n";
      return 2;
    }
    Verdict v;
    try {
      v = it->second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    std::cout << "criterion " << k << (v.pass ? " PASS: " : " FAIL: ") << v.detail << std::endl;
    failed += !v.pass;
  }
  return failed ? 1 : 0;
}
