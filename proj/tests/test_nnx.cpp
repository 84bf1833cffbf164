#include <doctest.h>

#include <cmath>
#include <set>

#include "maskrl/errors.hpp"
#include "maskrl/nnx.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace maskrl;
using nnx::Tensor2;
using nnx::Vector;

using fixtures::random_tensor;
using fixtures::small_arch;

TEST_CASE("arch shapes and parameter count") {
  nnx::Arch a;
  CHECK(a.layer_count() == 5);
  CHECK(a.layer_shape(0) == std::pair{200, 144});
  CHECK(a.layer_shape(3) == std::pair{3, 200});
  CHECK(a.layer_shape(4) == std::pair{1, 200});
  CHECK(a.parameter_count() == 144 * 200 + 2 * 200 * 200 + 3 * 200 + 200);
  CHECK_THROWS_AS(a.layer_shape(5), DimensionError);

  nnx::Arch bad = a;
  bad.hidden = {200, 0};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(nnx::init_backbone(bad, 1), ConfigError);
}

TEST_CASE("signed Kaiming constant backbone") {
  const auto net = nnx::init_backbone(nnx::Arch{}, 7);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const double c = std::sqrt(2.0 / net.weight(l).cols());
    std::set<double> mags;
    for (Eigen::Index i = 0; i < net.weight(l).size(); ++i) mags.insert(std::abs(net.weight(l).data()[i]));
    CHECK(mags.size() == 1);
    CHECK(*mags.begin() == c);
    CHECK(net.constant(l) == c);
  }
  // fan_in = 200 layers sit at exactly 0.1.
  CHECK(std::abs(net.weight(1)(0, 0)) == doctest::Approx(0.1).epsilon(1e-15));

  CHECK(nnx::init_backbone(nnx::Arch{}, 7).content_hash() == net.content_hash());
  const auto other = nnx::init_backbone(nnx::Arch{}, 8);
  CHECK(other.content_hash() != net.content_hash());
  CHECK((other.weight(0).array().sign() != net.weight(0).array().sign()).count() > 0);
}

TEST_CASE("masked product by hand") {
  Tensor2 w(2, 2), m(2, 2), x(1, 2);
  w << 1, 2, 3, 4;
  m << 1, 0, 0, 1;
  x << 1, 1;
  const Tensor2 y = x * nnx::modulate(w, m).transpose();
  CHECK(y(0, 0) == 1.0);
  CHECK(y(0, 1) == 4.0);
  CHECK_THROWS_AS(nnx::modulate(w, Tensor2::Ones(2, 3)), DimensionError);
}

TEST_CASE("identity and zero masks") {
  const auto net = nnx::init_backbone(small_arch(), 3);
  Rng rng(1);
  const Tensor2 x = random_tensor(4, 6, rng, 0.0, 1.0);
  std::vector<Tensor2> ones, zeros;
  for (const auto& w : net.weights()) {
    ones.push_back(Tensor2::Ones(w.rows(), w.cols()));
    zeros.push_back(Tensor2::Zero(w.rows(), w.cols()));
  }
  nnx::LayerStack plain;
  plain.weights.assign(net.weights().begin(), net.weights().end());
  const auto a = nnx::infer(plain, x);
  const auto b = nnx::forward(net, ones, x);
  CHECK(a.logits == b.output.logits);
  CHECK(a.values == b.output.values);

  const auto z = nnx::forward(net, zeros, x);
  CHECK(z.output.logits.isZero(0.0));
  CHECK(z.output.values.isZero(0.0));

  CHECK_THROWS_AS(nnx::forward(net, ones, Tensor2::Ones(1, 5)), DimensionError);
  std::vector<Tensor2> short_masks(ones.begin(), ones.end() - 1);
  CHECK_THROWS_AS(nnx::forward(net, short_masks, x), DimensionError);
}

TEST_CASE("forward is pure") {
  const auto net = nnx::init_backbone(small_arch(), 3);
  Rng rng(2);
  const Tensor2 x = random_tensor(3, 6, rng);
  std::vector<Tensor2> masks;
  for (const auto& w : net.weights()) masks.push_back(random_tensor(static_cast<int>(w.rows()), static_cast<int>(w.cols()), rng));
  const auto a = nnx::forward(net, masks, x);
  const auto b = nnx::forward(net, masks, x);
  CHECK(a.output.logits == b.output.logits);
  CHECK(a.output.values == b.output.values);
}

TEST_CASE("tape usage") {
  nnx::GradTape empty;
  CHECK_FALSE(empty.recorded());
  CHECK_THROWS_AS(nnx::backward(empty, Tensor2(), Vector()), UsageError);

  const auto net = nnx::init_backbone(small_arch(), 3);
  nnx::LayerStack s;
  s.weights.assign(net.weights().begin(), net.weights().end());
  nnx::GradTape tape;
  const auto out = nnx::forward(s, Tensor2(0, 6), tape);
  CHECK(out.logits.rows() == 0);
  const auto g = nnx::backward(tape, Tensor2(0, 3), Vector(0));
  REQUIRE(g.weights.size() == 4);
  for (const auto& t : g.weights) CHECK(t.isZero(0.0));

  CHECK_THROWS_AS(nnx::backward(tape, Tensor2::Zero(1, 3), Vector::Zero(1)), DimensionError);
}

TEST_CASE("reverse pass matches finite differences") {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    nnx::LayerStack s;
    const auto arch = small_arch();
    for (std::size_t l = 0; l < arch.layer_count(); ++l) {
      auto [r, c] = arch.layer_shape(l);
      s.weights.push_back(random_tensor(r, c, rng));
      s.biases.push_back(random_tensor(r, 1, rng));
    }
    const Tensor2 x = random_tensor(4, 6, rng);
    const Tensor2 cl = random_tensor(4, 3, rng);
    const Tensor2 cv = random_tensor(4, 1, rng);

    auto loss_of = [&](const nnx::LayerStack& st) {
      const auto o = nnx::infer(st, x);
      return o.logits.cwiseProduct(cl).sum() + o.values.dot(cv.col(0));
    };
    nnx::GradTape tape;
    nnx::forward(s, x, tape);
    const auto g = nnx::backward(tape, cl, cv.col(0));

    for (std::size_t l = 0; l < s.weights.size(); ++l) {
      std::vector<double> p(s.weights[l].data(), s.weights[l].data() + s.weights[l].size());
      auto f = [&](const std::vector<double>& v) {
        auto st = s;
        std::copy(v.begin(), v.end(), st.weights[l].data());
        return loss_of(st);
      };
      const auto fd = oracle::fd_gradient(f, p, 1e-6);
      std::vector<double> an(g.weights[l].data(), g.weights[l].data() + g.weights[l].size());
      CHECK(oracle::relative_error(an, fd) < 1e-6);

      std::vector<double> pb(s.biases[l].data(), s.biases[l].data() + s.biases[l].size());
      auto fb = [&](const std::vector<double>& v) {
        auto st = s;
        std::copy(v.begin(), v.end(), st.biases[l].data());
        return loss_of(st);
      };
      const auto fdb = oracle::fd_gradient(fb, pb, 1e-6);
      std::vector<double> anb(g.biases[l].data(), g.biases[l].data() + g.biases[l].size());
      CHECK(oracle::relative_error(anb, fdb) < 1e-6);
    }
  }
}

TEST_CASE("layer the loss ignores gets zero gradient") {
  const auto net = nnx::init_backbone(small_arch(), 5);
  nnx::LayerStack s;
  s.weights.assign(net.weights().begin(), net.weights().end());
  Rng rng(3);
  nnx::GradTape tape;
  nnx::forward(s, random_tensor(2, 6, rng), tape);
  // Only the value output matters, so the actor head receives nothing.
  const auto g = nnx::backward(tape, Tensor2::Zero(2, 3), Vector::Ones(2));
  CHECK(g.weights[2].isZero(0.0));
}

TEST_CASE("softmax helpers") {
  Tensor2 z(2, 3);
  z << 0, 0, 0, 1000, 0, -1000;
  const Tensor2 p = nnx::softmax_rows(z);
  CHECK(p(0, 0) == doctest::Approx(1.0 / 3.0));
  CHECK(p(1, 0) == doctest::Approx(1.0));
  const Tensor2 lp = nnx::log_softmax_rows(z);
  CHECK(lp(0, 1) == doctest::Approx(-std::log(3.0)));
  CHECK(std::isfinite(lp(1, 2)));
}
