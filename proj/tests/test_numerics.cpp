#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "sdat/errors.hpp"
#include "sdat/numerics/adam.hpp"
#include "sdat/numerics/mlp.hpp"
#include "sdat/numerics/ops.hpp"
#include "sdat/numerics/prob_batch.hpp"
#include "sdat/numerics/rng.hpp"
#include "sdat/numerics/value_graph.hpp"
#include "support/gradcheck.hpp"

using namespace sdat;
using namespace sdat::numerics;
using sdat::testing::central_differences;
using sdat::testing::max_relative_error;

namespace {

Tensor random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  Tensor t({r, c});
  for (auto& v : t.values()) v = scale * rng.normal();
  return t;
}

// Composite loss CE(softmax(mlp(x)), label) as a function of the flat parameters.
double composite_plain(const MlpParams& shape, std::span<const double> flat, const Tensor& x,
                       const std::vector<std::size_t>& labels) {
  MlpParams p = shape;
  p.assign_flat(flat);
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    total += cross_entropy(softmax(mlp_apply(p, x.row(i))), labels[i]);
  }
  return total;
}

}  // namespace

TEST_CASE("tensor construction checks the data length") {
  CHECK_THROWS_AS(Tensor({2, 3}, std::vector<double>(5, 0.0)), ShapeError);
  const Tensor m = Tensor::matrix(2, 2, {1, 2, 3, 4});
  CHECK(m.at(1, 0) == 3.0);
  CHECK(m.all_finite());
  Tensor bad({1}, std::vector<double>{std::nan("")});
  CHECK_FALSE(bad.all_finite());
}

TEST_CASE("rng streams are reproducible and distinct") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng s1 = Rng::derive(7, 1), s2 = Rng::derive(7, 2), s1b = Rng::derive(7, 1);
  const auto x = s1.next_u64();
  CHECK(x == s1b.next_u64());
  CHECK(x != s2.next_u64());
  Rng u(3);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
    CHECK(u.below(5) < 5);
  }
}

TEST_CASE("softmax examples") {
  const std::vector<double> zero{0.0, 0.0};
  auto s = softmax(zero);
  CHECK(s[0] == 0.5);
  CHECK(s[1] == 0.5);

  const std::vector<double> ln2{std::log(2.0), 0.0};
  s = softmax(ln2);
  // e^{ln 2} / (e^{ln 2} + 1)
  CHECK(s[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(s[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

  const std::vector<double> big{1000.0, 0.0};
  s = softmax(big);
  CHECK(std::isfinite(s[0]));
  CHECK(s[0] == doctest::Approx(1.0));
  CHECK(s[1] < 1e-300);
}

TEST_CASE("softmax rows sum to one and stay positive") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> logits(1 + rng.below(6));
    for (auto& v : logits) v = 5.0 * rng.normal();
    const auto s = softmax(logits);
    double sum = 0.0;
    for (double v : s) {
      CHECK(v > 0.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("cross entropy examples") {
  const std::vector<double> onehot{0.0, 1.0};
  CHECK(cross_entropy(onehot, 1) == 0.0);
  const std::vector<double> half{0.5, 0.5};
  CHECK(cross_entropy(half, 0) == doctest::Approx(0.693147).epsilon(1e-6));
  const std::vector<double> p{0.6, 0.4};
  CHECK(cross_entropy(p, 0) == doctest::Approx(0.510826).epsilon(1e-6));
  CHECK(cross_entropy(p, 0) == doctest::Approx(-std::log(0.6)).epsilon(1e-15));
  CHECK_THROWS_AS(cross_entropy(p, 2), ArgumentError);
  // Floor keeps a zero probability finite.
  CHECK(cross_entropy(onehot, 0) == doctest::Approx(-std::log(kProbabilityFloor)));
}

TEST_CASE("cross entropy is nonnegative") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> logits(2 + rng.below(4));
    for (auto& v : logits) v = 3.0 * rng.normal();
    const auto s = softmax(logits);
    CHECK(cross_entropy(s, rng.below(s.size())) >= 0.0);
  }
}

TEST_CASE("cosine similarity examples") {
  const std::vector<double> a{1.0, 2.0, -1.0};
  const std::vector<double> neg{-1.0, -2.0, 1.0};
  const std::vector<double> x{1.0, 0.0}, y{0.0, 3.0};
  CHECK(cosine_similarity(a, a) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine_similarity(a, neg) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(cosine_similarity(x, y) == 0.0);
  const std::vector<double> zero{0.0, 0.0};
  CHECK_THROWS_AS(cosine_similarity(zero, x), DegenerateInputError);
}

TEST_CASE("mmd examples") {
  const Tensor origin = Tensor::matrix(1, 2, {0, 0});
  const Tensor unit = Tensor::matrix(1, 2, {1, 0});
  CHECK(mmd_rbf(origin, origin, 1.0) == 0.0);
  // k(x,x) + k(y,y) - 2 k(x,y) = 2 - 2 exp(-1/2)
  CHECK(mmd_rbf(origin, unit, 1.0) == doctest::Approx(2.0 - 2.0 * std::exp(-0.5)).epsilon(1e-14));
  CHECK(mmd_rbf(origin, unit, 1.0) == doctest::Approx(0.786939).epsilon(1e-6));
  Rng rng(2);
  const Tensor x = random_matrix(7, 2, rng);
  CHECK(std::abs(mmd_rbf(x, x, 0.8)) < 1e-15);
  CHECK_THROWS_AS(mmd_rbf(x, x, 0.0), ArgumentError);
  CHECK_THROWS_AS(mmd_rbf(x, x, -1.0), ArgumentError);
}

TEST_CASE("median pairwise distance") {
  const Tensor pts = Tensor::matrix(3, 1, {0, 1, 3});
  // distances 1, 3, 2
  CHECK(median_pairwise_distance(pts) == 2.0);
}

TEST_CASE("graph and plain forms agree bit for bit") {
  Rng rng(9);
  const Tensor x = random_matrix(5, 2, rng);
  const Tensor y = random_matrix(6, 2, rng);
  ValueGraph g;
  const auto xn = variables(g, x);
  CHECK(g.value(mmd_rbf(g, xn, y, 0.7)) == mmd_rbf(x, y, 0.7));

  const auto params = MlpParams::init(std::vector<std::size_t>{2, 4, 3}, rng);
  const Tensor plain = mlp_apply(params, x);
  ValueGraph g2;
  const auto bound = bind(g2, params);
  const auto out = mlp_forward(g2, bound, constants(g2, x));
  CHECK(values(g2, out) == plain);
  const auto probs = softmax_rows(g2, out);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto s = softmax(plain.row(i));
    for (std::size_t k = 0; k < 3; ++k) CHECK(g2.value(probs.row(i)[k]) == s[k]);
  }
}

TEST_CASE("mlp forward examples") {
  const std::vector<std::size_t> widths{2, 3, 2};
  const auto zeros = MlpParams::zeros(widths);
  const std::vector<double> in{0.3, -7.0};
  for (double v : mlp_apply(zeros, in)) CHECK(v == 0.0);

  MlpParams ident = MlpParams::zeros(std::vector<std::size_t>{2, 2});
  ident.layers[0].weight.at(0, 0) = 1.0;
  ident.layers[0].weight.at(1, 1) = 1.0;
  const std::vector<double> v{1.0, 2.0};
  const auto out = mlp_apply(ident, v);
  CHECK(out[0] == 1.0);
  CHECK(out[1] == 2.0);

  const std::vector<double> wrong{1.0, 2.0, 3.0};
  CHECK_THROWS_AS(mlp_apply(ident, wrong), ShapeError);
}

TEST_CASE("2-2-2 seed-0 network matches a hand-rolled forward pass") {
  Rng rng(0);
  const auto p = MlpParams::init(std::vector<std::size_t>{2, 2, 2}, rng);
  const double x[2] = {1.0, 0.0};
  const auto& w1 = p.layers[0].weight;
  const auto& b1 = p.layers[0].bias;
  const auto& w2 = p.layers[1].weight;
  const auto& b2 = p.layers[1].bias;
  double h[2];
  for (int j = 0; j < 2; ++j) h[j] = std::tanh(w1.at(j, 0) * x[0] + w1.at(j, 1) * x[1] + b1[j]);
  double expect[2];
  for (int j = 0; j < 2; ++j) expect[j] = w2.at(j, 0) * h[0] + w2.at(j, 1) * h[1] + b2[j];

  const std::vector<double> in{1.0, 0.0};
  const auto got = mlp_apply(p, in);
  CHECK(got[0] == doctest::Approx(expect[0]).epsilon(1e-15));
  CHECK(got[1] == doctest::Approx(expect[1]).epsilon(1e-15));
  // Initialisation is deterministic for a fixed seed.
  Rng again(0);
  CHECK(MlpParams::init(std::vector<std::size_t>{2, 2, 2}, again) == p);
}

TEST_CASE("backward examples") {
  ValueGraph g;
  const NodeId x = g.variable(3.0);
  const NodeId f = g.square(x);
  CHECK(g.backward(f)[x] == 6.0);

  ValueGraph g2;
  const NodeId y = g2.variable(2.0);
  const NodeId c = g2.constant(5.0);
  CHECK(g2.backward(c)[y] == 0.0);

  ValueGraph g3;
  NodeTensor vec = variables(g3, Tensor::vector({1.0, 2.0}));
  CHECK_THROWS_AS(backward(g3, vec), ArgumentError);
}

TEST_CASE("composite CE-softmax-MLP gradient matches finite differences") {
  Rng rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const auto params = MlpParams::init(std::vector<std::size_t>{2, 5, 3}, rng);
    const Tensor x = random_matrix(4, 2, rng);
    std::vector<std::size_t> labels;
    for (std::size_t i = 0; i < 4; ++i) labels.push_back(rng.below(3));

    ValueGraph g;
    const auto bound = bind(g, params);
    const auto probs = softmax_rows(g, mlp_forward(g, bound, constants(g, x)));
    std::vector<NodeId> terms;
    for (std::size_t i = 0; i < 4; ++i) terms.push_back(cross_entropy(g, probs.row(i), labels[i]));
    const NodeId loss = g.sum(terms);
    const auto analytic = gradients(bound, g.backward(loss)).flatten();

    const auto numeric = central_differences(
        [&](std::span<const double> flat) { return composite_plain(params, flat, x, labels); },
        params.flatten());
    CHECK(max_relative_error(analytic, numeric) < 1e-6);
  }
}

TEST_CASE("cosine and MMD gradients match finite differences") {
  Rng rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const Tensor a = random_matrix(1, 5, rng);
    const Tensor b = random_matrix(1, 5, rng);
    ValueGraph g;
    const auto an = variables(g, a);
    const auto bn = constants(g, b);
    const NodeId cs = cosine_similarity(g, an.row(0), bn.row(0));
    const auto analytic = gradient_of(g.backward(cs), an);
    const auto numeric = central_differences(
        [&](std::span<const double> v) { return cosine_similarity(v, b.row(0)); },
        std::vector<double>(a.values().begin(), a.values().end()));
    CHECK(max_relative_error(analytic.values(), numeric) < 1e-6);

    const Tensor x = random_matrix(4, 2, rng);
    const Tensor y = random_matrix(5, 2, rng);
    ValueGraph g2;
    const auto xn = variables(g2, x);
    const auto mmd_grad = gradient_of(g2.backward(mmd_rbf(g2, xn, y, 1.1)), xn);
    const auto mmd_num = central_differences(
        [&](std::span<const double> v) {
          return mmd_rbf(Tensor({4, 2}, std::vector<double>(v.begin(), v.end())), y, 1.1);
        },
        std::vector<double>(x.values().begin(), x.values().end()));
    CHECK(max_relative_error(mmd_grad.values(), mmd_num) < 1e-6);
  }
}

TEST_CASE("adam examples") {
  const std::vector<std::size_t> widths{1, 1};
  MlpParams p = MlpParams::zeros(widths);
  p.layers[0].weight[0] = 1.0;
  auto state = AdamState::for_params(p);

  MlpParams zero_grad = MlpParams::zeros_like(p);
  const MlpParams before = p;
  adam_step(p, zero_grad, state, 0.1);
  CHECK(p == before);

  MlpParams q = before;
  auto fresh = AdamState::for_params(q);
  MlpParams g = MlpParams::zeros_like(q);
  g.layers[0].weight[0] = 0.5;
  adam_step(q, g, fresh, 0.1);
  // t = 1: m_hat = g, v_hat = g^2, step = lr * g / (|g| + eps)
  const double expect = 1.0 - 0.1 * 0.5 / (0.5 + 1e-8);
  CHECK(q.layers[0].weight[0] == doctest::Approx(expect).epsilon(1e-15));
  CHECK(q.layers[0].weight[0] == doctest::Approx(0.9).epsilon(1e-7));

  CHECK_THROWS_AS(adam_step(q, g, fresh, 0.0), ArgumentError);
  const auto other = MlpParams::zeros(std::vector<std::size_t>{2, 1});
  CHECK_THROWS_AS(adam_step(q, other, fresh, 0.1), ShapeError);
}

TEST_CASE("adam runs are deterministic") {
  auto run = [] {
    Rng rng(77);
    auto p = MlpParams::init(std::vector<std::size_t>{2, 3, 1}, rng);
    auto st = AdamState::for_params(p);
    for (int s = 0; s < 10; ++s) {
      auto grad = MlpParams::zeros_like(p);
      auto flat = grad.flatten();
      for (auto& v : flat) v = rng.normal();
      grad.assign_flat(flat);
      adam_step(p, grad, st, 1e-2);
    }
    return p.flatten();
  };
  CHECK(run() == run());
}

TEST_CASE("prob batch validates rows") {
  CHECK_NOTHROW(ProbBatch::from_rows({{0.2, 0.8}, {1.0, 0.0}}));
  try {
    ProbBatch::from_rows({{0.2, 0.8}, {0.6, 0.6}, {-0.1, 1.1}});
    FAIL("expected an error");
  } catch (const ArgumentError& e) {
    const std::string msg = e.what();
    CHECK(msg.find('1') != std::string::npos);
    CHECK(msg.find('2') != std::string::npos);
  }
  const std::vector<double> tie{0.5, 0.5};
  CHECK(argmax(tie) == 0);
}

TEST_CASE("frozen network detects tampering") {
  Rng rng(1);
  const FrozenNetwork net(MlpParams::init(std::vector<std::size_t>{2, 3, 2}, rng));
  CHECK(net.intact());
  CHECK(net.digest() == parameter_digest(net.params()));
}
