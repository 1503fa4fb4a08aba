#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cemb/errors.hpp"
#include "cemb/graph.hpp"
#include "cemb/ops.hpp"
#include "test_util.hpp"

using namespace cemb;
using testutil::check_gradients;
using testutil::random_tensor;
using testutil::random_tensor_away_from_zero;
using testutil::weighted_sum;

TEST_CASE("matmul examples") {
  Graph g;
  Rng rng(7);
  Tensor id2({2, 2}, {1, 0, 0, 1});
  Tensor m({2, 2}, {3, -1, 2.5, 4});
  Var prod = matmul(g.constant(id2), g.constant(m));
  CHECK(testutil::bitwise_equal(prod.value(), m));

  Var p2 = matmul(g.constant(Tensor({2, 2}, {1, 2, 3, 4})), g.constant(Tensor({2, 1}, {1, 1})));
  CHECK(p2.value().at(0, 0) == doctest::Approx(3).epsilon(1e-15));
  CHECK(p2.value().at(1, 0) == doctest::Approx(7).epsilon(1e-15));

  Var z = matmul(g.constant(Tensor::zeros({2, 3})), g.constant(random_tensor({3, 4}, rng)));
  CHECK(z.value().flat().abs().maxCoeff() == 0.0);

  CHECK_THROWS_WITH_AS(
      matmul(g.constant(Tensor::zeros({2, 3})), g.constant(Tensor::zeros({4, 5}))),
      doctest::Contains("[2x3]"), ShapeError);
}

TEST_CASE("softmax examples and properties") {
  Graph g;
  Var s1 = softmax(g.constant(Tensor({2}, {0, 0})), 1.0);
  CHECK(s1.value()(0) == 0.5);
  CHECK(s1.value()(1) == 0.5);

  Var s2 = softmax(g.constant(Tensor({2}, {1, 0})), 1.0);
  double e = std::exp(1.0);
  CHECK(s2.value()(0) == doctest::Approx(e / (1 + e)).epsilon(1e-12));
  CHECK(s2.value()(1) == doctest::Approx(1 / (1 + e)).epsilon(1e-12));

  // shifted inputs follow the identical max-subtracted path
  Var s3 = softmax(g.constant(Tensor({2}, {1000, 999})), 1.0);
  CHECK(testutil::bitwise_equal(s3.value(), s2.value()));

  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 2 + static_cast<int>(rng.below(7));
    Tensor x = random_tensor({n}, rng, -5, 5);
    double tau = rng.uniform(0.1, 2.0);
    Tensor y = softmax(g.constant(x), tau).value();
    CHECK(std::abs(y.flat().sum() - 1.0) <= 1e-12);
    double c = rng.uniform(-3, 3);
    Tensor xs = x;
    xs.flat() += c;
    Tensor ys = softmax(g.constant(xs), tau).value();
    for (int i = 0; i < n; ++i) CHECK(std::abs(y(i) - ys(i)) <= 1e-12);
  }

  CHECK_THROWS_AS(softmax(g.constant(Tensor({2}, {1, 2})), 0.0), ParameterError);
  CHECK_THROWS_AS(softmax(g.constant(Tensor({2}, {1, 2})), -1.0), ParameterError);
}

TEST_CASE("elementwise examples") {
  Graph g;
  Var a = abs(g.constant(Tensor({2}, {-1, 2})));
  CHECK(a.value()(0) == 1.0);
  CHECK(a.value()(1) == 2.0);

  Var n = l2_normalize(g.constant(Tensor({2}, {3, 4})));
  CHECK(n.value()(0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(n.value()(1) == doctest::Approx(0.8).epsilon(1e-15));

  Var m = mean(g.constant(Tensor::ones({4, 8})), 0);
  REQUIRE(m.value().shape() == std::vector<int>{8});
  for (int i = 0; i < 8; ++i) CHECK(m.value()(i) == 1.0);

  CHECK_THROWS_AS(log(g.constant(Tensor({2}, {1.0, 0.0}))), DomainError);
  CHECK_THROWS_AS(log(g.constant(Tensor({1}, {-2.0}))), DomainError);
  CHECK_THROWS_AS(l2_normalize(g.constant(Tensor::zeros({3}))), DomainError);
}

TEST_CASE("backward basics") {
  {
    Graph g;
    Var p = g.leaf(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}), true);
    Var loss = sum(p);
    auto grads = g.backward(loss);
    REQUIRE(grads.size() == 1);
    CHECK(testutil::bitwise_equal(grads.begin()->second, Tensor::ones({2, 3})));
  }
  {
    Graph g;
    Var p = g.leaf(Tensor({2}, {1, 2}), true);
    Var loss = dot(p, p);
    g.backward(loss);
    CHECK(p.grad()(0) == 2.0);
    CHECK(p.grad()(1) == 4.0);
  }
  {
    Graph g;
    Var p = g.leaf(Tensor({3}, {1, 2, 3}), true);
    CHECK_THROWS_AS(g.backward(scale(p, 2.0)), UsageError);  // non-scalar loss
  }
}

TEST_CASE("backward handles shared nodes and repeated calls identically") {
  Graph g;
  Var p = g.leaf(Tensor({3}, {0.5, -0.25, 1.5}), true);
  Var q = add(p, p);  // diamond
  Var r = mul(q, q);  // reuses q twice
  Var loss = sum(r);
  g.backward(loss);
  Tensor first = p.grad();
  g.backward(loss);
  CHECK(testutil::bitwise_equal(first, p.grad()));
  // d/dp sum((2p)^2) = 8p
  for (int i = 0; i < 3; ++i)
    CHECK(first(i) == doctest::Approx(8.0 * p.value()(i)).epsilon(1e-14));
}

TEST_CASE("leaves untouched by the loss get zero gradients") {
  Graph g;
  Var used = g.leaf(Tensor({2}, {1, 2}), true);
  Var unused = g.leaf(Tensor({4}, {1, 2, 3, 4}), true);
  auto grads = g.backward(sum(used));
  REQUIRE(grads.size() == 2);
  CHECK(grads.at(unused.id()).flat().abs().maxCoeff() == 0.0);
}

TEST_CASE("non-finite results are checked at op boundaries") {
  Graph g;
  CHECK_THROWS_AS(exp(g.constant(Tensor({1}, {1e6}))), NumericalError);
  Var big = g.constant(Tensor({1}, {1e308}));
  CHECK_THROWS_AS(add(big, big), NumericalError);
}

TEST_CASE("finite differences validate every op") {
  Rng rng(2024);
  auto run = [&](const char* name, std::vector<Tensor> inputs,
                 std::function<Var(Graph&, const std::vector<Var>&)> build) {
    auto report = check_gradients(inputs, build);
    INFO(name << ": max_rel=" << report.max_rel << " max_abs=" << report.max_abs << " "
              << report.worst);
    CHECK(report.failures == 0);
  };

  for (int trial = 0; trial < 3; ++trial) {
    // fixed weights, hoisted so the losses are pure functions of the leaves
    Tensor w23 = random_tensor({2, 3}, rng);
    Tensor w22 = random_tensor({2, 2}, rng);
    Tensor w32 = random_tensor({3, 2}, rng);
    Tensor w24 = random_tensor({2, 4}, rng);
    Tensor w34 = random_tensor({3, 4}, rng);
    Tensor w43 = random_tensor({4, 3}, rng);
    Tensor w3 = random_tensor({3}, rng);
    Tensor w2 = random_tensor({2}, rng);
    Tensor w4 = random_tensor({4}, rng);
    Tensor w5 = random_tensor({5}, rng);

    run("matmul 2d", {random_tensor({2, 3}, rng), random_tensor({3, 2}, rng)},
        [&](Graph&, const std::vector<Var>& v) { return weighted_sum(matmul(v[0], v[1]), w22); });
    run("matmul mat-vec", {random_tensor({2, 3}, rng), random_tensor({3}, rng)},
        [&](Graph&, const std::vector<Var>& v) { return weighted_sum(matmul(v[0], v[1]), w2); });
    run("matmul vec-mat", {random_tensor({3}, rng), random_tensor({3, 2}, rng)},
        [&](Graph&, const std::vector<Var>& v) { return weighted_sum(matmul(v[0], v[1]), w2); });
    run("transpose", {random_tensor({2, 3}, rng)},
        [&](Graph&, const std::vector<Var>& v) { return weighted_sum(transpose(v[0]), w32); });
    run("add same", {random_tensor({2, 3}, rng), random_tensor({2, 3}, rng)},
        [&](Graph&, const std::vector<Var>& v) { return weighted_sum(add(v[0], v[1]), w23); });
    run("add row broadcast", {random_tensor({2, 3}, rng), random_tensor({3}, rng)},
        [&](Graph&, const std::vector<Var>& v) { return weighted_sum(add(v[0], v[1]), w23); });
    run("add scalar broadcast", {random_tensor({2, 3}, rng), random_tensor({1}, rng)},
        [&](Graph&, const std::vector<Var>& v) { return weighted_sum(add(v[0], v[1]), w23); });
    run("sub broadcast", {random_tensor({3}, rng), random_tensor({2, 3}, rng)},
        [&](Graph&, const std::vector<Var>& v) { return weighted_sum(sub(v[0], v[1]), w23); });
    run("mul same", {random_tensor({2, 3}, rng), random_tensor({2, 3}, rng)},
        [&](Graph&, const std::vector<Var>& v) { return weighted_sum(mul(v[0], v[1]), w23); });
    run("mul broadcast", {random_tensor({2, 3}, rng), random_tensor({3}, rng)},
        [&](Graph&, const std::vector<Var>& v) { return weighted_sum(mul(v[0], v[1]), w23); });
    run("scale", {random_tensor({2, 3}, rng)},
        [&](Graph&, const std::vector<Var>& v) { return weighted_sum(scale(v[0], -1.7), w23); });
    run("abs", {random_tensor_away_from_zero({2, 3}, rng)},
        [&](Graph&, const std::vector<Var>& v) { return weighted_sum(abs(v[0]), w23); });
    run("exp", {random_tensor({2, 3}, rng)},
        [&](Graph&, const std::vector<Var>& v) { return weighted_sum(exp(v[0]), w23); });
    run("log", {random_tensor({2, 3}, rng, 0.5, 2.0)},
        [&](Graph&, const std::vector<Var>& v) { return weighted_sum(log(v[0]), w23); });
    run("tanh", {random_tensor({2, 3}, rng)},
        [&](Graph&, const std::vector<Var>& v) { return weighted_sum(tanh(v[0]), w23); });
    run("gelu", {random_tensor({2, 3}, rng, -2, 2)},
        [&](Graph&, const std::vector<Var>& v) { return weighted_sum(gelu(v[0]), w23); });
    run("clamp_min", {random_tensor_away_from_zero({2, 3}, rng)},
        [&](Graph&, const std::vector<Var>& v) {
          return weighted_sum(clamp_min(v[0], 0.0), w23);
        });
    run("concat 1d", {random_tensor({2}, rng), random_tensor({3}, rng)},
        [&](Graph&, const std::vector<Var>& v) { return weighted_sum(concat({v[0], v[1]}), w5); });
    run("concat 2d", {random_tensor({2, 2}, rng), random_tensor({2, 1}, rng)},
        [&](Graph&, const std::vector<Var>& v) { return weighted_sum(concat({v[0], v[1]}), w23); });
    run("stack_rows", {random_tensor({3}, rng), random_tensor({3}, rng)},
        [&](Graph&, const std::vector<Var>& v) {
          return weighted_sum(stack_rows({v[0], v[1]}), w23);
        });
    run("gather_rows repeated", {random_tensor({4, 3}, rng)},
        [&](Graph&, const std::vector<Var>& v) {
          return weighted_sum(gather_rows(v[0], {0, 2, 2, 1}), w43);
        });
    run("mean axis0", {random_tensor({4, 3}, rng)},
        [&](Graph&, const std::vector<Var>& v) { return weighted_sum(mean(v[0], 0), w3); });
    run("mean axis1", {random_tensor({2, 3}, rng)},
        [&](Graph&, const std::vector<Var>& v) { return weighted_sum(mean(v[0], 1), w2); });
    run("mean rank1", {random_tensor({5}, rng)},
        [&](Graph&, const std::vector<Var>& v) { return mean(v[0], 0); });
    run("sum", {random_tensor({2, 3}, rng)},
        [&](Graph&, const std::vector<Var>& v) { return sum(v[0]); });
    run("dot", {random_tensor({4}, rng), random_tensor({4}, rng)},
        [&](Graph&, const std::vector<Var>& v) { return dot(v[0], v[1]); });
    run("l2_normalize rank1", {random_tensor_away_from_zero({4}, rng, 0.3)},
        [&](Graph&, const std::vector<Var>& v) { return weighted_sum(l2_normalize(v[0]), w4); });
    run("l2_normalize rank2", {random_tensor_away_from_zero({2, 3}, rng, 0.3)},
        [&](Graph&, const std::vector<Var>& v) { return weighted_sum(l2_normalize(v[0]), w23); });
    run("softmax rank2", {random_tensor({2, 3}, rng)},
        [&](Graph&, const std::vector<Var>& v) { return weighted_sum(softmax(v[0], 0.7), w23); });
    run("logsumexp", {random_tensor({5}, rng)},
        [&](Graph&, const std::vector<Var>& v) { return logsumexp(v[0]); });
    run("layer_norm",
        {random_tensor({2, 4}, rng), random_tensor({4}, rng, 0.5, 1.5), random_tensor({4}, rng)},
        [&](Graph&, const std::vector<Var>& v) {
          return weighted_sum(layer_norm(v[0], v[1], v[2]), w24);
        });
    uint64_t drop_seed = rng.next_u64();
    run("dropout", {random_tensor({3, 4}, rng)},
        [&, drop_seed](Graph&, const std::vector<Var>& v) {
          Rng drop_rng(drop_seed);
          return weighted_sum(dropout(v[0], 0.4, drop_rng, true), w34);
        });
  }
}

TEST_CASE("dropout identities") {
  Graph g;
  Rng rng(5);
  Tensor x = random_tensor({3, 3}, rng);
  Var v = g.constant(x);
  Rng drop_rng(1);
  CHECK(dropout(v, 0.0, drop_rng, true).id() == v.id());   // rate 0 is the identity
  CHECK(dropout(v, 0.5, drop_rng, false).id() == v.id());  // eval mode too
  CHECK_THROWS_AS(dropout(v, 1.0, drop_rng, true), ParameterError);
  CHECK_THROWS_AS(dropout(v, -0.1, drop_rng, true), ParameterError);
}

TEST_CASE("tensor invariants") {
  CHECK_THROWS_AS(Tensor({2, 3}, std::vector<double>(5, 0.0)), ShapeError);
  CHECK_THROWS_AS(Tensor({0, 3}), ShapeError);
  Tensor t({2, 2}, {1, 2, 3, 4});
  CHECK(t.numel() == 4);
  CHECK(t.at(1, 0) == 3.0);
}
