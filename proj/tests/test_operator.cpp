#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "support.hpp"
#include "tmd/errors.hpp"
#include "tmd/kernel.hpp"
#include "tmd/operator.hpp"

using namespace tmd;
using tmd::testing::generator_oracle;
using tmd::testing::random_tensor;

namespace {

TmdOperatorParts build_from_points(const Tensor& x, const Tensor& pi_sqrt, double eps) {
  const Tensor k = gaussian_kernel(x, eps);
  return build_tmd_operator(k, kde(k), pi_sqrt, eps);
}

Tensor hand_two_point(double a, double eps) {
  const double off = a / (1.0 + a) / eps;
  return Tensor::matrix(2, 2, {-off, off, off, -off});
}

}  // namespace

TEST_CASE("target_density") {
  CounterRng rng(5, "density");
  const Tensor x = random_tensor(rng, {5, 3});
  const Tensor zero = target_density(x, DensityHead::linear(3));
  for (double v : zero.data()) CHECK(v == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(std::abs(zero[0] - 0.6931) < 1e-4);

  DensityHead constant = DensityHead::linear(3);
  constant.b1 = Tensor::matrix(1, 1, {1.5});
  const double c = std::log1p(std::exp(1.5));
  const Tensor constant_out = target_density(x, constant);
  for (double v : constant_out.data()) CHECK(v == doctest::Approx(c).epsilon(1e-15));

  // Scalar re-evaluation of a random MLP head.
  DensityHead mlp = DensityHead::mlp(3, 4, rng);
  mlp.b1 = random_tensor(rng, {1, 4});
  mlp.w2 = random_tensor(rng, {4, 1});
  mlp.b2 = random_tensor(rng, {1, 1});
  const Tensor got = target_density(x, mlp);
  for (std::size_t i = 0; i < 5; ++i) {
    double z = mlp.b2->item();
    for (std::size_t h = 0; h < 4; ++h) {
      double a = mlp.b1.at(0, h);
      for (std::size_t k = 0; k < 3; ++k) a += x.at(i, k) * mlp.w1.at(k, h);
      z += std::max(a, 0.0) * mlp.w2->at(h, 0);
    }
    const double expected = std::max(std::log1p(std::exp(z)), kDensityFloor);
    CHECK(got[i] == doctest::Approx(expected).epsilon(1e-13));
    CHECK(got[i] > 0.0);
  }

  // Strongly negative raw output is floored, never zero.
  DensityHead negative = DensityHead::linear(3);
  negative.b1 = Tensor::matrix(1, 1, {-200.0});
  const Tensor floored = target_density(x, negative);
  for (double v : floored.data()) CHECK(v == kDensityFloor);
}

TEST_CASE("hand-computed two-point operator") {
  for (double a : {std::exp(-1.0), 1.0}) {
    for (double eps : {1.0, 0.3}) {
      const Tensor k = Tensor::matrix(2, 2, {1, a, a, 1});
      const auto parts = build_tmd_operator(k, kde(k), Tensor::vector({1.0, 1.0}), eps);
      CHECK(max_abs_diff(parts.op.L, hand_two_point(a, eps)) <= 1e-12);
    }
  }
  const Tensor k = Tensor::matrix(2, 2, {1, std::exp(-1.0), std::exp(-1.0), 1});
  const auto parts = build_tmd_operator(k, kde(k), Tensor::vector({1.0, 1.0}), 1.0);
  CHECK(parts.op.L.at(0, 1) == doctest::Approx(0.26894).epsilon(1e-5));
  CHECK(parts.op.L.at(0, 1) == doctest::Approx(1.0 / (std::exp(1.0) + 1.0)).epsilon(1e-14));
  // Intermediates: D = 1/(1+a), K_pi = K D, D~ = 1.
  CHECK(parts.density_ratio[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
  CHECK(parts.row_norm[0] == doctest::Approx(1.0));
  CHECK(parts.weighted_kernel.at(0, 1) == doctest::Approx(std::exp(-1.0) / (1.0 + std::exp(-1.0))));
}

TEST_CASE("single point generator is zero") {
  const auto parts = build_from_points(Tensor::matrix(1, 2, {0.3, -4.0}), Tensor::vector({7.5}), 0.2);
  CHECK(parts.op.L == Tensor::matrix(1, 1, {0.0}));
}

TEST_CASE("matches the plain-loop oracle") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    CounterRng rng(seed, "oracle");
    const std::size_t m = 2 + rng.index(12);
    const Tensor x = random_tensor(rng, {m, 1 + rng.index(4)});
    std::vector<double> pi(m);
    for (double& p : pi) p = rng.uniform(0.1, 3.0);
    const double eps = rng.uniform(0.1, 1.5);
    const auto parts = build_from_points(x, Tensor::vector(pi), eps);
    CHECK(max_abs_diff(parts.op.L, generator_oracle(x, pi, eps)) < 1e-11);
  }
}

TEST_CASE("operator invariants over random batches") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    CounterRng rng(seed, "invariants");
    const std::size_t m = 1 + rng.index(64);
    const std::size_t n = 1 + rng.index(8);
    const Tensor x = random_tensor(rng, {m, n});
    std::vector<double> pi(m);
    for (double& p : pi) p = rng.uniform(0.05, 5.0);
    const double eps = median_bandwidth(x);
    const auto op = build_from_points(x, Tensor::vector(pi), eps).op;
    double worst_row = 0.0;
    bool signs_ok = true;
    for (std::size_t i = 0; i < m; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        row += op.L.at(i, j);
        if (i == j ? op.L.at(i, j) > 0.0 : op.L.at(i, j) < 0.0) signs_ok = false;
      }
      worst_row = std::max(worst_row, std::abs(row));
    }
    CHECK(worst_row <= 1e-10);
    CHECK(signs_ok);
    const Tensor ones = Tensor::filled({m, 1}, 1.0);
    const Tensor annihilated = apply_generator(op, ones);
    for (double v : annihilated.data()) CHECK(std::abs(v) <= 1e-10);
  }
}

TEST_CASE("global rescaling of pi leaves L unchanged") {
  CounterRng rng(9, "scale");
  const Tensor x = random_tensor(rng, {12, 3});
  std::vector<double> pi(12);
  for (double& p : pi) p = rng.uniform(0.2, 2.0);
  const auto base = build_from_points(x, Tensor::vector(pi), 0.6).op;
  for (double c : {0.5, 2.0, 1024.0}) {
    auto scaled = pi;
    for (double& p : scaled) p *= c;
    CHECK(bitwise_equal(build_from_points(x, Tensor::vector(scaled), 0.6).op.L, base.L));
  }
  auto scaled = pi;
  for (double& p : scaled) p *= 3.7;
  CHECK(max_abs_diff(build_from_points(x, Tensor::vector(scaled), 0.6).op.L, base.L) < 1e-12);
}

TEST_CASE("operator errors") {
  const Tensor k = Tensor::matrix(2, 2, {1, 0.5, 0.5, 1});
  CHECK_THROWS_AS(build_tmd_operator(k, kde(k), Tensor::vector({1.0, 0.0}), 1.0), DegenerateNormalization);
  CHECK_THROWS_AS(build_tmd_operator(k, kde(k), Tensor::vector({1.0, 1.0}), 0.0), InvalidBandwidth);
  CHECK_THROWS_AS(build_tmd_operator(k, kde(k), Tensor::vector({1.0}), 1.0), ShapeMismatch);
  // Subnormal pi halved by q = 2 rounds to zero, so every row normalizer does.
  const Tensor same = Tensor::matrix(2, 2, {1, 1, 1, 1});
  CHECK_THROWS_AS(build_tmd_operator(same, kde(same), Tensor::vector({5e-324, 5e-324}), 1.0),
                  DegenerateNormalization);
}

TEST_CASE("apply_generator") {
  const double a = std::exp(-1.0);
  const TmdOperator op{hand_two_point(a, 1.0), 1.0};
  const Tensor lf = apply_generator(op, Tensor::matrix(2, 1, {0.0, 1.0}));
  CHECK(lf[0] == doctest::Approx(0.26894).epsilon(1e-5));
  CHECK(lf[1] == doctest::Approx(-0.26894).epsilon(1e-5));
  CHECK(max_abs_diff(apply_generator(op, Tensor::matrix(2, 2, {3, -1, 3, -1})), Tensor::zeros({2, 2})) < 1e-15);
  CHECK(apply_generator(op, Tensor::identity(2)) == op.L);
  CHECK_THROWS_AS(apply_generator(op, Tensor::zeros({3, 1})), ShapeMismatch);
}

TEST_CASE("operator dump round-trips") {
  CounterRng rng(4, "dump");
  const Tensor x = random_tensor(rng, {6, 2});
  std::vector<double> pi(6, 1.0);
  const auto op = build_from_points(x, Tensor::vector(pi), 0.37).op;
  std::stringstream s;
  write_operator(s, op);
  const auto back = read_operator(s);
  CHECK(bitwise_equal(back.L, op.L));
  CHECK(back.epsilon == op.epsilon);

  std::stringstream small;
  write_operator(small, TmdOperator{hand_two_point(1.0, 1.0), 1.0});
  CHECK(small.str() == "m 2\nepsilon 1\n-0.5 0.5\n0.5 -0.5\n");

  std::stringstream bad("m 2\nepsilon 1\n1 2 3\n");
  CHECK_THROWS_AS(read_operator(bad), FormatError);
}
