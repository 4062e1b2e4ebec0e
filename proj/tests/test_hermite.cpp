#include <doctest.h>

#include <cmath>

#include "convexlab/core.hpp"
#include "convexlab/hermite.hpp"
#include "support/quadrature.hpp"

using namespace convexlab;

namespace {
constexpr double kRoot2 = 1.4142135623730951;
}

TEST_CASE("hermite_1d closed forms and special values") {
  // h_0..h_4 explicit closed forms at scattered points.
  for (double z : {-2.5, -1.0, 0.0, 0.3, 1.0, 2.0}) {
    CHECK(hermite_1d(0, z) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(hermite_1d(1, z) == doctest::Approx(z).epsilon(1e-12));
    CHECK(hermite_1d(2, z) == doctest::Approx((z * z - 1.0) / kRoot2).epsilon(1e-10));
    CHECK(hermite_1d(3, z) ==
          doctest::Approx((z * z * z - 3.0 * z) / std::sqrt(6.0)).epsilon(1e-10));
    CHECK(hermite_1d(4, z) ==
          doctest::Approx((z * z * z * z - 6.0 * z * z + 3.0) / std::sqrt(24.0)).epsilon(1e-10));
  }
  CHECK(hermite_1d(2, 1.0) == doctest::Approx(0.0));
  CHECK(hermite_1d(3, 0.0) == doctest::Approx(0.0));
  CHECK(hermite_1d(4, 0.0) == doctest::Approx(std::sqrt(3.0 / 8.0)).epsilon(1e-12));
}

TEST_CASE("values at zero follow the double-factorial law") {
  for (int j = 0; j <= 4; ++j) {
    double ratio = 1.0;
    for (int k = 1; k <= j; ++k) ratio *= (2.0 * k - 1.0) / (2.0 * k);
    const double expected = ((j % 2 == 0) ? 1.0 : -1.0) * std::sqrt(ratio);
    CHECK(hermite_1d(2 * j, 0.0) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(hermite_1d(2 * j + 1, 0.0) == doctest::Approx(0.0));
  }
}

TEST_CASE("orthonormality under 64-node quadrature") {
  testing::GaussHermite quad(64);
  for (int j = 0; j <= 8; ++j) {
    for (int k = 0; k <= 8; ++k) {
      const double inner =
          quad.integrate([&](double z) { return hermite_1d(j, z) * hermite_1d(k, z); });
      CHECK(std::abs(inner - (j == k ? 1.0 : 0.0)) < 1e-8);
    }
  }
}

TEST_CASE("derivative identity h_j' = sqrt(j) h_{j-1}") {
  const double fd_step = 1e-6;
  for (int j = 1; j <= 8; ++j) {
    for (int i = 0; i < 20; ++i) {
      const double z = -3.0 + 6.0 * i / 19.0;
      const double fd =
          (hermite_1d(j, z + fd_step) - hermite_1d(j, z - fd_step)) / (2.0 * fd_step);
      const double expected = std::sqrt(static_cast<double>(j)) * hermite_1d(j - 1, z);
      const double denom = std::max(1.0, std::abs(expected));
      CHECK(std::abs(fd - expected) / denom < 1e-5);
    }
  }
}

TEST_CASE("hermite_multi product structure") {
  MultiIndex zero = MultiIndex::zero(2);
  Point x(2);
  x << 1.7, -0.4;
  CHECK(hermite_multi(zero, x) == doctest::Approx(1.0));

  MultiIndex ones(Eigen::Vector2i(1, 1));
  Point y(2);
  y << 2.0, 3.0;
  CHECK(hermite_multi(ones, y) == doctest::Approx(6.0));

  MultiIndex h2first(Eigen::Vector2i(2, 0));
  Point z(2);
  z << 1.0, 5.0;
  CHECK(hermite_multi(h2first, z) == doctest::Approx(0.0));

  MultiIndex wrong_dim(Eigen::Vector3i(1, 0, 0));
  CHECK_THROWS_AS(hermite_multi(wrong_dim, z), std::invalid_argument);
}

TEST_CASE("enumerate_indices counts and order") {
  CHECK(enumerate_indices(2, 2).size() == 6);
  CHECK(enumerate_indices(1, 0).size() == 1);
  CHECK(enumerate_indices(3, 1).size() == 4);

  const auto list = enumerate_indices(2, 2);
  GradedLexLess less;
  for (std::size_t i = 0; i + 1 < list.size(); ++i) CHECK(less(list[i], list[i + 1]));
  CHECK(list.front().total_degree() == 0);
  CHECK(list.back().total_degree() == 2);
}

TEST_CASE("expansion evaluation and gradient identity") {
  HermiteExpansion e;
  e.dimension = 1;
  e.set(MultiIndex::unit(1, 0, 1), 1.0);
  Point two(1);
  two << 2.0;
  CHECK(eval_expansion(e, two) == doctest::Approx(2.0));
  CHECK(expansion_gradient_sq_norm(e) == doctest::Approx(1.0));

  HermiteExpansion empty;
  empty.dimension = 1;
  CHECK(eval_expansion(empty, two) == doctest::Approx(0.0));

  HermiteExpansion h2_plus_1;
  h2_plus_1.dimension = 1;
  h2_plus_1.set(MultiIndex::unit(1, 0, 2), 1.0);
  h2_plus_1.set(MultiIndex::zero(1), 1.0);
  Point one(1);
  one << 1.0;
  CHECK(eval_expansion(h2_plus_1, one) == doctest::Approx(1.0));

  HermiteExpansion constant;
  constant.dimension = 1;
  constant.set(MultiIndex::zero(1), 7.0);
  CHECK(expansion_gradient_sq_norm(constant) == doctest::Approx(0.0));

  // E[h_2'(z)^2] = 2 via the derivative identity, matching quadrature.
  testing::GaussHermite quad(64);
  const double grad_sq = quad.integrate([](double z) {
    const double d = kRoot2 * hermite_1d(1, z);
    return d * d;
  });
  HermiteExpansion h2;
  h2.dimension = 1;
  h2.set(MultiIndex::unit(1, 0, 2), 1.0);
  CHECK(expansion_gradient_sq_norm(h2) == doctest::Approx(grad_sq).epsilon(1e-10));
}

TEST_CASE("spectral noise operator") {
  HermiteExpansion e;
  e.dimension = 1;
  e.set(MultiIndex::unit(1, 0, 1), 1.0);

  const HermiteExpansion id = apply_noise_spectral(e, NoiseParameter(0.0));
  CHECK(id.coefficient(MultiIndex::unit(1, 0, 1)) == doctest::Approx(1.0));

  const HermiteExpansion halved = apply_noise_spectral(e, NoiseParameter(std::log(2.0)));
  CHECK(halved.coefficient(MultiIndex::unit(1, 0, 1)) == doctest::Approx(0.5));

  HermiteExpansion q;
  q.dimension = 1;
  q.set(MultiIndex::unit(1, 0, 2), 1.0);
  const HermiteExpansion decayed = apply_noise_spectral(q, NoiseParameter(1.0));
  CHECK(decayed.coefficient(MultiIndex::unit(1, 0, 2)) == doctest::Approx(std::exp(-2.0)));
}

TEST_CASE("monte-carlo noise operator") {
  const FunctionOracle lin = catalog_function("linear", 2, {1.0, 0.0});
  Point x(2);
  x << 4.0, 0.0;
  RngStream rng(3, 0);
  const double val = apply_noise_mc(lin, NoiseParameter(std::log(2.0)), x, 1000000, rng);
  CHECK(val == doctest::Approx(2.0).epsilon(0.005));

  FunctionOracle constant;
  constant.dimension = 1;
  constant.lipschitz_bound = 0.0;
  constant.evaluator = [](const Point&) { return 3.5; };
  Point z(1);
  z << 0.7;
  RngStream rng2(3, 1);
  CHECK(apply_noise_mc(constant, NoiseParameter(0.2), z, 100, rng2) == doctest::Approx(3.5));

  // P_t ReLU at 0 equals sigma/sqrt(2 pi) with sigma = sqrt(1 - e^{-2t});
  // frozen through the kink-aware quadrature oracle.
  testing::PanelGaussNormal quad;
  const double t = 0.5;
  const double sigma = std::sqrt(1.0 - std::exp(-2.0 * t));
  const double expected = quad.integrate([&](double g) { return std::max(0.0, sigma * g); });
  CHECK(expected == doctest::Approx(sigma / std::sqrt(2.0 * 3.14159265358979323846)).epsilon(1e-10));
  const FunctionOracle relu = catalog_function("relu_proj", 1, {1.0});
  Point origin = Point::Zero(1);
  RngStream rng3(3, 2);
  CHECK(apply_noise_mc(relu, NoiseParameter(t), origin, 1000000, rng3) ==
        doctest::Approx(expected).epsilon(0.01));
}

TEST_CASE("noise stability, self-adjointness, contraction") {
  // Linear f: ||f - P_t f||^2 = (1 - e^{-t})^2 <= t.
  for (double t : {0.1, 0.5, 1.0}) {
    HermiteExpansion e;
    e.dimension = 1;
    e.set(MultiIndex::unit(1, 0, 1), 1.0);
    const HermiteExpansion noised = apply_noise_spectral(e, NoiseParameter(t));
    double diff_sq = 0.0;
    for (const auto& [alpha, c] : e.coefficients) {
      const double d = c - noised.coefficient(alpha);
      diff_sq += d * d;
    }
    CHECK(diff_sq == doctest::Approx(std::pow(1.0 - std::exp(-t), 2)).epsilon(1e-12));
    CHECK(diff_sq <= t);
  }

  // <P_t e1, e2> = <e1, P_t e2> exactly on degree <= 4 expansions.
  RngStream rng(77, 0);
  for (int trial = 0; trial < 20; ++trial) {
    HermiteExpansion e1, e2;
    e1.dimension = e2.dimension = 2;
    for (const MultiIndex& alpha : enumerate_indices(2, 4)) {
      e1.set(alpha, rng.next_normal());
      e2.set(alpha, rng.next_normal());
    }
    const double t = 0.3;
    const double lhs = expansion_inner(apply_noise_spectral(e1, NoiseParameter(t)), e2);
    const double rhs = expansion_inner(e1, apply_noise_spectral(e2, NoiseParameter(t)));
    CHECK(std::abs(lhs - rhs) < 1e-12);

    // Contraction coefficient-wise.
    CHECK(apply_noise_spectral(e1, NoiseParameter(t)).norm_sq() <= e1.norm_sq());
  }
}

TEST_CASE("expansion JSON round trip keeps 17 significant digits and order") {
  HermiteExpansion e;
  e.dimension = 2;
  e.set(MultiIndex::zero(2), 0.1234567890123456789);
  e.set(MultiIndex::unit(2, 1, 1), -3.0);
  e.set(MultiIndex(Eigen::Vector2i(1, 1)), 1e-17);
  const std::string json = expansion_to_json(e);
  CHECK(json.find("\"n\": 2") != std::string::npos);
  // graded-lex: (0,0) before (0,1) before (1,1)
  CHECK(json.find("[0, 0]") < json.find("[0, 1]"));
  CHECK(json.find("[0, 1]") < json.find("[1, 1]"));
  const HermiteExpansion back = expansion_from_json(json);
  CHECK(back.dimension == 2);
  for (const auto& [alpha, c] : e.coefficients) {
    CHECK(back.coefficient(alpha) == doctest::Approx(c).epsilon(1e-15));
  }
}
