#include <doctest.h>

#include <cmath>

#include "convexlab/core.hpp"
#include "support/quadrature.hpp"

using namespace convexlab;

TEST_CASE("gaussian sampling moments and determinism") {
  RngStream rng(42, 0);
  const long long count = 1000000;
  double sum = 0.0, sum_sq = 0.0;
  for (long long i = 0; i < count; ++i) {
    const double z = rng.next_normal();
    sum += z;
    sum_sq += z * z;
  }
  const double mean = sum / count;
  const double var = sum_sq / count - mean * mean;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);

  RngStream a(7, 3), b(7, 3);
  const Point pa = sample_gaussian(3, a);
  const Point pb = sample_gaussian(3, b);
  CHECK(pa == pb);
  CHECK(pa.size() == 3);

  RngStream c(7, 4);
  CHECK(sample_gaussian(3, c) != pa);
}

TEST_CASE("draw_labeled matches the evaluator exactly and is reproducible") {
  const FunctionOracle f = catalog_function("linear", 2, {1.0, 0.0});
  RngStream rng(11, 0);
  const auto samples = draw_labeled(f, 2, rng);
  for (const auto& s : samples) CHECK(s.value == s.point[0]);
  CHECK(*f.draws == 2);

  RngStream rng2(11, 0);
  const auto samples2 = draw_labeled(f, 2, rng2);
  CHECK(samples[0].point == samples2[0].point);
  CHECK(samples[1].value == samples2[1].value);

  RngStream rng3(11, 0);
  CHECK_THROWS_AS(draw_labeled(f, 0, rng3), std::invalid_argument);
}

TEST_CASE("catalog values") {
  const FunctionOracle lin = catalog_function("linear", 2, {1.0, 0.0});
  Point x(2);
  x << 2.0, 0.0;
  CHECK(lin(x) == doctest::Approx(2.0));

  const FunctionOracle abs2 = catalog_function("abs_proj", 2, {1.0, 0.0});
  Point y(2);
  y << -3.0, 1.0;
  CHECK(abs2(y) == doctest::Approx(3.0));

  const FunctionOracle nh2 = catalog_function("neg_h2", 1, {});
  Point one(1);
  one << 1.0;
  CHECK(nh2(one) == doctest::Approx(0.0));

  CHECK_THROWS_AS(catalog_function("mystery", 1, {}), std::invalid_argument);
  CHECK_THROWS_AS(catalog_function("linear", 2, {2.0, 0.0}), std::invalid_argument);

  // Optional scale prefix keeps the declared bound sound.
  const FunctionOracle neg_abs = catalog_function("abs_proj", 1, {-1.0, 1.0});
  Point z(1);
  z << -2.0;
  CHECK(neg_abs(z) == doctest::Approx(-2.0));
  CHECK(neg_abs.lipschitz_bound == doctest::Approx(1.0));
  CHECK_THROWS_AS(catalog_function("abs_proj", 1, {1.5, 1.0}), std::invalid_argument);
}

TEST_CASE("function spec parsing") {
  const FunctionOracle f = parse_function_spec("abs_proj:1,0,0", 3);
  Point x(3);
  x << -3.0, 1.0, 0.5;
  CHECK(f(x) == doctest::Approx(3.0));

  const FunctionOracle noised = parse_function_spec("noised(linear,0.693147180559945):1,0", 2);
  Point y(2);
  y << 4.0, 0.0;
  // P_t on a linear function shrinks it by e^{-t}; the common-random-numbers
  // pool adds a small constant offset of MC size.
  CHECK(noised(y) == doctest::Approx(2.0).epsilon(0.05));
  CHECK(noised.lipschitz_bound == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("catalog Lipschitz soundness on sampled pairs") {
  RngStream rng(2024, 0);
  for (const char* name : {"linear", "relu_proj", "abs_proj", "sine_proj", "quadratic", "neg_h2"}) {
    const int n = 2;
    std::vector<double> params;
    if (std::string(name) == "quadratic") {
      params = {2.0};
    } else if (std::string(name) == "neg_h2") {
      params = {};
    } else {
      params = {1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)};
    }
    const FunctionOracle f = catalog_function(name, n, params);
    const double ball = 3.0 * std::sqrt(static_cast<double>(n));
    double worst = 0.0;
    for (int trial = 0; trial < 10000; ++trial) {
      Point a = sample_gaussian(n, rng);
      Point b = sample_gaussian(n, rng);
      if (a.norm() > ball) a *= ball / a.norm();
      if (b.norm() > ball) b *= ball / b.norm();
      const double gap = (a - b).norm();
      if (gap < 1e-9) continue;
      worst = std::max(worst, std::abs(f(a) - f(b)) / gap);
    }
    CAPTURE(name);
    CHECK(worst <= f.lipschitz_bound * (1.0 + 1e-9));
  }
}

TEST_CASE("mc_l2_distance basics") {
  const FunctionOracle f = catalog_function("linear", 1, {1.0});
  const FunctionOracle zero = catalog_function("linear", 1, {0.0, 1.0});

  RngStream rng(5, 0);
  const McDistance same = mc_l2_distance(f, f, 1000, rng);
  CHECK(same.estimate == 0.0);

  RngStream rng2(5, 1);
  const McDistance d = mc_l2_distance(f, zero, 1000000, rng2);
  CHECK(d.estimate == doctest::Approx(1.0).epsilon(0.01));

  // ||ReLU||_{L2(gamma)} = 1/sqrt(2), cross-checked by quadrature.
  const FunctionOracle relu = catalog_function("relu_proj", 1, {1.0});
  testing::GaussHermite quad(64);
  const double relu_norm =
      std::sqrt(quad.integrate([](double z) { return std::max(0.0, z) * std::max(0.0, z); }));
  CHECK(relu_norm == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  RngStream rng3(5, 2);
  const McDistance dr = mc_l2_distance(relu, zero, 1000000, rng3);
  CHECK(dr.estimate == doctest::Approx(relu_norm).epsilon(0.02));

  RngStream rng4(5, 3);
  CHECK_THROWS_AS(mc_l2_distance(f, zero, 50, rng4), std::invalid_argument);
}

TEST_CASE("mc_l2_distance symmetry and triangle inequality within half-widths") {
  const FunctionOracle f = catalog_function("abs_proj", 1, {1.0});
  const FunctionOracle g = catalog_function("relu_proj", 1, {1.0});
  const FunctionOracle h = catalog_function("linear", 1, {1.0});

  RngStream r1(9, 0), r2(9, 0);
  const McDistance fg = mc_l2_distance(f, g, 200000, r1);
  const McDistance gf = mc_l2_distance(g, f, 200000, r2);
  CHECK(fg.estimate == doctest::Approx(gf.estimate));  // same stream, symmetric integrand

  RngStream r3(9, 1), r4(9, 2), r5(9, 3);
  const McDistance fh = mc_l2_distance(f, h, 200000, r3);
  const McDistance fg2 = mc_l2_distance(f, g, 200000, r4);
  const McDistance gh = mc_l2_distance(g, h, 200000, r5);
  CHECK(fh.estimate <= fg2.estimate + gh.estimate + 3.0 * (fh.half_width + fg2.half_width + gh.half_width));
}
