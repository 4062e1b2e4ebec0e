#include "convexlab/spectrum.hpp"

#include <cmath>

namespace convexlab {

SpectrumReport degree2_check(const FunctionOracle& f, double xi, double delta, RngStream& rng) {
  if (xi <= 0.0 || delta <= 0.0 || delta >= 1.0) {
    throw std::invalid_argument("degree2_check: need xi > 0, delta in (0,1)");
  }
  const int n = f.dimension;

  // Center to O(1) mean first; constant shifts do not move fhat(2 e_i), they
  // only restore the estimator's variance assumption.
  RngStream mean_rng = rng.fork(1);
  MeanEstimate mean = estimate_mean_capped(f, 0.5, 1000000, mean_rng);
  FunctionOracle centered = f;
  const double shift = mean.value;
  auto base = f.evaluator;
  centered.evaluator = [base, shift](const Point& x) { return base(x) - shift; };

  SpectrumReport report;
  report.degree2_coeffs.resize(n);
  report.tolerance = xi;
  report.samples_used = mean.samples_used;
  for (int i = 0; i < n; ++i) {
    RngStream coord_rng = rng.fork(100 + static_cast<std::uint64_t>(i));
    const CoefficientEstimate est =
        estimate_coefficient(centered, MultiIndex::unit(n, i, 2), xi, delta, coord_rng);
    report.degree2_coeffs[i] = est.value;
    report.samples_used += est.samples_used;
    if (est.value < -2.0 * xi) report.non_convex_certificate = true;
  }
  report.negative_part_norm = dconv_lower_bound(report);
  return report;
}

SpectrumReport spectrum_report_from_expansion(const HermiteExpansion& e) {
  SpectrumReport report;
  report.degree2_coeffs.resize(e.dimension);
  for (int i = 0; i < e.dimension; ++i) {
    report.degree2_coeffs[i] = e.coefficient(MultiIndex::unit(e.dimension, i, 2));
  }
  report.tolerance = 0.0;
  for (int i = 0; i < e.dimension; ++i) {
    if (report.degree2_coeffs[i] < 0.0) report.non_convex_certificate = true;
  }
  report.negative_part_norm = dconv_lower_bound(report);
  return report;
}

double dconv_lower_bound(const SpectrumReport& report) {
  double acc = 0.0;
  for (int i = 0; i < report.degree2_coeffs.size(); ++i) {
    const double neg = std::max(-report.degree2_coeffs[i] - report.tolerance, 0.0);
    acc += neg * neg;
  }
  return std::sqrt(acc);
}

namespace {

// (2a-1)!! / (2a)!! as a product of (2j-1)/(2j).
double double_factorial_ratio(int a) {
  double r = 1.0;
  for (int j = 1; j <= a; ++j) r *= (2.0 * j - 1.0) / (2.0 * j);
  return r;
}

}  // namespace

double second_derivative_pt_at_zero(const HermiteExpansion& e, int coordinate, NoiseParameter t,
                                    int truncation) {
  if (coordinate < 0 || coordinate >= e.dimension) {
    throw std::invalid_argument("second_derivative_pt_at_zero: coordinate out of range");
  }
  if (truncation < 0) throw std::invalid_argument("second_derivative_pt_at_zero: truncation < 0");
  const HermiteExpansion noised = apply_noise_spectral(e, t);
  const int n = e.dimension;
  double acc = 0.0;
  for (const MultiIndex& alpha : enumerate_indices(n, truncation)) {
    MultiIndex key(alpha.entries * 2);
    key.entries[coordinate] += 2;
    const double coeff = noised.coefficient(key);
    if (coeff == 0.0) continue;
    const int ai = alpha.entries[coordinate];
    double term = coeff * std::sqrt((2.0 * ai + 1.0) * (2.0 * ai + 2.0));
    for (int k = 0; k < n; ++k) {
      const int ak = alpha.entries[k];
      term *= ((ak % 2 == 1) ? -1.0 : 1.0) * std::sqrt(double_factorial_ratio(ak));
    }
    acc += term;
  }
  return acc;
}

std::pair<SecretDirection, FunctionOracle> sample_dlin(int n, RngStream& rng) {
  Point u = sample_gaussian(n, rng);
  while (u.norm() < 1e-12) u = sample_gaussian(n, rng);
  u.normalize();
  std::vector<double> params(u.data(), u.data() + n);
  FunctionOracle oracle = catalog_function("linear", n, params);
  oracle.name = "dlin";
  return {SecretDirection{u}, oracle};
}

}  // namespace convexlab
