#pragma once

#include "convexlab/coeff_learn.hpp"
#include "convexlab/core.hpp"
#include "convexlab/hermite.hpp"

namespace convexlab {

/// Degree-2 diagonal Hermite coefficients fhat(2 e_i) of an input, with the
/// estimation tolerance they carry. A certificate means some coefficient is
/// negative beyond twice the tolerance, which is impossible for a convex
/// function.
struct SpectrumReport {
  Eigen::VectorXd degree2_coeffs;
  double tolerance = 0.0;  // xi per coefficient; 0 for exact reports
  double negative_part_norm = 0.0;
  bool non_convex_certificate = false;
  long long samples_used = 0;

  std::string verdict() const { return non_convex_certificate ? "non_convex_certificate" : "consistent"; }
};

struct SecretDirection {
  Point u;
};

/// Estimates fhat(2 e_i) for every coordinate via estimate_coefficient after
/// centering; flags a certificate when some estimate < -2 xi.
SpectrumReport degree2_check(const FunctionOracle& f, double xi, double delta, RngStream& rng);

/// Exact report read off an explicit expansion (tolerance 0).
SpectrumReport spectrum_report_from_expansion(const HermiteExpansion& e);

/// sqrt(sum_i max(-fhat(2 e_i) - xi, 0)^2): a lower bound on d_conv that
/// stays sound under the estimation tolerance.
double dconv_lower_bound(const SpectrumReport& report);

/// Evaluates the second derivative of P_t f at 0 along coordinate i as the
/// finite series over multi-indices alpha with |alpha| <= truncation:
///   sum_alpha Ptf_hat(2 alpha + 2 e_i) sqrt((2 a_i + 1)(2 a_i + 2))
///     prod_k (-1)^{a_k} sqrt((2 a_k - 1)!! / (2 a_k)!!).
double second_derivative_pt_at_zero(const HermiteExpansion& e, int coordinate, NoiseParameter t,
                                    int truncation);

/// The hard-distribution generator: u uniform on the sphere, oracle x -> <x, u>.
std::pair<SecretDirection, FunctionOracle> sample_dlin(int n, RngStream& rng);

}  // namespace convexlab
