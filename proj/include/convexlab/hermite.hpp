#pragma once

#include <Eigen/Core>

#include <map>
#include <string>
#include <vector>

#include "convexlab/core.hpp"

namespace convexlab {

// ---------------------------------------------------------------------------
// Multi-indices
// ---------------------------------------------------------------------------

/// Tuple of nonnegative integer degrees, one per coordinate.
struct MultiIndex {
  Eigen::VectorXi entries;

  MultiIndex() = default;
  explicit MultiIndex(Eigen::VectorXi e) : entries(std::move(e)) {}
  static MultiIndex zero(int n) { return MultiIndex(Eigen::VectorXi::Zero(n)); }
  static MultiIndex unit(int n, int i, int degree = 1);

  int dimension() const { return static_cast<int>(entries.size()); }
  int total_degree() const { return entries.sum(); }
  bool operator==(const MultiIndex& o) const {
    return entries.size() == o.entries.size() && entries == o.entries;
  }
};

/// Graded-lexicographic order: by |alpha|, then left-to-right entries.
/// Fixes the vector layout everywhere an order is needed.
struct GradedLexLess {
  bool operator()(const MultiIndex& a, const MultiIndex& b) const;
};

/// All alpha with |alpha| <= d, each once, in graded-lex order.
std::vector<MultiIndex> enumerate_indices(int n, int d);

// ---------------------------------------------------------------------------
// Hermite basis
// ---------------------------------------------------------------------------

/// h_j(z) by the normalized three-term recurrence
///   sqrt(k+1) h_{k+1}(z) = z h_k(z) - sqrt(k) h_{k-1}(z),  h_0 = 1, h_1 = z.
double hermite_1d(int j, double z);

/// h_0(z) .. h_{j_max}(z) in one recurrence pass.
Eigen::VectorXd hermite_all(int j_max, double z);

/// Product basis value h_alpha(x) = prod_i h_{alpha_i}(x_i).
double hermite_multi(const MultiIndex& alpha, const Point& x);

// ---------------------------------------------------------------------------
// Expansions
// ---------------------------------------------------------------------------

/// Sparse Hermite expansion: dimension plus a coefficient map in graded-lex
/// order. Absent keys are zero.
struct HermiteExpansion {
  int dimension = 0;
  std::map<MultiIndex, double, GradedLexLess> coefficients;

  double coefficient(const MultiIndex& alpha) const {
    auto it = coefficients.find(alpha);
    return it == coefficients.end() ? 0.0 : it->second;
  }
  void set(const MultiIndex& alpha, double value);
  int max_degree() const;
  /// Sum of squared coefficients (Parseval norm squared).
  double norm_sq() const;
};

double eval_expansion(const HermiteExpansion& e, const Point& x);

/// Sum_alpha |alpha| fhat(alpha)^2 == E||grad f||^2 for the polynomial f.
double expansion_gradient_sq_norm(const HermiteExpansion& e);

/// Plancherel inner product of two expansions.
double expansion_inner(const HermiteExpansion& a, const HermiteExpansion& b);

// ---------------------------------------------------------------------------
// Ornstein-Uhlenbeck noise operator
// ---------------------------------------------------------------------------

struct NoiseParameter {
  double t = 0.0;
  explicit NoiseParameter(double t_) : t(t_) {
    if (t < 0.0) throw std::invalid_argument("NoiseParameter: t must be >= 0");
  }
};

/// Spectral form: multiplies each coefficient by e^{-t |alpha|}.
HermiteExpansion apply_noise_spectral(const HermiteExpansion& e, NoiseParameter t);

/// Monte-Carlo form: averages f(e^{-t} x + sqrt(1 - e^{-2t}) g) over `count`
/// Gaussian draws g. For oracles without expansions; the spectral form is
/// authoritative for polynomials.
double apply_noise_mc(const FunctionOracle& f, NoiseParameter t, const Point& x,
                      long long count, RngStream& rng);

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// {"n": n, "coeffs": [{"alpha": [...], "c": v}, ...]} in graded-lex order,
/// coefficient values with 17 significant digits.
std::string expansion_to_json(const HermiteExpansion& e);
HermiteExpansion expansion_from_json(const std::string& json_text);

/// Wraps a polynomial as an oracle. The declared bound is the sup of the
/// gradient norm over B2(ball_radius) (locally Lipschitz entry).
FunctionOracle expansion_oracle(const HermiteExpansion& e, double ball_radius = 0.0);

}  // namespace convexlab
