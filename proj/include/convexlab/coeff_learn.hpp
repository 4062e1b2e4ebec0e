#pragma once

#include "convexlab/core.hpp"
#include "convexlab/hermite.hpp"

namespace convexlab {

struct CoefficientEstimate {
  MultiIndex alpha;
  double value = 0.0;
  double tolerance_target = 0.0;  // xi
  double confidence_target = 0.0; // 1 - delta
  long long samples_used = 0;
  int batches = 0;
};

/// Median-of-means plan: `batch_count` odd, each batch of `samples_per_batch`.
struct LearnBudget {
  long long samples_per_batch = 1;
  int batch_count = 1;
};

/// The pinned budget for one coefficient: batch size ceil(8 (L^2 3^|alpha| + 4) / xi^2),
/// batch count 2 ceil(9 ln(1/delta)) + 1. Throws ResourceError when the count
/// does not fit in integer arithmetic.
LearnBudget coefficient_budget(double lipschitz_bound, int alpha_degree, double xi, double delta);

/// Mean of f to within `target_error` (probability >= 9/10) using
/// ceil(100 L^2 / target_error^2) samples. Poincare gives Var[f] <= L^2.
double estimate_mean(const FunctionOracle& f, double target_error, RngStream& rng);

/// Internal form with an explicit cap on the sample count; `capped` reports
/// whether the formula budget was clipped.
struct MeanEstimate {
  double value = 0.0;
  long long samples_formula = 0;
  long long samples_used = 0;
  bool capped = false;
};
MeanEstimate estimate_mean_capped(const FunctionOracle& f, double target_error,
                                  long long sample_cap, RngStream& rng);

/// Single-coefficient estimator of Lemma-3.4 type: median over batches of the
/// batch means of f(x) h_alpha(x). Caller must pre-center f so |E f| = O(1).
CoefficientEstimate estimate_coefficient(const FunctionOracle& f, const MultiIndex& alpha,
                                         double xi, double delta, RngStream& rng);

// ---------------------------------------------------------------------------
// Full low-degree expansion
// ---------------------------------------------------------------------------

/// Desk-scale budget policy for learn_expansion. The per-coefficient formula
/// budget is used verbatim whenever it fits under
/// `max_samples_per_coefficient`; otherwise the batch size is clipped and the
/// achievable tolerance xi_eff(alpha) = sqrt(8 (L^2 3^|alpha| + 4) / s_eff)
/// recomputed. Coefficients whose xi_eff exceeds the a-priori bound
/// |fhat(alpha)| <= L / sqrt(|alpha|) are skipped (estimate frozen at zero:
/// the zero estimator has smaller certified risk than the capped empirical
/// mean there).
struct LearnOptions {
  long long max_samples_per_coefficient = 200000;
  int capped_batch_count = 11;  // odd
};

struct LearnExpansionReport {
  HermiteExpansion expansion;
  long long samples_used = 0;
  double log10_formula_samples = 0.0;  // total formula budget, log10
  bool budget_capped = false;
  int coefficients_estimated = 0;
  int coefficients_skipped = 0;
  double xi_formula = 0.0;       // per-coefficient target from the corollary
  double delta_per_coeff = 0.0;
  double worst_effective_xi = 0.0;
};

/// Degree-d expansion estimate with target ||f^{<=d} - out|| <= eps
/// (probability >= 1 - delta when the formula budget is not capped).
LearnExpansionReport learn_expansion_detailed(const FunctionOracle& f, int d, double eps,
                                              double delta, RngStream& rng,
                                              const LearnOptions& options = {});

HermiteExpansion learn_expansion(const FunctionOracle& f, int d, double eps, double delta,
                                 RngStream& rng, const LearnOptions& options = {});

/// ceil(L^2 / eps^2).
int truncation_degree(double lipschitz_bound, double eps);

}  // namespace convexlab
