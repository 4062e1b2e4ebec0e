#include "convexlab/coeff_learn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace convexlab {

namespace {

// log10 of the batch-size formula 8 (L^2 3^d + 4) / xi^2; safe for huge d.
double log10_batch_size(double lipschitz_bound, int degree, double xi) {
  const double log10_var =
      std::log10(8.0) +
      std::log10(lipschitz_bound * lipschitz_bound + 4.0 * std::pow(3.0, -degree)) +
      degree * std::log10(3.0);
  return log10_var - 2.0 * std::log10(xi);
}

int odd_batch_count(double delta) {
  return 2 * static_cast<int>(std::ceil(9.0 * std::log(1.0 / delta))) + 1;
}

double batch_mean(const FunctionOracle& f, const MultiIndex& alpha, long long count,
                  RngStream& rng) {
  const int jmax = alpha.entries.maxCoeff();
  double acc = 0.0;
  for (long long i = 0; i < count; ++i) {
    const LabeledSample s = draw_one(f, rng);
    double h = 1.0;
    for (int k = 0; k < alpha.dimension(); ++k) {
      h *= (jmax == 0) ? 1.0 : hermite_1d(alpha.entries[k], s.point[k]);
    }
    acc += s.value * h;
  }
  return acc / static_cast<double>(count);
}

double median_inplace(std::vector<double>& v) {
  std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
  return v[v.size() / 2];
}

}  // namespace

LearnBudget coefficient_budget(double lipschitz_bound, int alpha_degree, double xi,
                               double delta) {
  if (xi <= 0.0 || delta <= 0.0 || delta >= 1.0) {
    throw std::invalid_argument("coefficient_budget: need xi > 0, delta in (0,1)");
  }
  const double lg = log10_batch_size(lipschitz_bound, alpha_degree, xi);
  if (lg > 17.0) {
    throw ResourceError("coefficient_budget: formula batch size ~1e" +
                        std::to_string(static_cast<int>(lg)) + " exceeds integer range");
  }
  LearnBudget b;
  const double var = 8.0 * (lipschitz_bound * lipschitz_bound * std::pow(3.0, alpha_degree) + 4.0);
  b.samples_per_batch = static_cast<long long>(std::ceil(var / (xi * xi)));
  b.batch_count = odd_batch_count(delta);
  return b;
}

double estimate_mean(const FunctionOracle& f, double target_error, RngStream& rng) {
  return estimate_mean_capped(f, target_error, std::numeric_limits<long long>::max(), rng).value;
}

MeanEstimate estimate_mean_capped(const FunctionOracle& f, double target_error,
                                  long long sample_cap, RngStream& rng) {
  if (target_error <= 0.0) throw std::invalid_argument("estimate_mean: target_error must be > 0");
  MeanEstimate out;
  const double raw =
      std::ceil(100.0 * f.lipschitz_bound * f.lipschitz_bound / (target_error * target_error));
  out.samples_formula = raw > 9e18 ? std::numeric_limits<long long>::max()
                                   : std::max<long long>(1, static_cast<long long>(raw));
  out.samples_used = std::min(out.samples_formula, std::max<long long>(1, sample_cap));
  out.capped = out.samples_used < out.samples_formula;
  double acc = 0.0;
  for (long long i = 0; i < out.samples_used; ++i) acc += draw_one(f, rng).value;
  out.value = acc / static_cast<double>(out.samples_used);
  return out;
}

CoefficientEstimate estimate_coefficient(const FunctionOracle& f, const MultiIndex& alpha,
                                         double xi, double delta, RngStream& rng) {
  if (alpha.dimension() != f.dimension) {
    throw std::invalid_argument("estimate_coefficient: dimension mismatch");
  }
  const LearnBudget budget = coefficient_budget(f.lipschitz_bound, alpha.total_degree(), xi, delta);
  std::vector<double> means;
  means.reserve(budget.batch_count);
  for (int b = 0; b < budget.batch_count; ++b) {
    RngStream batch_rng = rng.fork(static_cast<std::uint64_t>(b) + 1);
    means.push_back(batch_mean(f, alpha, budget.samples_per_batch, batch_rng));
  }
  CoefficientEstimate est;
  est.alpha = alpha;
  est.value = median_inplace(means);
  est.tolerance_target = xi;
  est.confidence_target = 1.0 - delta;
  est.samples_used = budget.samples_per_batch * budget.batch_count;
  est.batches = budget.batch_count;
  return est;
}

int truncation_degree(double lipschitz_bound, double eps) {
  if (lipschitz_bound <= 0.0 || eps <= 0.0) {
    throw std::invalid_argument("truncation_degree: need L > 0, eps > 0");
  }
  return static_cast<int>(std::ceil((lipschitz_bound / eps) * (lipschitz_bound / eps)));
}

LearnExpansionReport learn_expansion_detailed(const FunctionOracle& f, int d, double eps,
                                              double delta, RngStream& rng,
                                              const LearnOptions& options) {
  if (d < 0 || eps <= 0.0 || delta <= 0.0 || delta >= 1.0) {
    throw std::invalid_argument("learn_expansion: need d >= 0, eps > 0, delta in (0,1)");
  }
  const int n = f.dimension;
  const double L = f.lipschitz_bound;
  const auto indices = enumerate_indices(n, d);

  LearnExpansionReport report;
  report.expansion.dimension = n;

  // Per-coefficient split of the corollary: xi = eps / (2 e n)^{d/2},
  // delta' = delta / (2 e n)^d. Computed in log space; 2en > 1 always.
  const double log_base = std::log(2.0 * std::exp(1.0) * n);
  const double log_xi = std::log(eps) - 0.5 * d * log_base;
  report.xi_formula = std::exp(log_xi);  // may underflow to 0; handled below
  report.delta_per_coeff = delta * std::exp(-d * log_base);
  const double log_inv_delta =
      std::log(1.0 / delta) + d * log_base;  // ln(1/delta'), finite always
  const int batches_formula = 2 * static_cast<int>(std::ceil(9.0 * log_inv_delta)) + 1;

  const long long cap = std::max<long long>(options.max_samples_per_coefficient, 64);
  double log10_total = -std::numeric_limits<double>::infinity();

  for (std::size_t idx = 0; idx < indices.size(); ++idx) {
    const MultiIndex& alpha = indices[idx];
    const int deg = alpha.total_degree();

    // Formula budget in log10; accumulate the formula total for reporting.
    const double log10_xi = log_xi / std::log(10.0);
    const double log10_s = log10_batch_size(L, deg, 1.0) - 2.0 * log10_xi;
    const double log10_coeff_total = log10_s + std::log10(static_cast<double>(batches_formula));
    log10_total = std::max(log10_total, log10_coeff_total) +
                  std::log1p(std::pow(10.0, -std::abs(log10_total - log10_coeff_total))) /
                      std::log(10.0);

    long long batch_size = 0;
    int batch_count = 0;
    bool capped = false;
    if (log10_coeff_total <= std::log10(static_cast<double>(cap))) {
      const double var = 8.0 * (L * L * std::pow(3.0, deg) + 4.0);
      batch_size = static_cast<long long>(std::ceil(var / std::exp(2.0 * log_xi)));
      batch_count = batches_formula;
    } else {
      capped = true;
      report.budget_capped = true;
      batch_count = options.capped_batch_count | 1;  // keep odd
      batch_size = std::max<long long>(1, cap / batch_count);
    }

    // Achievable tolerance at this batch size (same Chebyshev analysis).
    const double var = 8.0 * (L * L * std::pow(3.0, deg) + 4.0);
    const double xi_eff = std::sqrt(var / static_cast<double>(batch_size));

    // Zero is the better estimator once xi_eff passes the a-priori coefficient
    // bound L / sqrt(|alpha|) from the gradient identity.
    if (capped && deg >= 1 && xi_eff >= L / std::sqrt(static_cast<double>(deg))) {
      ++report.coefficients_skipped;
      continue;
    }
    report.worst_effective_xi = std::max(report.worst_effective_xi, xi_eff);

    RngStream coeff_rng = rng.fork(1000 + idx);
    std::vector<double> means;
    means.reserve(batch_count);
    for (int b = 0; b < batch_count; ++b) {
      RngStream batch_rng = coeff_rng.fork(static_cast<std::uint64_t>(b) + 1);
      means.push_back(batch_mean(f, alpha, batch_size, batch_rng));
    }
    report.expansion.set(alpha, median_inplace(means));
    report.samples_used += batch_size * static_cast<long long>(batch_count);
    ++report.coefficients_estimated;
  }
  report.log10_formula_samples = log10_total;
  return report;
}

HermiteExpansion learn_expansion(const FunctionOracle& f, int d, double eps, double delta,
                                 RngStream& rng, const LearnOptions& options) {
  return learn_expansion_detailed(f, d, eps, delta, rng, options).expansion;
}

}  // namespace convexlab
