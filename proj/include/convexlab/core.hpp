#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace convexlab {

using Point = Eigen::VectorXd;

/// Thrown when a configured resource cap (grid size, sample budget, cube
/// count) would be exceeded. Never downgraded to silent truncation.
class ResourceError : public std::runtime_error {
 public:
  explicit ResourceError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when an iterative solver hits its cap without meeting its
/// certificate. Carries a human-readable residual summary.
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// Counter-based RNG
// ---------------------------------------------------------------------------

/// Counter-based random stream: a pure function of (seed, stream_id, counter).
/// Copies are independent replays; identical (seed, stream_id) always yields
/// identical draws, and distinct stream_ids give independent-quality streams.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
      : seed_(seed), stream_(stream_id), counter_(0) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

  /// Derived stream, decorrelated from this one and from other fork indices.
  RngStream fork(std::uint64_t k) const;

  /// Next uniform in (0, 1].
  double next_uniform();

  /// Next standard normal (Box-Muller, cosine branch).
  double next_normal();

 private:
  std::uint64_t word_at(std::uint64_t ctr) const;

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_;
};

// ---------------------------------------------------------------------------
// Oracles and samples
// ---------------------------------------------------------------------------

struct LabeledSample {
  Point point;
  double value = 0.0;
};

/// Black-box evaluation access to an L-Lipschitz f: R^n -> R. The declared
/// bound must dominate the true Lipschitz constant; entries that are only
/// locally Lipschitz say so in `lipschitz_note` together with their valid
/// ball. `draws` counts labeled samples taken through this oracle.
struct FunctionOracle {
  int dimension = 0;
  double lipschitz_bound = 0.0;
  std::function<double(const Point&)> evaluator;
  std::string name;
  std::string lipschitz_note;  // empty when the bound is global
  std::shared_ptr<long long> draws = std::make_shared<long long>(0);

  double operator()(const Point& x) const { return evaluator(x); }
};

Point sample_gaussian(int n, RngStream& rng);

std::vector<LabeledSample> draw_labeled(const FunctionOracle& oracle, long long count,
                                        RngStream& rng);

/// One labeled sample; counts one draw against the oracle.
LabeledSample draw_one(const FunctionOracle& oracle, RngStream& rng);

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

/// Built-in test functions. Names: linear, relu_proj, abs_proj, quadratic,
/// neg_h2, sine_proj, and noised(inner, t). Projection-family entries take a
/// unit direction u (n params) or a scale s with |s| <= 1 followed by u
/// (n+1 params). `quadratic` takes {c}; `neg_h2` takes {s} or {s, u...}.
FunctionOracle catalog_function(const std::string& name, int n,
                                const std::vector<double>& params);

/// Parses the CLI grammar `name[:p1,p2,...]`, including
/// `noised(inner,t)[:params...]`, and builds the oracle.
FunctionOracle parse_function_spec(const std::string& spec, int n);

// ---------------------------------------------------------------------------
// Monte-Carlo L2(gamma) distance
// ---------------------------------------------------------------------------

struct McDistance {
  double estimate = 0.0;    // sqrt of the mean squared difference
  double half_width = 0.0;  // 95% normal-approx half-width, propagated to the root
  double mean_sq = 0.0;
  double half_width_sq = 0.0;
};

McDistance mc_l2_distance(const FunctionOracle& f, const FunctionOracle& g, long long count,
                          RngStream& rng);

/// Standard normal CDF.
double normal_cdf(double x);

}  // namespace convexlab
