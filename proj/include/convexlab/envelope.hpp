#pragma once

#include <Eigen/Core>

#include <optional>
#include <vector>

#include "convexlab/core.hpp"
#include "convexlab/learn_test.hpp"

namespace convexlab {

/// Labeled points Y defining an empirical convex envelope at Lipschitz
/// bound L.
struct AnchorSet {
  Eigen::MatrixXd points;  // m x n
  Eigen::VectorXd values;  // f(y_i)
  double lipschitz_bound = 0.0;

  int dimension() const { return static_cast<int>(points.cols()); }
  long long size() const { return points.rows(); }
};

enum class CeceStatus { optimal, numerical_failure };

struct EnvelopeQuery {
  Point x;
  double value = 0.0;       // CECE(x)
  Point argmax_slope;       // p
  double argmax_intercept = 0.0;  // a
  CeceStatus status = CeceStatus::optimal;
  int rounds = 0;
};

/// Pointwise evaluator for the empirical convex envelope:
///   maximize <p, x> + a  s.t.  ||p|| <= L,  <p, y_i> + a <= f(y_i).
/// Exact: the intercept is eliminated against the tight anchor, and the
/// remaining concave piecewise-linear maximization over the ball is solved by
/// constraint generation with exhaustive active-set subproblems (n <= 4).
/// The working set persists across queries on one anchor set.
class CeceSolver {
 public:
  explicit CeceSolver(AnchorSet anchors);

  EnvelopeQuery solve(const Point& x) const;
  const AnchorSet& anchors() const { return anchors_; }

 private:
  EnvelopeQuery solve_with_rounds(const Point& x, int max_rounds) const;

  AnchorSet anchors_;
  mutable std::vector<int> working_set_;
};

/// One-shot form of the solver above.
EnvelopeQuery cece(const AnchorSet& anchors, const Point& x);

// ---------------------------------------------------------------------------
// Coverage check
// ---------------------------------------------------------------------------

struct CoverageReport {
  bool covered = false;
  double cell_side = 0.0;  // ell = eps / (4 L sqrt(n))
  long long cube_count = 0;  // cubes intersecting B2(1.1 sqrt(n))
  std::optional<std::vector<int>> empty_cell_witness;
  double witness_nearest_norm = 0.0;
};

struct CoverageLimits {
  long long max_cubes = 10000000;
};

/// Bins the in-ball samples into the side-ell cube grid over B_inf(1.1 sqrt n)
/// and reports whether every cube intersecting B2(1.1 sqrt n) holds a sample.
/// Cube-ball intersection is decided by the cube's nearest point to the origin.
CoverageReport coverage_check(const std::vector<Point>& samples, double lipschitz_bound,
                              double eps, int n, const CoverageLimits& limits = {});

// ---------------------------------------------------------------------------
// One-sided tester
// ---------------------------------------------------------------------------

struct OneSidedOptions {
  double c_constant = 200.0;  // constant in t1 = (c L sqrt(n) / eps)^n
  long long max_samples = 2000000;
  CoverageLimits coverage_limits;
};

/// Algorithm-1 tester: never rejects a convex input. Draws t1 anchors, accepts
/// outright if the coverage check fails, then tests |f - CECE| >= eps/2 on
/// t2 = ceil(5/eps^4) fresh in-ball queries. Numerical failure of a query is
/// retried once and then mapped to reject.
TestVerdict one_sided_test(const FunctionOracle& f, double lipschitz_bound, double eps,
                           RngStream& rng, const OneSidedOptions& options = {});

/// Per-query residuals |f(x) - CECE(x)| for diagnostics.
std::vector<double> envelope_residual_scan(const AnchorSet& anchors, const FunctionOracle& f,
                                           const std::vector<Point>& queries);

}  // namespace convexlab
