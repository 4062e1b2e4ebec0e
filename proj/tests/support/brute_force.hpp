#pragma once

// Independent brute-force oracles used only by tests: a lattice DP for 1-D
// Lipschitz convex regression and direct scans for the envelope program.

#include <Eigen/Core>

#include <vector>

#include "convexlab/envelope.hpp"

namespace convexlab::testing {

/// Exact optimum of
///   min sum_i w_i (g_i - y_i)^2
///   s.t. consecutive slopes nondecreasing and within [-L, L]
/// over the value lattice {g_lo, g_lo + step, ..., g_hi}, for a uniformly
/// spaced sorted grid. This value space is exactly the 1-D feasible set of the
/// grid QCQP in (g, u) after eliminating the subgradients.
double dp_convex_regression_1d(const std::vector<double>& xs, const std::vector<double>& weights,
                               const std::vector<double>& labels, double lipschitz_bound,
                               double g_lo, double g_hi, double value_step);

/// Exact 1-D CECE value by enumerating the breakpoints of
/// phi(p) = p x + min_i (f_i - p y_i) over [-L, L].
double cece_exact_1d(const AnchorSet& anchors, double x);

/// Lower bound on CECE(x) for any n: scan p over scaled directions, with the
/// optimal intercept a = min_i (f_i - <p, y_i>).
double cece_direction_scan(const AnchorSet& anchors, const Point& x, int direction_count,
                           int radial_steps, RngStream& rng);

}  // namespace convexlab::testing
