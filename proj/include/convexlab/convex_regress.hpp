#pragma once

#include <Eigen/Core>

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "convexlab/core.hpp"

namespace convexlab {

/// Axis-aligned cube B_inf(radius) in dimension n.
struct Box {
  double radius = 0.0;
  int dimension = 0;
  Box(double r, int n) : radius(r), dimension(n) {
    if (r <= 0.0 || n < 1) throw std::invalid_argument("Box: need radius > 0, n >= 1");
  }
};

/// The snapped grid X over a box, per-point conditional Gaussian cell masses,
/// and the labels to regress against. Cells are the boxes between consecutive
/// per-axis coordinates (the last per-axis cell is empty), so they partition
/// the box and masses sum to one exactly.
struct GridModel {
  Box box;
  double spacing = 0.0;                // alpha_grid = eps / (10 L sqrt(n))
  std::vector<double> axis_coords;     // sorted per-axis coordinates (shared across axes)
  Eigen::MatrixXd points;              // |X| x n, row-major cartesian order
  Eigen::VectorXd masses;              // muhat, sums to 1
  Eigen::VectorXd values;              // g(x) labels

  long long size() const { return points.rows(); }
};

struct GridLimits {
  long long max_points = 2000000;
};

/// Grid point set of Lemma-3.7 type: snap_r(k * alpha) per axis, |k| <= ceil(r/alpha),
/// deduplicated, in deterministic cartesian order. Throws ResourceError past the cap.
GridModel build_grid(const Box& box, double lipschitz_bound, double eps,
                     const GridLimits& limits = {});

/// Fills `masses`: product over axes of per-axis conditional Gaussian cell
/// masses, normalized to the box.
void cell_masses(GridModel& grid);

/// Labels the grid with a deterministic function (not an oracle draw).
void label_grid(GridModel& grid, const std::function<double(const Point&)>& fn);

// ---------------------------------------------------------------------------
// Max-affine functions
// ---------------------------------------------------------------------------

/// Pointwise maximum of affine pieces <p, x> + a with ||p||_2 <= L. The
/// canonical representation of every learned convex hypothesis.
class MaxAffineFunction {
 public:
  MaxAffineFunction(Eigen::MatrixXd slopes, Eigen::VectorXd intercepts, double lipschitz_bound);

  double operator()(const Point& x) const;
  /// Index of a piece attaining the maximum at x.
  int argmax_piece(const Point& x) const;

  int dimension() const { return static_cast<int>(slopes_.cols()); }
  long long piece_count() const { return slopes_.rows(); }
  const Eigen::MatrixXd& slopes() const { return slopes_; }
  const Eigen::VectorXd& intercepts() const { return intercepts_; }
  double lipschitz_bound() const { return lipschitz_bound_; }

  void shift(double c) { intercepts_.array() += c; }

  std::string to_json() const;
  static MaxAffineFunction from_json(const std::string& json_text);

  FunctionOracle as_oracle(const std::string& name = "max_affine") const;

 private:
  struct Envelope1d;  // upper-envelope accelerator, built lazily at n = 1
  const Envelope1d& envelope1d() const;

  Eigen::MatrixXd slopes_;
  Eigen::VectorXd intercepts_;
  double lipschitz_bound_ = 0.0;
  mutable std::shared_ptr<Envelope1d> env1d_;
};

// ---------------------------------------------------------------------------
// The grid QCQP
// ---------------------------------------------------------------------------

struct QcqpOptions {
  long long max_total_inner_iterations = 1000000;
  int max_outer_iterations = 600;
  int inner_iterations = 120;
  double feasibility_tol_scale = 1e-8;  // * (1 + max|g|): affine; * L^2: norm rows
  /// On cap exhaustion: throw SolverError (false) or return the best feasible
  /// iterate with converged=false (true).
  bool return_best_on_cap = false;
};

struct QcqpSolution {
  Eigen::VectorXd g_hat;
  Eigen::MatrixXd u_hat;           // |X| x n subgradients, each row inside B2(L)
  double objective = 0.0;          // at the (exactly feasible) returned point
  double duality_gap = 0.0;        // objective - exact Lagrangian dual value
  double max_affine_violation = 0.0;  // over the full pair set
  double max_norm_violation = 0.0;
  long long inner_iterations = 0;
  int outer_iterations = 0;
  bool converged = false;
};

/// Least-squares fit of values and subgradients over the grid, subject to the
/// supporting-hyperplane inequalities and ||u(x)|| <= L, solved to duality gap
/// <= eps^2/100 by an augmented-Lagrangian scheme with projected FISTA inner
/// solves. n = 1 runs on the exact adjacent-pair reduction; n >= 2 generates
/// violated pair constraints until a full scan is clean. The returned point is
/// made exactly feasible by re-extracting the max-affine extension at the grid.
QcqpSolution solve_lipschitz_convex_qcqp(const GridModel& grid, double lipschitz_bound,
                                         double eps, const QcqpOptions& options = {});

/// Eq.-(3.5) extension: one piece per grid point, slope u(x), intercept
/// g(x) - <u(x), x>.
MaxAffineFunction extend_max_affine(const QcqpSolution& sol, const GridModel& grid,
                                    double lipschitz_bound);

// ---------------------------------------------------------------------------
// Brute-force-flavored distance oracle
// ---------------------------------------------------------------------------

struct DconvOracleResult {
  double value = 0.0;        // sqrt of the fine-grid QCQP optimum
  double eps_oracle = 0.0;   // documented total error budget
  double discretization_budget = 0.0;
  double tail_budget = 0.0;
  double solver_budget = 0.0;
  double radius = 0.0;
  double spacing = 0.0;
  long long grid_points = 0;
};

/// Independent estimate of d_conv^L(f): fine-grid QCQP over B_inf(r) with
/// spacing eps_oracle / (20 L sqrt(n)) and r sized so the box-to-Gaussian tail
/// terms stay below eps_oracle / 10. Resource-guarded to n <= 2.
DconvOracleResult oracle_dconv_detailed(const FunctionOracle& f, double lipschitz_bound,
                                        double eps_oracle, const GridLimits& limits = {});

double oracle_dconv(const FunctionOracle& f, double lipschitz_bound, double eps_oracle,
                    const GridLimits& limits = {});

/// CSV dump x_1..x_n, mass, g, g_hat.
std::string grid_diagnostics_csv(const GridModel& grid, const QcqpSolution& sol);

}  // namespace convexlab
