#include "convexlab/convex_regress.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>
#include <sstream>

namespace convexlab {

// ---------------------------------------------------------------------------
// Grid construction
// ---------------------------------------------------------------------------

GridModel build_grid(const Box& box, double lipschitz_bound, double eps,
                     const GridLimits& limits) {
  if (eps <= 0.0 || lipschitz_bound <= 0.0) {
    throw std::invalid_argument("build_grid: need eps > 0, L > 0");
  }
  const int n = box.dimension;
  const double r = box.radius;
  const double alpha = eps / (10.0 * lipschitz_bound * std::sqrt(static_cast<double>(n)));

  const double k_max_d = std::ceil(r / alpha);
  if (k_max_d > 1e9) throw ResourceError("build_grid: per-axis count exceeds 1e9");
  const long long k_max = static_cast<long long>(k_max_d);

  std::vector<double> coords;
  for (long long k = -k_max; k <= k_max; ++k) {
    const double t = std::clamp(static_cast<double>(k) * alpha, -r, r);
    if (coords.empty() || t > coords.back() + 1e-15 * std::max(1.0, r)) coords.push_back(t);
  }
  const long long per_axis = static_cast<long long>(coords.size());

  double total_d = 1.0;
  for (int i = 0; i < n; ++i) total_d *= static_cast<double>(per_axis);
  if (total_d > static_cast<double>(limits.max_points)) {
    throw ResourceError("build_grid: grid would have ~" + std::to_string(total_d) +
                        " points, exceeding the cap of " + std::to_string(limits.max_points));
  }
  const long long total = static_cast<long long>(total_d);

  GridModel grid{box};
  grid.spacing = alpha;
  grid.axis_coords = coords;
  grid.points.resize(total, n);
  std::vector<long long> idx(n, 0);
  for (long long row = 0; row < total; ++row) {
    for (int a = 0; a < n; ++a) grid.points(row, a) = coords[idx[a]];
    for (int a = n - 1; a >= 0; --a) {  // row-major cartesian increment
      if (++idx[a] < per_axis) break;
      idx[a] = 0;
    }
  }
  grid.masses = Eigen::VectorXd::Zero(total);
  grid.values = Eigen::VectorXd::Zero(total);
  return grid;
}

void cell_masses(GridModel& grid) {
  const int n = grid.box.dimension;
  const double r = grid.box.radius;
  const auto& coords = grid.axis_coords;
  const long long per_axis = static_cast<long long>(coords.size());
  const double axis_norm = normal_cdf(r) - normal_cdf(-r);

  // Per-axis cell between consecutive coordinates; the final cell is empty.
  std::vector<double> axis_mass(per_axis, 0.0);
  for (long long j = 0; j + 1 < per_axis; ++j) {
    axis_mass[j] = (normal_cdf(coords[j + 1]) - normal_cdf(coords[j])) / axis_norm;
  }

  std::vector<long long> idx(n, 0);
  for (long long row = 0; row < grid.points.rows(); ++row) {
    double m = 1.0;
    for (int a = 0; a < n; ++a) m *= axis_mass[idx[a]];
    grid.masses[row] = m;
    for (int a = n - 1; a >= 0; --a) {
      if (++idx[a] < per_axis) break;
      idx[a] = 0;
    }
  }
}

void label_grid(GridModel& grid, const std::function<double(const Point&)>& fn) {
  for (long long row = 0; row < grid.points.rows(); ++row) {
    grid.values[row] = fn(grid.points.row(row).transpose());
  }
}

// ---------------------------------------------------------------------------
// MaxAffineFunction
// ---------------------------------------------------------------------------

struct MaxAffineFunction::Envelope1d {
  // Upper envelope of lines y = s*x + b, pieces ordered by slope with
  // breakpoints xs (piece k active on [xs[k-1], xs[k]]).
  std::vector<double> slope, intercept, right_breakpoint;
  std::vector<int> piece_index;
};

MaxAffineFunction::MaxAffineFunction(Eigen::MatrixXd slopes, Eigen::VectorXd intercepts,
                                     double lipschitz_bound)
    : slopes_(std::move(slopes)), intercepts_(std::move(intercepts)),
      lipschitz_bound_(lipschitz_bound) {
  if (slopes_.rows() != intercepts_.size() || slopes_.rows() == 0) {
    throw std::invalid_argument("MaxAffineFunction: need one intercept per piece, >= 1 piece");
  }
  const double cap = lipschitz_bound_ * (1.0 + 1e-9);
  for (long long i = 0; i < slopes_.rows(); ++i) {
    if (slopes_.row(i).norm() > cap) {
      throw std::invalid_argument("MaxAffineFunction: piece slope exceeds the Lipschitz bound");
    }
  }
}

const MaxAffineFunction::Envelope1d& MaxAffineFunction::envelope1d() const {
  if (env1d_) return *env1d_;
  auto env = std::make_shared<Envelope1d>();
  const long long m = slopes_.rows();
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (slopes_(a, 0) != slopes_(b, 0)) return slopes_(a, 0) < slopes_(b, 0);
    return intercepts_[a] < intercepts_[b];
  });
  // Monotone-stack upper envelope (max of lines, slopes increasing).
  // cross(a, b) is where line b overtakes line a (requires s_a < s_b).
  const auto cross = [](double sa, double ba, double sb, double bb) {
    return (ba - bb) / (sb - sa);
  };
  for (int id : order) {
    const double s = slopes_(id, 0);
    const double b = intercepts_[id];
    if (!env->slope.empty() && s == env->slope.back()) {
      if (b <= env->intercept.back()) continue;
      env->slope.pop_back();
      env->intercept.pop_back();
      env->piece_index.pop_back();
    }
    // Pop the last line while the new one overtakes the one before it no
    // later than the last line did.
    while (env->slope.size() >= 2) {
      const std::size_t k = env->slope.size();
      const double x_new = cross(env->slope[k - 2], env->intercept[k - 2], s, b);
      const double x_old = cross(env->slope[k - 2], env->intercept[k - 2], env->slope[k - 1],
                                 env->intercept[k - 1]);
      if (x_new > x_old) break;
      env->slope.pop_back();
      env->intercept.pop_back();
      env->piece_index.pop_back();
    }
    env->slope.push_back(s);
    env->intercept.push_back(b);
    env->piece_index.push_back(id);
  }
  env->right_breakpoint.resize(env->slope.size());
  for (std::size_t k = 0; k + 1 < env->slope.size(); ++k) {
    env->right_breakpoint[k] = (env->intercept[k + 1] - env->intercept[k]) /
                               (env->slope[k] - env->slope[k + 1]);
  }
  env->right_breakpoint.back() = std::numeric_limits<double>::infinity();
  env1d_ = std::move(env);
  return *env1d_;
}

double MaxAffineFunction::operator()(const Point& x) const {
  if (x.size() != slopes_.cols()) {
    throw std::invalid_argument("MaxAffineFunction: dimension mismatch");
  }
  if (slopes_.cols() == 1 && slopes_.rows() > 16) {
    const auto& env = envelope1d();
    const auto it = std::lower_bound(env.right_breakpoint.begin(), env.right_breakpoint.end(),
                                     x[0]);
    const std::size_t k = std::min<std::size_t>(it - env.right_breakpoint.begin(),
                                                env.slope.size() - 1);
    return env.slope[k] * x[0] + env.intercept[k];
  }
  return (slopes_ * x + intercepts_).maxCoeff();
}

int MaxAffineFunction::argmax_piece(const Point& x) const {
  if (slopes_.cols() == 1 && slopes_.rows() > 16) {
    const auto& env = envelope1d();
    const auto it = std::lower_bound(env.right_breakpoint.begin(), env.right_breakpoint.end(),
                                     x[0]);
    const std::size_t k = std::min<std::size_t>(it - env.right_breakpoint.begin(),
                                                env.slope.size() - 1);
    return env.piece_index[k];
  }
  Eigen::Index best = 0;
  (slopes_ * x + intercepts_).maxCoeff(&best);
  return static_cast<int>(best);
}

namespace {
std::string format_17g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace

std::string MaxAffineFunction::to_json() const {
  std::string out = "{\"L\": " + format_17g(lipschitz_bound_) + ", \"pieces\": [";
  for (long long i = 0; i < slopes_.rows(); ++i) {
    if (i) out += ", ";
    out += "{\"p\": [";
    for (int a = 0; a < slopes_.cols(); ++a) {
      if (a) out += ", ";
      out += format_17g(slopes_(i, a));
    }
    out += "], \"a\": " + format_17g(intercepts_[i]) + "}";
  }
  out += "]}";
  return out;
}

MaxAffineFunction MaxAffineFunction::from_json(const std::string& json_text) {
  const auto j = nlohmann::json::parse(json_text);
  const double L = j.at("L").get<double>();
  const auto& pieces = j.at("pieces");
  if (pieces.empty()) throw std::invalid_argument("MaxAffineFunction: no pieces in JSON");
  const int n = static_cast<int>(pieces[0].at("p").size());
  Eigen::MatrixXd slopes(pieces.size(), n);
  Eigen::VectorXd intercepts(pieces.size());
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const auto& pv = pieces[i].at("p");
    for (int a = 0; a < n; ++a) slopes(static_cast<long long>(i), a) = pv[a].get<double>();
    intercepts[static_cast<long long>(i)] = pieces[i].at("a").get<double>();
  }
  return MaxAffineFunction(std::move(slopes), std::move(intercepts), L);
}

FunctionOracle MaxAffineFunction::as_oracle(const std::string& name) const {
  FunctionOracle oracle;
  oracle.dimension = dimension();
  oracle.lipschitz_bound = lipschitz_bound_;
  oracle.name = name;
  auto copy = std::make_shared<MaxAffineFunction>(*this);
  oracle.evaluator = [copy](const Point& x) { return (*copy)(x); };
  return oracle;
}

// ---------------------------------------------------------------------------
// QCQP solver
// ---------------------------------------------------------------------------

namespace {

struct PairSet {
  std::vector<std::pair<int, int>> rows;  // constraint g_i - g_j + <u_i, x_j - x_i> <= 0
};

// c_p for every pair, given values/subgradients on the solved subset.
void eval_constraints(const Eigen::MatrixXd& pts, const PairSet& pairs,
                      const Eigen::VectorXd& g, const Eigen::MatrixXd& u, Eigen::VectorXd& out) {
  const int n = static_cast<int>(pts.cols());
  out.resize(static_cast<long long>(pairs.rows.size()));
  for (std::size_t p = 0; p < pairs.rows.size(); ++p) {
    const auto [i, j] = pairs.rows[p];
    double c = g[i] - g[j];
    for (int a = 0; a < n; ++a) c += u(i, a) * (pts(j, a) - pts(i, a));
    out[static_cast<long long>(p)] = c;
  }
}

// Adjoint accumulation: (gg, gu) += M^T w.
void add_adjoint(const Eigen::MatrixXd& pts, const PairSet& pairs, const Eigen::VectorXd& w,
                 Eigen::VectorXd& gg, Eigen::MatrixXd& gu) {
  const int n = static_cast<int>(pts.cols());
  for (std::size_t p = 0; p < pairs.rows.size(); ++p) {
    const double wp = w[static_cast<long long>(p)];
    if (wp == 0.0) continue;
    const auto [i, j] = pairs.rows[p];
    gg[i] += wp;
    gg[j] -= wp;
    for (int a = 0; a < n; ++a) gu(i, a) += wp * (pts(j, a) - pts(i, a));
  }
}

double operator_norm_sq(const Eigen::MatrixXd& pts, const PairSet& pairs, int m, int n) {
  // Generic deterministic start; a constant g lies in the null space of the
  // pair-difference rows, so vary the entries.
  Eigen::VectorXd g(m);
  Eigen::MatrixXd u(m, n);
  for (int i = 0; i < m; ++i) {
    g[i] = std::cos(0.7 * i) + 0.3;
    for (int a = 0; a < n; ++a) u(i, a) = std::sin(0.3 * i + a) + 0.1;
  }
  const double init = std::sqrt(g.squaredNorm() + u.squaredNorm());
  g /= init;
  u /= init;
  Eigen::VectorXd c;
  double norm_sq = 1.0;
  for (int it = 0; it < 50; ++it) {
    eval_constraints(pts, pairs, g, u, c);
    Eigen::VectorXd gg = Eigen::VectorXd::Zero(m);
    Eigen::MatrixXd gu = Eigen::MatrixXd::Zero(m, n);
    add_adjoint(pts, pairs, c, gg, gu);
    const double nrm = std::sqrt(gg.squaredNorm() + gu.squaredNorm());
    if (nrm < 1e-300) return 1.0;
    norm_sq = nrm;
    g = gg / nrm;
    u = gu / nrm;
  }
  return norm_sq * 1.2;  // headroom over the power-iteration estimate
}

void project_rows_to_ball(Eigen::MatrixXd& u, double radius) {
  for (long long i = 0; i < u.rows(); ++i) {
    const double nrm = u.row(i).norm();
    if (nrm > radius) u.row(i) *= radius / nrm;
  }
}

// Exact Lagrangian dual value at lambda >= 0:
//   min_g sum mu (g - y)^2 + a.g  +  sum_i min_{|u_i|<=L} <w_i, u_i>
// with a = A_g^T lambda and w_i the aggregated slope loads.
double dual_value(const Eigen::MatrixXd& pts, const PairSet& pairs, const Eigen::VectorXd& mu,
                  const Eigen::VectorXd& y, double L, const Eigen::VectorXd& lambda) {
  const int m = static_cast<int>(mu.size());
  const int n = static_cast<int>(pts.cols());
  Eigen::VectorXd a = Eigen::VectorXd::Zero(m);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m, n);
  add_adjoint(pts, pairs, lambda, a, w);
  double val = 0.0;
  for (int i = 0; i < m; ++i) {
    val += a[i] * y[i] - a[i] * a[i] / (4.0 * mu[i]);
    val -= L * w.row(i).norm();
  }
  return val;
}

struct Feasibilized {
  Eigen::VectorXd g;
  Eigen::MatrixXd u;
};

// Re-extract the max-affine extension at the grid points: values become the
// envelope of the pieces, subgradients the argmax slopes. Exactly feasible for
// every pair by the subgradient inequality.
Feasibilized feasibilize(const Eigen::MatrixXd& pts, const Eigen::VectorXd& g,
                         const Eigen::MatrixXd& u, double L) {
  const long long m = pts.rows();
  const int n = static_cast<int>(pts.cols());
  Eigen::VectorXd intercepts(m);
  for (long long i = 0; i < m; ++i) intercepts[i] = g[i] - u.row(i).dot(pts.row(i));
  MaxAffineFunction fn{u, intercepts, L * (1.0 + 1e-12)};
  Feasibilized out;
  out.g.resize(m);
  out.u.resize(m, n);
  for (long long i = 0; i < m; ++i) {
    const Point x = pts.row(i).transpose();
    const int k = fn.argmax_piece(x);
    out.g[i] = u.row(k).dot(pts.row(i)) + intercepts[k];
    out.u.row(i) = u.row(k);
  }
  return out;
}

double objective_value(const Eigen::VectorXd& mu, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& g) {
  return ((g - y).array().square() * mu.array()).sum();
}

PairSet adjacent_pairs_1d(long long m) {
  PairSet pairs;
  pairs.rows.reserve(2 * static_cast<std::size_t>(m));
  for (long long i = 0; i + 1 < m; ++i) {
    pairs.rows.emplace_back(static_cast<int>(i), static_cast<int>(i + 1));
    pairs.rows.emplace_back(static_cast<int>(i + 1), static_cast<int>(i));
  }
  return pairs;
}

}  // namespace

QcqpSolution solve_lipschitz_convex_qcqp(const GridModel& grid, double lipschitz_bound,
                                         double eps, const QcqpOptions& options) {
  if (eps <= 0.0 || lipschitz_bound <= 0.0) {
    throw std::invalid_argument("solve_lipschitz_convex_qcqp: need eps > 0, L > 0");
  }
  for (long long i = 0; i < grid.values.size(); ++i) {
    if (!std::isfinite(grid.values[i])) {
      throw std::invalid_argument("solve_lipschitz_convex_qcqp: non-finite grid label");
    }
  }
  const int n = grid.box.dimension;
  const double L = lipschitz_bound;

  // Solve on the support of muhat only. Points of zero (or negligible) mass
  // are objective-free; their values are recovered afterwards from the
  // max-affine extension, which is optimal for them and keeps the full pair
  // set feasible. The slack this introduces is accounted into the gap.
  const double support_floor = 1e-18;
  std::vector<int> support;
  double dropped_mass = 0.0;
  for (long long i = 0; i < grid.size(); ++i) {
    if (grid.masses[i] > support_floor) {
      support.push_back(static_cast<int>(i));
    } else {
      dropped_mass += grid.masses[i];
    }
  }
  const int m = static_cast<int>(support.size());
  Eigen::MatrixXd pts(m, n);
  Eigen::VectorXd mu(m), y(m);
  for (int k = 0; k < m; ++k) {
    pts.row(k) = grid.points.row(support[k]);
    mu[k] = grid.masses[support[k]];
    y[k] = grid.values[support[k]];
  }

  PairSet pairs;
  const bool one_dim = (n == 1);
  if (one_dim) {
    pairs = adjacent_pairs_1d(m);
  } else {
    // Seed with cartesian-order neighbours along the last axis plus each
    // point's nearest few in index space; constraint generation adds the rest.
    for (int i = 0; i + 1 < m; ++i) {
      pairs.rows.emplace_back(i, i + 1);
      pairs.rows.emplace_back(i + 1, i);
    }
  }

  const double gap_target = eps * eps / 100.0;
  const double label_scale = 1.0 + y.cwiseAbs().maxCoeff();
  const double feas_tol = options.feasibility_tol_scale * label_scale;
  // Residual bound used to charge the dropped mass into the reported gap.
  const double value_range =
      2.0 * y.cwiseAbs().maxCoeff() + 2.0 * L * grid.box.radius * std::sqrt(double(n)) + 1.0;
  const double dropped_slack = dropped_mass * value_range * value_range;

  // Work on weights scaled to max 1: balances the objective against the
  // penalty so a rho around 1 is meaningful. All reported values are in the
  // original scale.
  const double mu_scale = mu.maxCoeff();
  const Eigen::VectorXd mu_s = mu / mu_scale;

  Eigen::VectorXd g = y;
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(m, n);
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(static_cast<long long>(pairs.rows.size()));

  QcqpSolution sol;
  long long inner_total = 0;
  std::set<std::pair<int, int>> pair_seen(pairs.rows.begin(), pairs.rows.end());

  double norm_m_sq = operator_norm_sq(pts, pairs, m, n);
  double rho = 1.0 / norm_m_sq;
  double prev_violation = std::numeric_limits<double>::infinity();

  double best_primal = std::numeric_limits<double>::infinity();
  double best_dual = -std::numeric_limits<double>::infinity();
  Feasibilized best_feas;

  Eigen::VectorXd c, w, grad_g(m);
  Eigen::MatrixXd grad_u(m, n);
  Eigen::VectorXd zg = g;
  Eigen::MatrixXd zu = u;

  for (int outer = 0; outer < options.max_outer_iterations; ++outer) {
    sol.outer_iterations = outer + 1;

    // Inner: FISTA on the augmented Lagrangian (scaled weights), exact ball
    // projections; extrapolation point in (zg, zu), O'Donoghue-Candes restart.
    const double step = 1.0 / (2.0 * mu_s.maxCoeff() + rho * norm_m_sq);
    double momentum = 1.0;
    zg = g;
    zu = u;
    const int inner_budget = outer == 0 ? 4 * options.inner_iterations : options.inner_iterations;
    for (int it = 0; it < inner_budget; ++it) {
      ++inner_total;
      eval_constraints(pts, pairs, zg, zu, c);
      w = (lambda + rho * c).cwiseMax(0.0);
      grad_g = 2.0 * mu_s.asDiagonal() * (zg - y);
      grad_u.setZero();
      add_adjoint(pts, pairs, w, grad_g, grad_u);
      Eigen::VectorXd g_new = zg - step * grad_g;
      Eigen::MatrixXd u_new = zu - step * grad_u;
      project_rows_to_ball(u_new, L);
      const bool restart =
          (zg - g_new).dot(g_new - g) + ((zu - u_new).array() * (u_new - u).array()).sum() > 0.0;
      if (restart) {
        momentum = 1.0;
        zg = g_new;
        zu = u_new;
      } else {
        const double momentum_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        const double beta = (momentum - 1.0) / momentum_new;
        zg = g_new + beta * (g_new - g);
        zu = u_new + beta * (u_new - u);
        momentum = momentum_new;
      }
      g = std::move(g_new);
      u = std::move(u_new);
      if (inner_total >= options.max_total_inner_iterations) break;
    }

    eval_constraints(pts, pairs, g, u, c);
    const double violation = pairs.rows.empty() ? 0.0 : std::max(0.0, c.maxCoeff());

    // Multiplier ascent.
    lambda = (lambda + rho * c).cwiseMax(0.0);

    // Certificate: track the best exactly-feasible primal point and the best
    // exact dual value seen (both valid bounds at any iterate).
    Feasibilized feas = feasibilize(pts, g, u, L);
    const double primal = objective_value(mu, y, feas.g);
    if (primal < best_primal) {
      best_primal = primal;
      best_feas = std::move(feas);
    }
    best_dual =
        std::max(best_dual, mu_scale * dual_value(pts, pairs, mu_s, y, L, lambda));
    const double gap = best_primal - best_dual + dropped_slack;

    // Working-set growth: the full-pair violation scan is O(m^2 n), so only
    // run it when the gap certificate is ready or periodically.
    bool clean = true;
    if (!one_dim && (gap <= gap_target || outer % 8 == 7)) {
      std::vector<std::tuple<double, int, int>> found;
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
          if (i == j) continue;
          double cij = g[i] - g[j];
          for (int a = 0; a < n; ++a) cij += u(i, a) * (pts(j, a) - pts(i, a));
          if (cij > feas_tol && !pair_seen.count({i, j})) found.emplace_back(-cij, i, j);
        }
      }
      if (!found.empty()) {
        clean = false;
        std::sort(found.begin(), found.end());
        const std::size_t add =
            std::min<std::size_t>(found.size(), 4 * static_cast<std::size_t>(m));
        Eigen::VectorXd lambda_new(lambda.size() + static_cast<long long>(add));
        lambda_new.head(lambda.size()) = lambda;
        lambda_new.tail(static_cast<long long>(add)).setZero();
        for (std::size_t k = 0; k < add; ++k) {
          const auto& [neg, i, j] = found[k];
          pairs.rows.emplace_back(i, j);
          pair_seen.insert({i, j});
        }
        lambda = std::move(lambda_new);
        norm_m_sq = operator_norm_sq(pts, pairs, m, n);
        // The dual bound for the enlarged constraint set stays valid: the new
        // multipliers enter at zero.
      }
    }

    if (std::getenv("QCQP_DEBUG")) {
      std::fprintf(stderr,
                   "outer=%d rho=%.3g viol=%.3g primal=%.6g dual=%.6g gap=%.3g lam_max=%.3g\n",
                   outer, rho, violation, best_primal, best_dual, gap,
                   lambda.size() ? lambda.maxCoeff() : 0.0);
    }
    if (clean && gap <= gap_target) {
      sol.converged = true;
      break;
    }
    if (inner_total >= options.max_total_inner_iterations) break;

    if (violation > 0.6 * prev_violation && violation > feas_tol) rho = std::min(rho * 4.0, 1e12);
    prev_violation = violation;
  }

  sol.inner_iterations = inner_total;
  sol.g_hat = best_feas.g;
  sol.u_hat = best_feas.u;
  sol.objective = best_primal;
  sol.duality_gap = best_primal - best_dual + dropped_slack;
  if (!sol.converged && !options.return_best_on_cap) {
    throw SolverError("solve_lipschitz_convex_qcqp: iteration cap hit with gap " +
                      std::to_string(sol.duality_gap) + " > target " +
                      std::to_string(gap_target));
  }

  // Recover dropped (zero-mass) grid points from the extension of the support
  // solution, then report residuals of the full-grid point.
  Eigen::VectorXd g_full(grid.size());
  Eigen::MatrixXd u_full(grid.size(), n);
  {
    Eigen::VectorXd intercepts(m);
    for (int k = 0; k < m; ++k) intercepts[k] = sol.g_hat[k] - sol.u_hat.row(k).dot(pts.row(k));
    MaxAffineFunction fn{sol.u_hat, intercepts, L * (1.0 + 1e-12)};
    std::vector<char> on_support(grid.size(), 0);
    for (int k = 0; k < m; ++k) {
      g_full[support[k]] = sol.g_hat[k];
      u_full.row(support[k]) = sol.u_hat.row(k);
      on_support[support[k]] = 1;
    }
    for (long long i = 0; i < grid.size(); ++i) {
      if (on_support[i]) continue;
      const Point x = grid.points.row(i).transpose();
      const int k = fn.argmax_piece(x);
      g_full[i] = sol.u_hat.row(k).dot(x) + intercepts[k];
      u_full.row(i) = sol.u_hat.row(k);
    }
  }
  sol.g_hat = std::move(g_full);
  sol.u_hat = std::move(u_full);

  // Residuals of the returned point. At n = 1 the adjacent set implies every
  // pair; otherwise scan all pairs (grids this path sees are small).
  double max_norm_violation = 0.0;
  for (long long i = 0; i < grid.size(); ++i) {
    max_norm_violation =
        std::max(max_norm_violation, sol.u_hat.row(i).squaredNorm() - L * L);
  }
  sol.max_norm_violation = std::max(0.0, max_norm_violation);
  double max_affine = 0.0;
  if (one_dim) {
    for (long long i = 0; i + 1 < grid.size(); ++i) {
      for (int dir = 0; dir < 2; ++dir) {
        const long long a = dir ? i + 1 : i;
        const long long b = dir ? i : i + 1;
        const double cab = sol.g_hat[a] - sol.g_hat[b] +
                           sol.u_hat(a, 0) * (grid.points(b, 0) - grid.points(a, 0));
        max_affine = std::max(max_affine, cab);
      }
    }
  } else {
    for (long long i = 0; i < grid.size(); ++i) {
      for (long long j = 0; j < grid.size(); ++j) {
        if (i == j) continue;
        double cij = sol.g_hat[i] - sol.g_hat[j];
        for (int a = 0; a < n; ++a) cij += sol.u_hat(i, a) * (grid.points(j, a) - grid.points(i, a));
        max_affine = std::max(max_affine, cij);
      }
    }
  }
  sol.max_affine_violation = std::max(0.0, max_affine);
  return sol;
}

MaxAffineFunction extend_max_affine(const QcqpSolution& sol, const GridModel& grid,
                                    double lipschitz_bound) {
  const long long m = grid.size();
  Eigen::VectorXd intercepts(m);
  for (long long i = 0; i < m; ++i) {
    intercepts[i] = sol.g_hat[i] - sol.u_hat.row(i).dot(grid.points.row(i));
  }
  return MaxAffineFunction(sol.u_hat, intercepts, lipschitz_bound);
}

// ---------------------------------------------------------------------------
// d_conv oracle
// ---------------------------------------------------------------------------

namespace {

// Tail of |z| moments outside [-r, r]: E[z^2 1_{|z|>r}] = 2 (r phi(r) + 1 - Phi(r)).
double gaussian_t2(double r) {
  const double phi_r = std::exp(-0.5 * r * r) / std::sqrt(2.0 * 3.14159265358979323846);
  return 2.0 * (r * phi_r + 1.0 - normal_cdf(r));
}

// Distance error of restricting L2(gamma) to the conditioned box, for
// differences h = f - g with |h(0)| <= tau and Lipschitz constant l_h.
double box_tail_distance_bound(double r, int n, double tau, double l_h) {
  const double q = 1.0 - normal_cdf(r);      // one-sided coordinate tail
  const double p_out = std::min(1.0, 2.0 * n * q);
  const double sup_h = tau + 2.0 * l_h * r * std::sqrt(static_cast<double>(n));
  const double int_x2 =
      n * gaussian_t2(r) + static_cast<double>(n) * (n - 1) * 2.0 * q;
  const double outside_sq = 2.0 * tau * tau * p_out + 2.0 * l_h * l_h * int_x2;
  const double conditioning_sq = p_out * sup_h * sup_h;
  return std::sqrt(outside_sq) + std::sqrt(conditioning_sq);
}

}  // namespace

DconvOracleResult oracle_dconv_detailed(const FunctionOracle& f, double lipschitz_bound,
                                        double eps_oracle, const GridLimits& limits) {
  if (f.dimension > 2) {
    throw ResourceError("oracle_dconv: resource guard allows n <= 2 only");
  }
  if (eps_oracle <= 0.0) throw std::invalid_argument("oracle_dconv: eps_oracle must be > 0");
  const int n = f.dimension;
  const double L = lipschitz_bound;

  // tau bounds |f(0) - g(0)| over candidate minimizers g (those at least as
  // close as g = 0), via a Monte-Carlo estimate of ||f||.
  RngStream tau_rng(20240901u, 3);
  double norm_sq = 0.0;
  const int tau_samples = 20000;
  for (int i = 0; i < tau_samples; ++i) {
    const Point x = sample_gaussian(n, tau_rng);
    const double v = f.evaluator(x);
    norm_sq += v * v;
  }
  const double l_h = f.lipschitz_bound + L;
  const double tau = 2.0 * std::sqrt(norm_sq / tau_samples) + std::abs(f.evaluator(Point::Zero(n))) +
                     l_h * (std::sqrt(static_cast<double>(n)) + 3.0);

  double r = 1.0;
  while (box_tail_distance_bound(r, n, tau, l_h) > eps_oracle / 10.0 && r < 40.0) r += 0.25;

  GridModel grid = build_grid(Box(r, n), L, eps_oracle / 2.0, limits);  // spacing eps/(20 L sqrt n)
  cell_masses(grid);
  label_grid(grid, f.evaluator);

  QcqpOptions qopt;
  QcqpSolution sol = solve_lipschitz_convex_qcqp(grid, L, eps_oracle, qopt);

  DconvOracleResult out;
  out.value = std::sqrt(std::max(0.0, sol.objective));
  out.radius = r;
  out.spacing = grid.spacing;
  out.grid_points = grid.size();
  out.discretization_budget = eps_oracle / 10.0;  // Claim-muhat slack at this spacing
  out.tail_budget = box_tail_distance_bound(r, n, tau, l_h);
  out.solver_budget = std::sqrt(sol.duality_gap);
  out.eps_oracle = eps_oracle;
  return out;
}

double oracle_dconv(const FunctionOracle& f, double lipschitz_bound, double eps_oracle,
                    const GridLimits& limits) {
  return oracle_dconv_detailed(f, lipschitz_bound, eps_oracle, limits).value;
}

std::string grid_diagnostics_csv(const GridModel& grid, const QcqpSolution& sol) {
  std::ostringstream out;
  const int n = grid.box.dimension;
  for (int a = 0; a < n; ++a) out << "x_" << (a + 1) << ",";
  out << "mass,g,g_hat\n";
  for (long long i = 0; i < grid.size(); ++i) {
    for (int a = 0; a < n; ++a) out << format_17g(grid.points(i, a)) << ",";
    out << format_17g(grid.masses[i]) << "," << format_17g(grid.values[i]) << ","
        << format_17g(sol.g_hat[i]) << "\n";
  }
  return out.str();
}

}  // namespace convexlab
