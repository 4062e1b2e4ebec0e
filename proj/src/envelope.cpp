#include "convexlab/envelope.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace convexlab {

CeceSolver::CeceSolver(AnchorSet anchors) : anchors_(std::move(anchors)) {
  if (anchors_.size() < 1) throw std::invalid_argument("CeceSolver: need at least one anchor");
  if (anchors_.lipschitz_bound <= 0.0) throw std::invalid_argument("CeceSolver: need L > 0");
  if (anchors_.dimension() > 4) {
    throw ResourceError("CeceSolver: active-set enumeration is limited to n <= 4");
  }
}

namespace {

struct Candidate {
  Eigen::VectorXd z;  // (p, a)
  double value = -std::numeric_limits<double>::infinity();
  bool valid = false;
};

// Exact maximization of c.z over { A_S z = b_S } intersected with the slab
// ||P z|| <= L, where P picks the first n coordinates. Candidates come from
// the sphere-active branch and, when the objective is constant on the face,
// the minimum-norm point of the face.
void face_candidates(const Eigen::MatrixXd& a_rows, const Eigen::VectorXd& b_rows, int n,
                     const Eigen::VectorXd& c, double radius, std::vector<Candidate>& out) {
  const int cols = n + 1;
  const int k = static_cast<int>(a_rows.rows());
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a_rows);
  qr.setThreshold(1e-10);
  if (qr.rank() < k) return;  // dependent rows; covered by smaller subsets

  const Eigen::VectorXd z0 = qr.solve(b_rows);
  if (k == cols) {
    Candidate cand;
    cand.z = z0;
    cand.value = c.dot(z0);
    cand.valid = true;
    out.push_back(std::move(cand));
    return;
  }

  // Nullspace basis of A_S via full QR of A_S^T.
  Eigen::HouseholderQR<Eigen::MatrixXd> qrt(a_rows.transpose());
  const Eigen::MatrixXd q_full = qrt.householderQ();
  const Eigen::MatrixXd null_basis = q_full.rightCols(cols - k);  // (n+1) x q

  const Eigen::MatrixXd b_mat = null_basis.topRows(n);  // P N, full column rank
  const Eigen::VectorXd w0 = z0.head(n);
  const Eigen::VectorXd cn = null_basis.transpose() * c;

  // Objective constant on the face: report its min-||p|| point if inside.
  if (cn.norm() <= 1e-12 * (1.0 + c.norm())) {
    const Eigen::VectorXd t =
        b_mat.colPivHouseholderQr().solve(-w0);  // least squares: closest p to 0
    Candidate cand;
    cand.z = z0 + null_basis * t;
    cand.value = c.dot(cand.z);
    cand.valid = cand.z.head(n).norm() <= radius * (1.0 + 1e-12);
    if (cand.valid) out.push_back(std::move(cand));
    return;
  }

  // Sphere-active branch: ||w0 + B t|| = radius.
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qrb(b_mat);
  qrb.setThreshold(1e-12);
  if (qrb.rank() < b_mat.cols()) return;  // cannot happen for independent rows; guard anyway
  const Eigen::VectorXd t_par = qrb.solve(-w0);
  const Eigen::VectorXd w_perp = w0 + b_mat * t_par;  // component outside col(B)
  const double rho_sq = radius * radius - w_perp.squaredNorm();
  if (rho_sq < -1e-14 * radius * radius) return;
  const double rho = std::sqrt(std::max(0.0, rho_sq));

  // Maximize (B^+T cn).v over ||v|| = rho in col(B).
  const Eigen::MatrixXd gram = b_mat.transpose() * b_mat;
  const Eigen::VectorXd q_vec = b_mat * gram.ldlt().solve(cn);  // in col(B)
  Eigen::VectorXd v_star;
  if (q_vec.norm() > 1e-14 * (1.0 + cn.norm())) {
    v_star = rho * q_vec / q_vec.norm();
  } else if (rho > 0.0) {
    v_star = rho * b_mat.col(0) / b_mat.col(0).norm();
  } else {
    v_star = Eigen::VectorXd::Zero(n);
  }
  const Eigen::VectorXd t_star = t_par + qrb.solve(v_star);
  Candidate cand;
  cand.z = z0 + null_basis * t_star;
  cand.value = c.dot(cand.z);
  cand.valid = true;
  out.push_back(std::move(cand));
}

// Enumerate nonempty subsets of the working set with size <= n+1.
void enumerate_subsets(int count, int max_size, std::vector<std::vector<int>>& subsets) {
  std::vector<int> cur;
  std::function<void(int)> rec = [&](int start) {
    if (!cur.empty()) subsets.push_back(cur);
    if (static_cast<int>(cur.size()) == max_size) return;
    for (int i = start; i < count; ++i) {
      cur.push_back(i);
      rec(i + 1);
      cur.pop_back();
    }
  };
  rec(0);
}

}  // namespace

EnvelopeQuery CeceSolver::solve_with_rounds(const Point& x, int max_rounds) const {
  const int n = anchors_.dimension();
  const long long m = anchors_.size();
  const double radius = anchors_.lipschitz_bound;
  const double scale = 1.0 + anchors_.values.cwiseAbs().maxCoeff();
  const double feas_tol = 1e-9 * scale;

  Eigen::VectorXd c(n + 1);
  c.head(n) = x;
  c[n] = 1.0;

  // Seed the working set: the smallest label (active at p = 0) plus the n+1
  // anchors nearest the query.
  if (working_set_.empty()) {
    Eigen::Index min_i = 0;
    anchors_.values.minCoeff(&min_i);
    working_set_.push_back(static_cast<int>(min_i));
  }
  {
    std::vector<std::pair<double, int>> near;
    near.reserve(m);
    for (long long i = 0; i < m; ++i) {
      near.emplace_back((anchors_.points.row(i).transpose() - x).squaredNorm(),
                        static_cast<int>(i));
    }
    const std::size_t want = std::min<std::size_t>(near.size(), n + 2);
    std::partial_sort(near.begin(), near.begin() + want, near.end());
    for (std::size_t k = 0; k < want; ++k) {
      if (std::find(working_set_.begin(), working_set_.end(), near[k].second) ==
          working_set_.end()) {
        working_set_.push_back(near[k].second);
      }
    }
  }

  EnvelopeQuery result;
  result.x = x;
  result.status = CeceStatus::numerical_failure;

  for (int round = 0; round < max_rounds; ++round) {
    result.rounds = round + 1;

    // Exact subproblem over the working set W: enumerate candidate active
    // subsets, keep the best W-feasible point.
    const int wsize = static_cast<int>(working_set_.size());
    std::vector<std::vector<int>> subsets;
    enumerate_subsets(wsize, n + 1, subsets);

    Candidate best;
    for (const auto& subset : subsets) {
      Eigen::MatrixXd a_rows(subset.size(), n + 1);
      Eigen::VectorXd b_rows(subset.size());
      for (std::size_t r = 0; r < subset.size(); ++r) {
        const int idx = working_set_[subset[r]];
        a_rows.row(static_cast<long long>(r)).head(n) = anchors_.points.row(idx);
        a_rows(static_cast<long long>(r), n) = 1.0;
        b_rows[static_cast<long long>(r)] = anchors_.values[idx];
      }
      std::vector<Candidate> cands;
      face_candidates(a_rows, b_rows, n, c, radius, cands);
      for (Candidate& cand : cands) {
        if (!cand.valid || cand.value <= best.value) continue;
        if (cand.z.head(n).norm() > radius * (1.0 + 1e-9)) continue;
        bool feasible = true;
        for (int wi : working_set_) {
          const double slack = anchors_.points.row(wi).dot(cand.z.head(n)) + cand.z[n] -
                               anchors_.values[wi];
          if (slack > feas_tol) {
            feasible = false;
            break;
          }
        }
        if (feasible) best = std::move(cand);
      }
    }
    if (!std::isfinite(best.value)) return result;  // numerical failure

    // Full scan: feasible for every anchor means the relaxation optimum is
    // the true optimum.
    double worst = 0.0;
    int worst_idx = -1;
    for (long long i = 0; i < m; ++i) {
      const double slack =
          anchors_.points.row(i).dot(best.z.head(n)) + best.z[n] - anchors_.values[i];
      if (slack > worst) {
        worst = slack;
        worst_idx = static_cast<int>(i);
      }
    }
    if (worst <= feas_tol) {
      result.value = best.value;
      result.argmax_slope = best.z.head(n);
      result.argmax_intercept = best.z[n];
      result.status = CeceStatus::optimal;

      // Shrink the carried working set to rows active at the optimum (plus
      // slack headroom for the next query).
      std::vector<int> active;
      for (int wi : working_set_) {
        const double slack = anchors_.points.row(wi).dot(best.z.head(n)) + best.z[n] -
                             anchors_.values[wi];
        if (slack > -1e-7 * scale) active.push_back(wi);
      }
      if (!active.empty() && active.size() <= 24) working_set_ = std::move(active);
      if (working_set_.size() > 24) working_set_.resize(24);
      return result;
    }
    working_set_.push_back(worst_idx);
    if (static_cast<int>(working_set_.size()) > 2 * (n + 2) + 8) {
      // Drop rows slack at the current candidate, keep the newest violator.
      std::vector<int> keep;
      for (int wi : working_set_) {
        const double slack = anchors_.points.row(wi).dot(best.z.head(n)) + best.z[n] -
                             anchors_.values[wi];
        if (slack > -1e-6 * scale || wi == worst_idx) keep.push_back(wi);
      }
      if (static_cast<int>(keep.size()) >= n + 1) working_set_ = std::move(keep);
    }
  }
  return result;
}

EnvelopeQuery CeceSolver::solve(const Point& x) const {
  if (x.size() != anchors_.dimension()) {
    throw std::invalid_argument("CeceSolver::solve: dimension mismatch");
  }
  EnvelopeQuery q = solve_with_rounds(x, 120);
  if (q.status != CeceStatus::optimal) {
    working_set_.clear();  // tightened retry from a fresh working set
    q = solve_with_rounds(x, 400);
  }
  return q;
}

EnvelopeQuery cece(const AnchorSet& anchors, const Point& x) {
  return CeceSolver(anchors).solve(x);
}

// ---------------------------------------------------------------------------
// Coverage
// ---------------------------------------------------------------------------

CoverageReport coverage_check(const std::vector<Point>& samples, double lipschitz_bound,
                              double eps, int n, const CoverageLimits& limits) {
  if (eps <= 0.0 || lipschitz_bound <= 0.0 || n < 1) {
    throw std::invalid_argument("coverage_check: need eps > 0, L > 0, n >= 1");
  }
  const double root_n = std::sqrt(static_cast<double>(n));
  const double ball_radius = 1.1 * root_n;
  const double ell = eps / (4.0 * lipschitz_bound * root_n);
  const long long per_axis = static_cast<long long>(std::ceil(2.0 * ball_radius / ell));

  double total_d = 1.0;
  for (int a = 0; a < n; ++a) total_d *= static_cast<double>(per_axis);
  if (total_d > static_cast<double>(limits.max_cubes)) {
    throw ResourceError("coverage_check: cube grid of ~" + std::to_string(total_d) +
                        " exceeds the cap of " + std::to_string(limits.max_cubes));
  }
  const long long total = static_cast<long long>(total_d);

  std::vector<char> occupied(static_cast<std::size_t>(total), 0);
  const auto flat_index = [&](const std::vector<int>& cell) {
    long long f = 0;
    for (int a = 0; a < n; ++a) f = f * per_axis + cell[a];
    return f;
  };

  std::vector<int> cell(n);
  for (const Point& x : samples) {
    if (x.norm() > ball_radius) continue;
    for (int a = 0; a < n; ++a) {
      const long long k = static_cast<long long>(std::floor((x[a] + ball_radius) / ell));
      cell[a] = static_cast<int>(std::clamp<long long>(k, 0, per_axis - 1));
    }
    occupied[static_cast<std::size_t>(flat_index(cell))] = 1;
  }

  CoverageReport report;
  report.cell_side = ell;
  report.covered = true;

  std::vector<int> idx(n, 0);
  for (long long flat = 0; flat < total; ++flat) {
    // Nearest-point distance from the cube to the origin.
    double dist_sq = 0.0;
    for (int a = 0; a < n; ++a) {
      const double lo = -ball_radius + idx[a] * ell;
      const double hi = lo + ell;
      const double nearest = std::clamp(0.0, lo, hi);
      dist_sq += nearest * nearest;
    }
    const bool intersects = dist_sq <= ball_radius * ball_radius;
    if (intersects) {
      ++report.cube_count;
      if (!occupied[static_cast<std::size_t>(flat)] && report.covered) {
        report.covered = false;
        report.empty_cell_witness = idx;
        report.witness_nearest_norm = std::sqrt(dist_sq);
      }
    }
    for (int a = n - 1; a >= 0; --a) {
      if (++idx[a] < per_axis) break;
      idx[a] = 0;
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// One-sided tester
// ---------------------------------------------------------------------------

TestVerdict one_sided_test(const FunctionOracle& f, double lipschitz_bound, double eps,
                           RngStream& rng, const OneSidedOptions& options) {
  if (eps <= 0.0) throw std::invalid_argument("one_sided_test: eps must be > 0");
  const int n = f.dimension;
  const double root_n = std::sqrt(static_cast<double>(n));

  const double t1_d =
      std::pow(options.c_constant * lipschitz_bound * root_n / eps, static_cast<double>(n));
  if (t1_d > static_cast<double>(options.max_samples)) {
    throw ResourceError("one_sided_test: t1 ~" + std::to_string(t1_d) +
                        " exceeds the sample cap " + std::to_string(options.max_samples));
  }
  const long long t1 = std::max<long long>(1, static_cast<long long>(std::llround(t1_d)));

  TestVerdict verdict;
  verdict.threshold = eps / 2.0;
  verdict.diagnostics["t1"] = std::to_string(t1);

  RngStream anchor_rng = rng.fork(1);
  const std::vector<LabeledSample> anchors_raw = draw_labeled(f, t1, anchor_rng);
  verdict.samples_used += t1;

  std::vector<Point> anchor_points;
  anchor_points.reserve(anchors_raw.size());
  for (const auto& s : anchors_raw) anchor_points.push_back(s.point);
  const CoverageReport coverage =
      coverage_check(anchor_points, lipschitz_bound, eps, n, options.coverage_limits);
  verdict.diagnostics["covered"] = coverage.covered ? "true" : "false";
  verdict.diagnostics["cube_count"] = std::to_string(coverage.cube_count);
  if (!coverage.covered) {
    verdict.accept = true;  // vacuous accept is the Algorithm-1 branch
    verdict.diagnostics["mode"] = "accept_on_uncovered";
    return verdict;
  }

  AnchorSet anchors;
  anchors.points.resize(static_cast<long long>(anchors_raw.size()), n);
  anchors.values.resize(static_cast<long long>(anchors_raw.size()));
  for (std::size_t i = 0; i < anchors_raw.size(); ++i) {
    anchors.points.row(static_cast<long long>(i)) = anchors_raw[i].point.transpose();
    anchors.values[static_cast<long long>(i)] = anchors_raw[i].value;
  }
  anchors.lipschitz_bound = lipschitz_bound;
  CeceSolver solver(std::move(anchors));

  const long long t2 = static_cast<long long>(std::ceil(5.0 / std::pow(eps, 4)));
  RngStream query_rng = rng.fork(2);
  const std::vector<LabeledSample> queries = draw_labeled(f, t2, query_rng);
  verdict.samples_used += t2;
  verdict.diagnostics["t2"] = std::to_string(t2);

  long long in_ball = 0;
  double worst_residual = 0.0;
  for (const LabeledSample& q : queries) {
    if (q.point.norm() > 1.1 * root_n) continue;
    ++in_ball;
    const EnvelopeQuery env = solver.solve(q.point);
    if (env.status != CeceStatus::optimal) {
      verdict.accept = false;
      verdict.diagnostics["mode"] = "reject_on_numerical_failure";
      return verdict;
    }
    const double residual = std::abs(q.value - env.value);
    worst_residual = std::max(worst_residual, residual);
    if (residual >= eps / 2.0) {
      verdict.accept = false;
      verdict.statistic = residual;
      verdict.diagnostics["mode"] = "reject_on_residual";
      std::string witness = "(";
      for (int a = 0; a < n; ++a) witness += (a ? "," : "") + std::to_string(q.point[a]);
      verdict.diagnostics["witness"] = witness + ")";
      return verdict;
    }
  }
  verdict.accept = true;
  verdict.statistic = worst_residual;
  verdict.diagnostics["mode"] = "accept_after_residual_scan";
  verdict.diagnostics["queries_in_ball"] = std::to_string(in_ball);
  return verdict;
}

std::vector<double> envelope_residual_scan(const AnchorSet& anchors, const FunctionOracle& f,
                                           const std::vector<Point>& queries) {
  CeceSolver solver(anchors);
  std::vector<double> out;
  out.reserve(queries.size());
  for (const Point& x : queries) {
    const EnvelopeQuery env = solver.solve(x);
    out.push_back(std::abs(f.evaluator(x) - env.value));
  }
  return out;
}

}  // namespace convexlab
