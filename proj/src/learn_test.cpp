#include "convexlab/learn_test.hpp"

#include <chrono>
#include <cmath>

namespace convexlab {

namespace {

class StageTimer {
 public:
  explicit StageTimer(std::map<std::string, double>& sink) : sink_(sink) {}
  void lap(const std::string& name) {
    const auto now = clock_type::now();
    sink_[name] = std::chrono::duration<double>(now - last_).count();
    last_ = now;
  }

 private:
  using clock_type = std::chrono::steady_clock;
  std::map<std::string, double>& sink_;
  clock_type::time_point last_ = clock_type::now();
};

MaxAffineFunction constant_hypothesis(int n, double value, double lipschitz_bound) {
  return MaxAffineFunction(Eigen::MatrixXd::Zero(1, n), Eigen::VectorXd::Constant(1, value),
                           lipschitz_bound);
}

}  // namespace

double LearnerConfig::radius() const {
  const double arg = std::max(2.0, dimension * lipschitz_bound / eps);
  return c_r * (lipschitz_bound / eps) * std::sqrt(std::log(arg));
}

double LearnerConfig::log_lipschitz_prime() const {
  const int d = degree();
  return std::log(2.0 * lipschitz_bound) +
         2.0 * d * std::log(2.0 * dimension * static_cast<double>(d) * radius());
}

void LearnerConfig::validate() const {
  if (lipschitz_bound <= 0.0) throw std::invalid_argument("LearnerConfig: L must be > 0");
  if (eps <= 0.0) throw std::invalid_argument("LearnerConfig: eps must be > 0");
  if (delta <= 0.0 || delta >= 1.0) throw std::invalid_argument("LearnerConfig: delta in (0,1)");
  if (dimension < 1) throw std::invalid_argument("LearnerConfig: dimension must be >= 1");
}

AgnosticLearnResult agnostic_learn_detailed(const FunctionOracle& f, const LearnerConfig& cfg,
                                            RngStream& rng) {
  cfg.validate();
  if (f.dimension != cfg.dimension) {
    throw std::invalid_argument("agnostic_learn: oracle dimension != config dimension");
  }
  const double L = cfg.lipschitz_bound;
  LearnDiagnostics diag;
  StageTimer timer(diag.stage_seconds);

  // (i) mean pre-centering to eps/100.
  RngStream mean_rng = rng.fork(1);
  const MeanEstimate mean =
      estimate_mean_capped(f, cfg.eps / 100.0, cfg.mean_sample_cap, mean_rng);
  diag.mean_estimate = mean.value;
  diag.mean_capped = mean.capped;
  diag.samples_used += mean.samples_used;
  timer.lap("center");

  // (ii) trivial regime: the centered function is already within eps of zero.
  if (cfg.trivial_regime()) {
    diag.trivial_exit = true;
    return {constant_hypothesis(cfg.dimension, mean.value, L), diag};
  }

  FunctionOracle centered = f;
  {
    auto base = f.evaluator;
    const double shift = mean.value;
    centered.evaluator = [base, shift](const Point& x) { return base(x) - shift; };
  }

  // (iii) low-degree expansion at accuracy eps' = eps/8.
  diag.degree = cfg.degree();
  diag.radius = cfg.radius();
  diag.log_lipschitz_prime = cfg.log_lipschitz_prime();
  RngStream learn_rng = rng.fork(2);
  const LearnExpansionReport expansion = learn_expansion_detailed(
      centered, diag.degree, cfg.eps_prime(), cfg.delta, learn_rng, cfg.learn_options);
  diag.samples_used += expansion.samples_used;
  diag.budget_capped = expansion.budget_capped;
  diag.coefficients_estimated = expansion.coefficients_estimated;
  diag.coefficients_skipped = expansion.coefficients_skipped;
  timer.lap("regression");

  // (iv) grid QCQP over B_inf(r): class bound L on the subgradients; L' only
  // sizes r (kept as a log-space diagnostic).
  GridModel grid = build_grid(Box(diag.radius, cfg.dimension), L, cfg.eps_prime(),
                              cfg.grid_limits);
  cell_masses(grid);
  label_grid(grid, [&expansion](const Point& x) { return eval_expansion(expansion.expansion, x); });
  diag.grid_points = grid.size();
  timer.lap("grid");

  QcqpOptions qcqp_options = cfg.qcqp_options;
  qcqp_options.return_best_on_cap = true;  // properness is hard, success probability is not
  const QcqpSolution sol = solve_lipschitz_convex_qcqp(grid, L, cfg.eps_prime(), qcqp_options);
  diag.solver_converged = sol.converged;
  diag.qcqp_gap = sol.duality_gap;
  diag.qcqp_affine_residual = sol.max_affine_violation;
  diag.qcqp_norm_residual = sol.max_norm_violation;
  diag.qcqp_inner_iterations = sol.inner_iterations;
  timer.lap("qcqp");

  // (v) extension, (vi) mean shift-back.
  MaxAffineFunction hypothesis = extend_max_affine(sol, grid, L);
  hypothesis.shift(mean.value);
  timer.lap("extend");
  return {std::move(hypothesis), diag};
}

MaxAffineFunction agnostic_learn(const FunctionOracle& f, const LearnerConfig& cfg,
                                 RngStream& rng) {
  return agnostic_learn_detailed(f, cfg, rng).hypothesis;
}

double distance_statistic(const FunctionOracle& f, const MaxAffineFunction& g, long long m,
                          RngStream& rng) {
  if (m < 1) throw std::invalid_argument("distance_statistic: m must be >= 1");
  double acc = 0.0;
  for (long long i = 0; i < m; ++i) {
    const LabeledSample s = draw_one(f, rng);
    const double d = s.value - g(s.point);
    acc += d * d;
  }
  return acc / static_cast<double>(m);
}

long long tolerant_sample_count(double lipschitz_bound, double eps) {
  const double L4 = std::pow(lipschitz_bound, 4);
  return static_cast<long long>(std::ceil(2560.0 * L4 / std::pow(eps, 4)));
}

TestVerdict tolerant_test(const FunctionOracle& f, double lipschitz_bound, double eps,
                          double eps0, RngStream& rng, const TolerantTestOptions& options) {
  if (eps <= 0.0 || eps0 < 0.0) {
    throw std::invalid_argument("tolerant_test: need eps > 0, eps0 >= 0");
  }
  TestVerdict verdict;
  verdict.threshold = (eps0 + eps / 2.0) * (eps0 + eps / 2.0);

  // d_conv <= sqrt(Var f) <= L always, so eps > L accepts outright.
  if (eps > lipschitz_bound) {
    verdict.accept = true;
    verdict.diagnostics["mode"] = "immediate_accept_eps_above_L";
    return verdict;
  }

  const int reps = options.repetitions | 1;
  const long long m = tolerant_sample_count(lipschitz_bound, eps);
  LearnerConfig cfg = options.base_config;
  cfg.lipschitz_bound = lipschitz_bound;
  cfg.eps = eps / 4.0;
  cfg.dimension = f.dimension;

  int accepts = 0;
  std::vector<double> statistics;
  long long samples = 0;
  for (int k = 0; k < reps; ++k) {
    RngStream rep_rng = rng.fork(10 + static_cast<std::uint64_t>(k));
    RngStream learner_rng = rep_rng.fork(1);
    const AgnosticLearnResult learned = agnostic_learn_detailed(f, cfg, learner_rng);
    samples += learned.diagnostics.samples_used;
    RngStream stat_rng = rep_rng.fork(2);
    const double y_stat = distance_statistic(f, learned.hypothesis, m, stat_rng);
    samples += m;
    statistics.push_back(y_stat);
    if (y_stat <= verdict.threshold) ++accepts;
  }
  std::sort(statistics.begin(), statistics.end());
  verdict.statistic = statistics[statistics.size() / 2];  // median run
  verdict.accept = accepts * 2 > reps;
  verdict.samples_used = samples;
  verdict.diagnostics["repetitions"] = std::to_string(reps);
  verdict.diagnostics["m_per_repetition"] = std::to_string(m);
  verdict.diagnostics["accepting_runs"] = std::to_string(accepts);
  return verdict;
}

}  // namespace convexlab
