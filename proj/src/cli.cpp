#include "convexlab/cli.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "convexlab/spectrum.hpp"

namespace convexlab {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json config_echo(const RunConfig& c) {
  ordered_json j;
  j["subcommand"] = c.subcommand;
  j["function"] = c.function_spec;
  j["n"] = c.dimension;
  j["L"] = c.lipschitz_bound;
  j["eps"] = c.eps;
  j["eps0"] = c.eps0;
  j["xi"] = c.xi;
  j["delta"] = c.delta;
  j["c_constant"] = c.c_constant;
  j["seed"] = c.seed;
  j["repetitions"] = c.repetitions;
  j["max_samples_cap"] = c.max_samples_cap;
  j["max_grid_points"] = c.max_grid_points;
  j["learn_sample_cap"] = c.learn_sample_cap;
  return j;
}

ordered_json verdict_json(const TestVerdict& v) {
  ordered_json j;
  j["verdict"] = v.verdict();
  j["statistic"] = v.statistic;
  j["threshold"] = v.threshold;
  j["samples_used"] = v.samples_used;
  for (const auto& [k, val] : v.diagnostics) j["diagnostics"][k] = val;
  return j;
}

std::uint64_t resolve_seed(const RunConfig& c) {
  if (c.seed_given) return c.seed;
  if (const char* env = std::getenv("CONVEXLAB_SEED")) {
    return static_cast<std::uint64_t>(std::strtoull(env, nullptr, 10));
  }
  return 0;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open output path: " + path);
  out << text;
}

LearnerConfig learner_config(const RunConfig& c) {
  LearnerConfig cfg;
  cfg.lipschitz_bound = c.lipschitz_bound;
  cfg.eps = c.eps;
  cfg.dimension = c.dimension;
  cfg.grid_limits.max_points = c.max_grid_points;
  cfg.learn_options.max_samples_per_coefficient = c.learn_sample_cap;
  return cfg;
}

ordered_json learn_diag_json(const LearnDiagnostics& d) {
  ordered_json j;
  j["samples_used"] = d.samples_used;
  j["mean_estimate"] = d.mean_estimate;
  j["mean_capped"] = d.mean_capped;
  j["trivial_exit"] = d.trivial_exit;
  j["budget_capped"] = d.budget_capped;
  j["solver_converged"] = d.solver_converged;
  j["degree"] = d.degree;
  j["radius"] = d.radius;
  j["log_lipschitz_prime"] = d.log_lipschitz_prime;
  j["grid_points"] = d.grid_points;
  j["qcqp_gap"] = d.qcqp_gap;
  j["qcqp_affine_residual"] = d.qcqp_affine_residual;
  j["qcqp_norm_residual"] = d.qcqp_norm_residual;
  j["qcqp_inner_iterations"] = d.qcqp_inner_iterations;
  j["coefficients_estimated"] = d.coefficients_estimated;
  j["coefficients_skipped"] = d.coefficients_skipped;
  for (const auto& [k, v] : d.stage_seconds) j["stage_seconds"][k] = v;
  return j;
}

}  // namespace

std::string samples_to_csv(const std::vector<LabeledSample>& samples) {
  std::ostringstream out;
  if (samples.empty()) return "";
  const int n = static_cast<int>(samples.front().point.size());
  for (int a = 0; a < n; ++a) out << "x_" << (a + 1) << ",";
  out << "f\n";
  out.precision(17);
  for (const auto& s : samples) {
    for (int a = 0; a < n; ++a) out << s.point[a] << ",";
    out << s.value << "\n";
  }
  return out.str();
}

namespace {

std::vector<std::vector<double>> parse_csv_rows(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    // Header lines are detected by a non-numeric first token.
    std::vector<double> row;
    std::stringstream ls(line);
    std::string tok;
    bool numeric = true;
    while (std::getline(ls, tok, ',')) {
      try {
        std::size_t pos = 0;
        row.push_back(std::stod(tok, &pos));
        if (pos != tok.size()) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
      if (!numeric) break;
    }
    if (numeric && !row.empty()) rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

AnchorSet anchors_from_csv(const std::string& csv_text, double lipschitz_bound) {
  const auto rows = parse_csv_rows(csv_text);
  if (rows.empty()) throw std::invalid_argument("anchors CSV has no data rows");
  const int n = static_cast<int>(rows.front().size()) - 1;
  if (n < 1) throw std::invalid_argument("anchors CSV needs columns x_1..x_n,f");
  AnchorSet anchors;
  anchors.lipschitz_bound = lipschitz_bound;
  anchors.points.resize(static_cast<long long>(rows.size()), n);
  anchors.values.resize(static_cast<long long>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<int>(rows[i].size()) != n + 1) {
      throw std::invalid_argument("anchors CSV has ragged rows");
    }
    for (int a = 0; a < n; ++a) anchors.points(static_cast<long long>(i), a) = rows[i][a];
    anchors.values[static_cast<long long>(i)] = rows[i][n];
  }
  return anchors;
}

std::vector<Point> points_from_csv(const std::string& csv_text) {
  const auto rows = parse_csv_rows(csv_text);
  std::vector<Point> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    Point x(static_cast<int>(row.size()));
    for (std::size_t a = 0; a < row.size(); ++a) x[static_cast<int>(a)] = row[a];
    out.push_back(std::move(x));
  }
  return out;
}

RunReport run(const RunConfig& config) {
  const auto t_start = std::chrono::steady_clock::now();
  ordered_json report;
  report["schema"] = kSchemaVersion;
  report["version"] = kVersion;
  report["config"] = config_echo(config);

  RunReport out;
  const std::uint64_t seed = resolve_seed(config);
  report["config"]["seed"] = seed;

  try {
    RngStream rng(seed, 1);

    if (config.subcommand == "learn") {
      const FunctionOracle f = parse_function_spec(config.function_spec, config.dimension);
      const AgnosticLearnResult res = agnostic_learn_detailed(f, learner_config(config), rng);
      const std::string hypothesis_json = res.hypothesis.to_json();
      if (!config.out_path.empty()) {
        write_file(config.out_path, hypothesis_json);
        report["artifact_path"] = config.out_path;
      } else {
        report["hypothesis"] = ordered_json::parse(hypothesis_json);
      }
      report["samples_used"] = res.diagnostics.samples_used;
      report["diagnostics"] = learn_diag_json(res.diagnostics);
      out.exit_code = ExitCode::ok;

    } else if (config.subcommand == "test-tolerant") {
      const FunctionOracle f = parse_function_spec(config.function_spec, config.dimension);
      TolerantTestOptions opts;
      opts.repetitions = config.repetitions;
      opts.base_config = learner_config(config);
      const TestVerdict v =
          tolerant_test(f, config.lipschitz_bound, config.eps, config.eps0, rng, opts);
      report["verdict"] = verdict_json(v);
      report["verdict"]["Y"] = v.statistic;
      report["verdict"]["m"] = v.diagnostics.count("m_per_repetition")
                                   ? std::stoll(v.diagnostics.at("m_per_repetition"))
                                   : 0;
      report["verdict"]["repetitions"] = config.repetitions;
      report["samples_used"] = v.samples_used;
      out.exit_code = v.accept ? ExitCode::ok : ExitCode::reject;

    } else if (config.subcommand == "test-one-sided") {
      const FunctionOracle f = parse_function_spec(config.function_spec, config.dimension);
      OneSidedOptions opts;
      opts.c_constant = config.c_constant;
      opts.max_samples = config.max_samples_cap;
      const TestVerdict v = one_sided_test(f, config.lipschitz_bound, config.eps, rng, opts);
      report["verdict"] = verdict_json(v);
      report["samples_used"] = v.samples_used;
      out.exit_code = v.accept ? ExitCode::ok : ExitCode::reject;

    } else if (config.subcommand == "envelope") {
      std::ifstream anchors_in(config.anchors_csv);
      std::ifstream queries_in(config.queries_csv);
      if (!anchors_in || !queries_in) {
        throw std::invalid_argument("envelope: cannot open anchors/queries CSV");
      }
      std::stringstream abuf, qbuf;
      abuf << anchors_in.rdbuf();
      qbuf << queries_in.rdbuf();
      const AnchorSet anchors = anchors_from_csv(abuf.str(), config.lipschitz_bound);
      const std::vector<Point> queries = points_from_csv(qbuf.str());
      CeceSolver solver(anchors);
      ordered_json rows = ordered_json::array();
      for (const Point& x : queries) {
        const EnvelopeQuery q = solver.solve(x);
        ordered_json row;
        row["x"] = std::vector<double>(x.data(), x.data() + x.size());
        row["value"] = q.value;
        row["status"] = q.status == CeceStatus::optimal ? "optimal" : "numerical_failure";
        rows.push_back(std::move(row));
      }
      report["envelope"] = std::move(rows);
      report["samples_used"] = 0;
      out.exit_code = ExitCode::ok;

    } else if (config.subcommand == "spectrum") {
      const FunctionOracle f = parse_function_spec(config.function_spec, config.dimension);
      const SpectrumReport s = degree2_check(f, config.xi, config.delta, rng);
      ordered_json sj;
      sj["coeffs"] = std::vector<double>(s.degree2_coeffs.data(),
                                         s.degree2_coeffs.data() + s.degree2_coeffs.size());
      sj["lower_bound"] = dconv_lower_bound(s);
      sj["verdict"] = s.verdict();
      sj["xi"] = s.tolerance;
      report["spectrum"] = std::move(sj);
      report["samples_used"] = s.samples_used;
      out.exit_code = ExitCode::ok;

    } else if (config.subcommand == "oracle-dconv") {
      const FunctionOracle f = parse_function_spec(config.function_spec, config.dimension);
      GridLimits limits;
      limits.max_points = config.max_grid_points;
      const DconvOracleResult r =
          oracle_dconv_detailed(f, config.lipschitz_bound, config.eps, limits);
      ordered_json oj;
      oj["value"] = r.value;
      oj["eps_oracle"] = r.eps_oracle;
      oj["discretization_budget"] = r.discretization_budget;
      oj["tail_budget"] = r.tail_budget;
      oj["solver_budget"] = r.solver_budget;
      oj["radius"] = r.radius;
      oj["spacing"] = r.spacing;
      oj["grid_points"] = r.grid_points;
      report["oracle_dconv"] = std::move(oj);
      report["samples_used"] = 0;
      out.exit_code = ExitCode::ok;

    } else {
      throw std::invalid_argument("unknown subcommand '" + config.subcommand + "'");
    }
  } catch (const ResourceError& e) {
    report["error"] = {{"kind", "resource"}, {"what", e.what()}};
    out.exit_code = ExitCode::resource_error;
  } catch (const SolverError& e) {
    report["error"] = {{"kind", "solver"}, {"what", e.what()}};
    out.exit_code = ExitCode::resource_error;
  } catch (const std::invalid_argument& e) {
    report["error"] = {{"kind", "config"}, {"what", e.what()}};
    out.exit_code = ExitCode::config_error;
  } catch (const std::exception& e) {
    report["error"] = {{"kind", "internal"}, {"what", e.what()}};
    out.exit_code = ExitCode::resource_error;
  }

  const auto t_end = std::chrono::steady_clock::now();
  report["wall_time_seconds"] = std::chrono::duration<double>(t_end - t_start).count();
  out.json = report.dump(2);
  if (!config.report_path.empty()) write_file(config.report_path, out.json);
  return out;
}

}  // namespace convexlab
