#include <CLI11.hpp>

#include <iostream>

#include "convexlab/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"convexlab: learning and testing convexity of Lipschitz functions over Gaussian space"};
  app.require_subcommand(1);

  convexlab::RunConfig cfg;

  const auto add_common = [&](CLI::App* sub, bool with_function) {
    if (with_function) {
      sub->add_option("--function", cfg.function_spec, "catalog spec, name[:p1,p2,...]")
          ->required();
      sub->add_option("--n", cfg.dimension, "ambient dimension")->check(CLI::PositiveNumber);
    }
    sub->add_option("--L", cfg.lipschitz_bound, "Lipschitz bound of the target class");
    auto* seed = sub->add_option("--seed", cfg.seed, "RNG seed (fallback: CONVEXLAB_SEED)");
    sub->callback([seed, &cfg]() { cfg.seed_given = seed->count() > 0; });
    sub->add_option("--report", cfg.report_path, "write the JSON report here (default stdout)");
  };

  auto* learn = app.add_subcommand("learn", "agnostic proper learner");
  add_common(learn, true);
  learn->add_option("--eps", cfg.eps, "target excess error");
  learn->add_option("--out", cfg.out_path, "write the max-affine hypothesis JSON here");
  learn->add_option("--max-grid-points", cfg.max_grid_points, "grid resource cap");
  learn->add_option("--learn-sample-cap", cfg.learn_sample_cap,
                    "per-coefficient sample cap for the regression stage");

  auto* tolerant = app.add_subcommand("test-tolerant", "tolerant two-sided tester");
  add_common(tolerant, true);
  tolerant->add_option("--eps", cfg.eps, "distance gap eps");
  tolerant->add_option("--eps0", cfg.eps0, "inner tolerance eps0");
  tolerant->add_option("--reps", cfg.repetitions, "majority-vote repetitions (odd)");
  tolerant->add_option("--max-grid-points", cfg.max_grid_points, "grid resource cap");
  tolerant->add_option("--learn-sample-cap", cfg.learn_sample_cap,
                       "per-coefficient sample cap for the regression stage");

  auto* one_sided = app.add_subcommand("test-one-sided", "one-sided tester (never rejects convex)");
  add_common(one_sided, true);
  one_sided->add_option("--eps", cfg.eps, "distance parameter eps");
  one_sided->add_option("--c-constant", cfg.c_constant, "constant c in t1 = (c L sqrt(n)/eps)^n");
  one_sided->add_option("--max-samples-cap", cfg.max_samples_cap, "hard cap on t1");

  auto* envelope = app.add_subcommand("envelope", "evaluate the empirical convex envelope");
  add_common(envelope, false);
  envelope->add_option("--anchors", cfg.anchors_csv, "anchor CSV (x_1..x_n,f)")->required();
  envelope->add_option("--queries", cfg.queries_csv, "query CSV (x_1..x_n)")->required();

  auto* spectrum = app.add_subcommand("spectrum", "degree-2 Hermite convexity diagnostics");
  add_common(spectrum, true);
  spectrum->add_option("--xi", cfg.xi, "per-coefficient estimation tolerance");
  spectrum->add_option("--delta", cfg.delta, "per-coefficient failure probability");

  auto* dconv = app.add_subcommand("oracle-dconv", "brute-force d_conv estimate (n <= 2)");
  add_common(dconv, true);
  dconv->add_option("--eps-oracle", cfg.eps, "oracle error budget");
  dconv->add_option("--max-grid-points", cfg.max_grid_points, "grid resource cap");

  CLI11_PARSE(app, argc, argv);

  cfg.subcommand = app.get_subcommands().front()->get_name();
  const convexlab::RunReport report = convexlab::run(cfg);
  if (cfg.report_path.empty()) std::cout << report.json << std::endl;
  return static_cast<int>(report.exit_code);
}
