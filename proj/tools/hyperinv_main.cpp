#include <CLI11.hpp>
#include <iostream>

#include <spdlog/spdlog.h>

#include "hyperinv/cli/commands.hpp"
#include "hyperinv/errors.hpp"

namespace {

void add_run_flags(CLI::App* cmd, hyperinv::cli::RunOptions& o, bool needs_checkpoint) {
  cmd->add_option("--config", o.config, "TOML run configuration");
  cmd->add_option("--out", o.out, "run directory to create")->required();
  cmd->add_flag("--force", o.force, "write into a non-empty run directory");
  cmd->add_option("--source", o.source, "data source: glyph or mnist");
  cmd->add_option("--seed", o.seed, "master seed");
  if (needs_checkpoint) cmd->add_option("--checkpoint", o.checkpoint, "pre-training run directory")->required();
}

}  // namespace

int main(int argc, char** argv) {
  using namespace hyperinv::cli;
  CLI::App app{"hyperinv: hypernetworks over invariance descriptors"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");

  RunOptions pretrain;
  auto* pre = app.add_subcommand("pretrain", "multi-task or contrastive pre-training of the hypernetwork");
  add_run_flags(pre, pretrain, false);

  DownstreamOptions down;
  auto* ds = app.add_subcommand("downstream", "fit descriptor and head per (task, N, seed)");
  add_run_flags(ds, down.run, true);
  ds->add_option("--n", down.n, "examples per class")->delimiter(',');
  ds->add_option("--seeds", down.seeds, "downstream seeds")->delimiter(',');
  ds->add_option("--task", down.tasks, "digit, rotation or color")->delimiter(',');
  ds->add_option("--baseline", down.baseline, "also evaluate a baseline bundle (mtl)");

  MeasureOptions measure;
  auto* me = app.add_subcommand("measure", "invariance along the [t, 1-t] sweep");
  add_run_flags(me, measure.run, true);
  me->add_option("--sweep", measure.points, "number of sweep points");

  RunOptions sweep;
  auto* sw = app.add_subcommand("sweep", "train loss as a function of the pinned descriptor");
  add_run_flags(sw, sweep, true);

  BoundFormulaOptions formula;
  RunOptions bound_run;
  auto* bo = app.add_subcommand("bound", "evaluate the generalization bound, or check it with --checkpoint");
  bo->add_option("--n", formula.n, "training set size");
  bo->add_option("--card", formula.cardinality, "number of candidate descriptors |I|");
  bo->add_option("--delta", formula.delta, "failure probability");
  bo->add_option("--X", formula.X, "feature norm bound");
  bo->add_option("--B", formula.B, "head norm bound");
  bo->add_option("--risk", formula.risk, "empirical risk");
  bo->add_option("--checkpoint", bound_run.checkpoint, "run the Monte Carlo check against this bundle");
  bo->add_option("--config", bound_run.config, "TOML run configuration");
  bo->add_option("--out", bound_run.out, "run directory for the Monte Carlo check");
  bo->add_flag("--force", bound_run.force, "write into a non-empty run directory");
  bo->add_option("--source", bound_run.source, "data source: glyph or mnist");
  bo->add_option("--seed", bound_run.seed, "master seed");

  std::filesystem::path report_dir;
  auto* re = app.add_subcommand("report", "print the tables of a downstream run");
  re->add_option("run", report_dir, "downstream run directory")->required();

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::warn);

  try {
    if (pre->parsed()) cmd_pretrain(pretrain, std::cout);
    if (ds->parsed()) cmd_downstream(down, std::cout);
    if (me->parsed()) cmd_measure(measure, std::cout);
    if (sw->parsed()) cmd_sweep(sweep, std::cout);
    if (bo->parsed()) {
      if (bound_run.checkpoint.empty()) {
        cmd_bound_formula(formula, std::cout);
      } else {
        cmd_bound_check(bound_run, std::cout);
      }
    }
    if (re->parsed()) cmd_report(report_dir, std::cout);
  } catch (const hyperinv::ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
