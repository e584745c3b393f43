// Command-line front end: batch solves, streaming tracking, the synthetic
// TVARX experiment, and the regret-bound audit.
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sparsetrack/elastic_net.hpp"
#include "sparsetrack/errors.hpp"
#include "sparsetrack/experiment.hpp"
#include "sparsetrack/io.hpp"
#include "sparsetrack/online_ist.hpp"
#include "sparsetrack/regret.hpp"
#include "sparsetrack/tvarx.hpp"

namespace fs = std::filesystem;
using namespace sparsetrack;

namespace {

int cmd_solve(const std::string& matrix_path, const std::string& vector_path,
              ElasticNetParams params, double tol, long max_iter,
              const std::string& out_path, bool do_clamp_tau, bool quiet) {
  MeasurementRound round;
  round.A = read_matrix_csv(matrix_path);
  round.y = read_vector_csv(vector_path);
  if (round.y.size() != round.A.rows()) {
    throw ShapeError("solve: vector length " + std::to_string(round.y.size()) +
                     " does not match matrix rows " +
                     std::to_string(round.A.rows()));
  }
  if (do_clamp_tau) params = clamp_tau(params, round.A);
  const BatchSolveReport report = batch_solve(params, round, tol, max_iter);
  if (!quiet) {
    std::string line;
    for (Eigen::Index i = 0; i < report.minimizer.size(); ++i) {
      if (i) line += ',';
      line += format_real(report.minimizer(i));
    }
    std::printf("minimizer: %s\n", line.c_str());
    std::printf("iterations: %ld\nfinal_step_norm: %s\noptimality_residual: %s\n",
                report.iterations, format_real(report.final_step_norm).c_str(),
                format_real(report.optimality_residual).c_str());
    std::printf("converged: %s\n", report.converged ? "true" : "false");
  }
  if (!out_path.empty()) write_vector_csv(out_path, report.minimizer);
  return report.converged ? 0 : 2;
}

std::vector<MeasurementRound> load_rounds_dir(const std::string& dir, int repeat) {
  std::vector<std::string> ids;
  if (fs::exists(dir)) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      const std::string name = entry.path().filename().string();
      if (name.rfind("A_", 0) == 0 && name.size() > 6 &&
          name.substr(name.size() - 4) == ".csv") {
        ids.push_back(name.substr(2, name.size() - 6));
      }
    }
  }
  std::sort(ids.begin(), ids.end());
  std::vector<MeasurementRound> rounds;
  long index = 0;
  for (int rep = 0; rep < repeat; ++rep) {
    for (const auto& id : ids) {
      MeasurementRound round;
      round.A = read_matrix_csv((fs::path(dir) / ("A_" + id + ".csv")).string());
      const fs::path ypath = fs::path(dir) / ("y_" + id + ".csv");
      if (!fs::exists(ypath)) {
        throw IoError("round '" + id + "' has no measurement file " +
                      ypath.string());
      }
      round.y = read_vector_csv(ypath.string());
      round.index = index++;
      rounds.push_back(std::move(round));
    }
  }
  return rounds;
}

int cmd_track(const std::string& rounds_dir, const ElasticNetParams& params, int r,
              int repeat, const std::string& out_path, bool dump_state,
              bool rescale, bool quiet) {
  const std::vector<MeasurementRound> rounds = load_rounds_dir(rounds_dir, repeat);
  const StepSizePolicy policy =
      rescale ? StepSizePolicy::RescaleTau : StepSizePolicy::Enforce;
  const std::vector<RoundOutcome> outcomes = run_tracker(rounds, params, r, {}, policy);
  write_trajectory_csv(out_path, outcomes, dump_state);
  if (!quiet) {
    std::printf("tracked %zu rounds -> %s\n", outcomes.size(), out_path.c_str());
  }
  return 0;
}

void export_rounds(const std::string& dir, const std::vector<MeasurementRound>& rounds) {
  fs::create_directories(dir);
  for (size_t i = 0; i < rounds.size(); ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "%04zu", i);
    write_matrix_csv((fs::path(dir) / ("A_" + std::string(id) + ".csv")).string(),
                     rounds[i].A);
    write_vector_csv((fs::path(dir) / ("y_" + std::string(id) + ".csv")).string(),
                     rounds[i].y);
  }
}

// Run-0 data dump: input, output, and the per-block true coefficients.
void export_run(const std::string& dir, const TvarxRun& run) {
  fs::create_directories(dir);
  Vector u(static_cast<Eigen::Index>(run.u.size()));
  Vector y(static_cast<Eigen::Index>(run.y.size()));
  for (size_t i = 0; i < run.u.size(); ++i) u(static_cast<Eigen::Index>(i)) = run.u[i];
  for (size_t i = 0; i < run.y.size(); ++i) y(static_cast<Eigen::Index>(i)) = run.y[i];
  write_vector_csv((fs::path(dir) / "u.csv").string(), u);
  write_vector_csv((fs::path(dir) / "y.csv").string(), y);
  if (!run.v_path.empty()) {
    Matrix truth(static_cast<Eigen::Index>(run.v_path.size()),
                 run.v_path.front().size());
    for (size_t s = 0; s < run.v_path.size(); ++s) {
      truth.row(static_cast<Eigen::Index>(s)) = run.v_path[s].transpose();
    }
    write_matrix_csv((fs::path(dir) / "truth.csv").string(), truth);
  }
}

int cmd_tvarx(const ExperimentConfig& config, const std::string& dump_rounds_dir,
              const std::string& dump_run_dir) {
  if (!dump_rounds_dir.empty() || !dump_run_dir.empty()) {
    TvarxScenario scenario = config.scenario;
    scenario.seed = config.master_seed;
    TvarxRun run = simulate(scenario);
    if (!dump_run_dir.empty()) export_run(dump_run_dir, run);
    if (!dump_rounds_dir.empty()) {
      std::vector<MeasurementRound> rounds = build_rounds(run, scenario);
      if (config.scaling == ScalingMode::Assumption) {
        rounds = assumption_scaled(rounds, config.tau).rounds;
      }
      export_rounds(dump_rounds_dir, rounds);
    }
  }
  const ExperimentSummary summary = run_tvarx_experiment(config);
  if (config.bench && !summary.groups.empty()) {
    const auto& group = summary.groups.back();
    std::printf("bench: r=%d mean wall time per block %.3f ms\n", group.r,
                group.mean_block_ms);
  }
  if (summary.completed_runs == 0) {
    std::fprintf(stderr, "tvarx: every run failed\n");
    return 4;
  }
  return 0;
}

int cmd_audit(const ExperimentConfig& config, int r) {
  fs::create_directories(config.out_dir);
  RegretLedger ledger;
  const AuditReport report = run_scenario_audit(config, r, &ledger);
  write_text_file((fs::path(config.out_dir) / "audit.json").string(),
                  audit_report_to_json(report));
  write_ledger_csv((fs::path(config.out_dir) / "ledger.csv").string(), ledger);
  if (!config.quiet) {
    for (const auto& check : report.checks) {
      std::printf("%-40s %s%s\n", check.name.c_str(),
                  check.applicable ? (check.passed ? "pass" : "FAIL") : "n/a",
                  check.gating ? "" : " (informational)");
    }
    std::printf("regret %.6g vs bound %.6g\n", report.regret_measured,
                report.rhs_rederived);
  }
  return report.all_passed ? 0 : 5;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online iterative soft-thresholding for time-varying "
               "elastic-net problems"};
  app.require_subcommand(1);

  // common experiment options, shared by tvarx and audit; explicit flags win
  // over values read from --config
  std::string config_path;
  ExperimentConfig config;
  bool quiet = false;
  std::vector<CLI::Option*> overriding;

  auto add_experiment_flags = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key = value config file");
    overriding.push_back(cmd->add_option("--seed", config.master_seed, "master seed"));
    overriding.push_back(cmd->add_option("--out", config.out_dir, "output directory"));
    overriding.push_back(
        cmd->add_option("--runs", config.runs, "Monte-Carlo repetitions"));
    overriding.push_back(cmd->add_option("--lambda", config.lambda, "l1 weight"));
    overriding.push_back(cmd->add_option("--mu", config.mu, "quadratic weight"));
    overriding.push_back(cmd->add_option("--tau", config.tau, "step size"));
    cmd->add_flag("--quiet", quiet, "suppress progress output");
  };

  // solve
  auto* solve = app.add_subcommand("solve", "batch solve one instance from CSV");
  std::string matrix_path, vector_path, solve_out;
  double solve_tol = 1e-10;
  long solve_max_iter = 200000;
  bool solve_clamp = false;
  ElasticNetParams solve_params{2e-2, 1e-6, 3e-2};
  solve->add_option("matrix", matrix_path, "matrix CSV (m rows, n columns)")
      ->required();
  solve->add_option("vector", vector_path, "measurement CSV (m lines)")->required();
  solve->add_option("--lambda", solve_params.lambda, "l1 weight");
  solve->add_option("--mu", solve_params.mu, "quadratic weight");
  solve->add_option("--tau", solve_params.tau, "step size");
  solve->add_option("--tol", solve_tol, "stopping step norm");
  solve->add_option("--max-iter", solve_max_iter, "iteration cap");
  solve->add_option("--out", solve_out, "write the minimizer to this CSV");
  solve->add_flag("--clamp-tau", solve_clamp,
                  "shrink tau to satisfy the step-size condition");
  bool solve_quiet = false;
  solve->add_flag("--quiet", solve_quiet, "suppress output");

  // track
  auto* track = app.add_subcommand("track", "run the online tracker over a "
                                            "directory of A_*.csv / y_*.csv rounds");
  std::string rounds_dir, track_out = "trajectory.csv";
  int track_r = 1, track_repeat = 1;
  bool track_dump = false, track_rescale = false, track_quiet = false;
  ElasticNetParams track_params{2e-2, 1e-6, 3e-2};
  track->add_option("rounds_dir", rounds_dir, "directory of per-round CSV pairs")
      ->required();
  track->add_option("--r", track_r, "soft-thresholding steps per round");
  track->add_option("--repeat", track_repeat, "replay the stream this many times");
  track->add_option("--lambda", track_params.lambda, "l1 weight");
  track->add_option("--mu", track_params.mu, "quadratic weight");
  track->add_option("--tau", track_params.tau, "step size");
  track->add_option("--out", track_out, "trajectory CSV path");
  track->add_flag("--dump-state", track_dump, "append action components");
  track->add_flag("--rescale-tau", track_rescale,
                  "per-round tau rescale instead of aborting");
  track->add_flag("--quiet", track_quiet, "suppress output");

  // tvarx
  auto* tvarx = app.add_subcommand("tvarx", "synthetic identification experiment");
  add_experiment_flags(tvarx);
  std::vector<int> tvarx_r;
  std::string scaling = "", dump_rounds_dir, dump_run_dir;
  bool tvarx_audit = false, bench = false;
  tvarx->add_option("--r", tvarx_r, "steps per round (repeatable)");
  tvarx->add_option("--scaling", scaling, "assumption | off");
  tvarx->add_flag("--audit", tvarx_audit, "audit run 0 and record the outcome");
  tvarx->add_flag("--bench", bench, "print per-block wall time");
  tvarx->add_option("--dump-rounds", dump_rounds_dir,
                    "export run-0 rounds as CSV pairs to this directory");
  tvarx->add_option("--dump-run", dump_run_dir,
                    "export run-0 input/output/truth CSVs to this directory");

  // audit
  auto* audit_cmd = app.add_subcommand("audit", "regret-bound audit of one run");
  add_experiment_flags(audit_cmd);
  int audit_r = 1;
  double audit_oracle_tol = 1e-12;
  audit_cmd->add_option("--r", audit_r, "steps per round for the tracked run");
  audit_cmd->add_option("--oracle-tol", audit_oracle_tol,
                        "per-round minimizer solve tolerance");

  try {
    app.parse(argc, argv);

    if (!config_path.empty()) {
      const ExperimentConfig from_flags = config;
      config = load_experiment_config(config_path);
      for (const CLI::Option* option : overriding) {
        if (option->count() == 0) continue;
        const std::string name = option->get_name();
        if (name == "--seed") config.master_seed = from_flags.master_seed;
        else if (name == "--out") config.out_dir = from_flags.out_dir;
        else if (name == "--runs") config.runs = from_flags.runs;
        else if (name == "--lambda") config.lambda = from_flags.lambda;
        else if (name == "--mu") config.mu = from_flags.mu;
        else if (name == "--tau") config.tau = from_flags.tau;
      }
    }
    config.quiet = config.quiet || quiet;

    if (solve->parsed()) {
      return cmd_solve(matrix_path, vector_path, solve_params, solve_tol,
                       solve_max_iter, solve_out, solve_clamp, solve_quiet);
    }
    if (track->parsed()) {
      return cmd_track(rounds_dir, track_params, track_r, track_repeat, track_out,
                       track_dump, track_rescale, track_quiet);
    }
    if (tvarx->parsed()) {
      if (!tvarx_r.empty()) config.r_values = tvarx_r;
      if (!scaling.empty()) {
        if (scaling == "assumption") config.scaling = ScalingMode::Assumption;
        else if (scaling == "off") config.scaling = ScalingMode::Off;
        else throw InvalidParameterError("--scaling must be assumption or off");
      }
      config.audit = config.audit || tvarx_audit;
      config.bench = config.bench || bench;
      return cmd_tvarx(config, dump_rounds_dir, dump_run_dir);
    }
    if (audit_cmd->parsed()) {
      config.oracle_tol = audit_oracle_tol;
      return cmd_audit(config, audit_r);
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const OracleFailureError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
