#ifndef SPARSETRACK_EXPERIMENT_HPP
#define SPARSETRACK_EXPERIMENT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "sparsetrack/regret.hpp"
#include "sparsetrack/tvarx.hpp"

namespace sparsetrack {

enum class ScalingMode { Assumption, Off };

/**
 * One batch experiment: Monte-Carlo repetitions of the scenario, tracked
 * online with each configured step count r, scored against the true
 * coefficient path, with optional bound audits.
 *
 * Per-run seeds derive as master_seed + run_index, so runs are reproducible
 * and independent of scheduling.
 */
struct ExperimentConfig {
  TvarxScenario scenario = reference_scenario();
  double lambda = 2e-2;
  double mu = 1e-6;
  double tau = 3e-2;
  std::vector<int> r_values = {100, 1000};
  int runs = 250;
  uint64_t master_seed = 1;
  std::string out_dir = "out";
  bool audit = false;
  int audit_r = 1;
  double oracle_tol = 1e-12;
  ScalingMode scaling = ScalingMode::Assumption;
  bool bench = false;
  bool quiet = false;

  ElasticNetParams params() const { return {lambda, mu, tau}; }
};

struct RunResult {
  double mse_total = 0.0;       // as-defined score (no block normalization)
  double mse_per_block = 0.0;   // mse_total / block count
  double block_ms = 0.0;        // mean wall time per block for the tracker
  bool support_detected = false;  // null components beat active ones on |error|
  double scale = 1.0;
  bool failed = false;          // simulation diverged; excluded from aggregates
  std::string failure;
};

struct RGroupSummary {
  int r = 0;
  double mean_mse = 0.0;       // per-block convention, as reported in table1.csv
  double std_mse = 0.0;
  double mean_mse_total = 0.0;
  double std_mse_total = 0.0;
  double mean_block_ms = 0.0;
  double support_rate = 0.0;   // fraction of runs with support_detected
  std::vector<RunResult> runs;
};

struct ExperimentSummary {
  std::vector<RGroupSummary> groups;
  int audit_checks_passed = 0;
  int audit_checks_failed = 0;
  bool audit_all_passed = true;
  int failed_runs = 0;      // across all r groups
  int completed_runs = 0;
  std::vector<std::string> manifest;
};

/**
 * Run the Monte Carlo and write table1.csv, fig1_r<k>.csv, fig2.csv,
 * summary.json and timings.json under config.out_dir. Concurrency is capped
 * by the SPARSETRACK_THREADS environment variable; aggregation is an ordered
 * reduce by run index, so artifacts are byte-identical across thread counts.
 */
ExperimentSummary run_tvarx_experiment(const ExperimentConfig& config);

/**
 * Build the audit pipeline for one run of the scenario: simulate, assemble
 * and (optionally) rescale rounds, track with r steps per round, certify the
 * minimizer path, and audit. Writes nothing; the assembled ledger is copied
 * out through ledger_out when given.
 */
AuditReport run_scenario_audit(const ExperimentConfig& config, int r,
                               RegretLedger* ledger_out = nullptr);

// Flat key-value experiment config; unknown keys are errors. Scenario fields
// may appear inline or via `scenario_file = path`; `scenario = reference`
// selects the bundled scenario.
ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig experiment_config_from_keys(
    const std::vector<std::pair<std::string, std::string>>& keys);

/// Parse `key = value` lines ('#' comments, blank lines skipped).
std::vector<std::pair<std::string, std::string>> parse_key_value_file(
    const std::string& path);

std::string summary_to_json(const ExperimentSummary& summary,
                            const ExperimentConfig& config);

/// Monte-Carlo concurrency cap: SPARSETRACK_THREADS or hardware concurrency.
int thread_cap(int runs);

}  // namespace sparsetrack

#endif  // SPARSETRACK_EXPERIMENT_HPP
