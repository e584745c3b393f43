#include "sparsetrack/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "sparsetrack/errors.hpp"
#include "sparsetrack/io.hpp"
#include "sparsetrack/online_ist.hpp"

namespace sparsetrack {

namespace fs = std::filesystem;

int thread_cap(int runs) {
  int cap = static_cast<int>(std::thread::hardware_concurrency());
  if (cap < 1) cap = 1;
  if (const char* env = std::getenv("SPARSETRACK_THREADS")) {
    const int requested = std::atoi(env);
    if (requested >= 1) cap = requested;
  }
  return std::min(cap, std::max(1, runs));
}

namespace {

struct ScenarioData {
  TvarxRun run;
  std::vector<MeasurementRound> rounds;
  double scale = 1.0;
};

ScenarioData prepare_run(const ExperimentConfig& config, int run_index) {
  TvarxScenario scenario = config.scenario;
  scenario.seed = config.master_seed + static_cast<uint64_t>(run_index);
  ScenarioData data;
  data.run = simulate(scenario);
  data.rounds = build_rounds(data.run, scenario);
  if (config.scaling == ScalingMode::Assumption) {
    ScaledStream scaled = assumption_scaled(data.rounds, config.tau);
    data.rounds = std::move(scaled.rounds);
    data.scale = scaled.scale;
  }
  return data;
}

std::vector<Vector> estimates_of(const std::vector<RoundOutcome>& outcomes) {
  std::vector<Vector> estimates;
  estimates.reserve(outcomes.size());
  for (const auto& o : outcomes) estimates.push_back(o.action_after);
  return estimates;
}

// Mean |signed error| over the truly-null components vs the active ones.
bool support_detected(const TvarxScenario& scenario, const Matrix& errors) {
  std::vector<bool> active(static_cast<size_t>(scenario.estimated_dimension()), false);
  for (int p = 0; p < scenario.P_true; ++p) active[static_cast<size_t>(p)] = true;
  for (int q = 0; q < scenario.Q_true; ++q) {
    active[static_cast<size_t>(scenario.P_est + q)] = true;
  }
  double null_sum = 0.0, active_sum = 0.0;
  long null_count = 0, active_count = 0;
  for (Eigen::Index j = 0; j < errors.cols(); ++j) {
    const double column = errors.col(j).cwiseAbs().sum();
    if (active[static_cast<size_t>(j)]) {
      active_sum += column;
      active_count += errors.rows();
    } else {
      null_sum += column;
      null_count += errors.rows();
    }
  }
  if (null_count == 0 || active_count == 0) return false;
  return null_sum / static_cast<double>(null_count) <
         active_sum / static_cast<double>(active_count);
}

RunResult execute_run(const ExperimentConfig& config, int run_index, int r,
                      std::vector<Vector>* estimates_out) {
  ScenarioData data = prepare_run(config, run_index);
  const auto start = std::chrono::steady_clock::now();
  std::vector<RoundOutcome> outcomes =
      run_tracker(data.rounds, config.params(), r);
  const auto finish = std::chrono::steady_clock::now();

  RunResult result;
  result.scale = data.scale;
  const std::vector<Vector> estimates = estimates_of(outcomes);
  result.mse_total = mse(data.run.v_path, estimates, config.scenario.P_est,
                         config.scenario.Q_est);
  const double blocks = static_cast<double>(std::max<size_t>(1, estimates.size()));
  result.mse_per_block = result.mse_total / blocks;
  result.block_ms =
      std::chrono::duration<double, std::milli>(finish - start).count() / blocks;
  result.support_detected = support_detected(
      config.scenario, support_error(data.run.v_path, estimates));
  if (estimates_out) *estimates_out = estimates;
  return result;
}

void write_fig1(const std::string& path, const TvarxScenario& scenario,
                const std::vector<Vector>& truth,
                const std::vector<Vector>& estimates) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "t_seconds,a1_true,a1_est,b1_true,b1_est\n";
  for (size_t s = 0; s < truth.size(); ++s) {
    const double ts = static_cast<double>(s) * scenario.m / scenario.sample_rate;
    out << format_real(ts) << ',' << format_real(truth[s](0)) << ','
        << format_real(estimates[s](0)) << ','
        << format_real(truth[s](scenario.P_est)) << ','
        << format_real(estimates[s](scenario.P_est)) << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace

ExperimentSummary run_tvarx_experiment(const ExperimentConfig& config) {
  config.scenario.validate();
  config.params().validate();
  if (config.runs < 1) throw InvalidParameterError("experiment: runs must be >= 1");
  if (config.r_values.empty()) {
    throw InvalidParameterError("experiment: need at least one r value");
  }

  fs::create_directories(config.out_dir);
  const auto artifact = [&](const std::string& name) {
    return (fs::path(config.out_dir) / name).string();
  };

  ExperimentSummary summary;
  nlohmann::json timings;
  std::vector<std::vector<Vector>> run0_estimates_per_r;

  for (int r : config.r_values) {
    if (r < 1) throw InvalidParameterError("experiment: r must be >= 1");
    RGroupSummary group;
    group.r = r;
    group.runs.resize(static_cast<size_t>(config.runs));

    std::vector<Vector> first_run_estimates;
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    const int threads = thread_cap(config.runs);
    std::vector<std::exception_ptr> errors(static_cast<size_t>(threads));
    for (int w = 0; w < threads; ++w) {
      workers.emplace_back([&, w] {
        try {
          for (int i = next.fetch_add(1); i < config.runs; i = next.fetch_add(1)) {
            std::vector<Vector>* collect = i == 0 ? &first_run_estimates : nullptr;
            auto& slot = group.runs[static_cast<size_t>(i)];
            try {
              slot = execute_run(config, i, r, collect);
            } catch (const SimulationDivergedError& diverged) {
              slot.failed = true;
              slot.failure = diverged.what();
            } catch (const AssumptionViolationError& violated) {
              slot.failed = true;
              slot.failure = violated.what();
            }
          }
        } catch (...) {
          errors[static_cast<size_t>(w)] = std::current_exception();
        }
      });
    }
    for (auto& worker : workers) worker.join();
    for (const auto& error : errors) {
      if (error) std::rethrow_exception(error);
    }

    // Ordered reduce by run index keeps artifacts independent of scheduling.
    double sum = 0, sum_sq = 0, sum_total = 0, sum_total_sq = 0, ms = 0;
    int detected = 0, completed = 0;
    for (const auto& run : group.runs) {
      if (run.failed) {
        ++summary.failed_runs;
        continue;
      }
      ++completed;
      sum += run.mse_per_block;
      sum_sq += run.mse_per_block * run.mse_per_block;
      sum_total += run.mse_total;
      sum_total_sq += run.mse_total * run.mse_total;
      ms += run.block_ms;
      detected += run.support_detected ? 1 : 0;
    }
    summary.completed_runs += completed;
    const double count = static_cast<double>(std::max(1, completed));
    group.mean_mse = sum / count;
    group.mean_mse_total = sum_total / count;
    group.mean_block_ms = ms / count;
    group.support_rate = detected / count;
    if (completed > 1) {
      group.std_mse = std::sqrt(std::max(
          0.0, (sum_sq - count * group.mean_mse * group.mean_mse) / (count - 1.0)));
      group.std_mse_total = std::sqrt(std::max(
          0.0,
          (sum_total_sq - count * group.mean_mse_total * group.mean_mse_total) /
              (count - 1.0)));
    }

    // Per-run scores, so the summary aggregates can be recomputed.
    {
      const std::string runs_name = "runs_r" + std::to_string(r) + ".csv";
      std::ofstream out(artifact(runs_name));
      if (!out) throw IoError("cannot write " + runs_name);
      out << "run,mse,mse_total,failed\n";
      for (size_t i = 0; i < group.runs.size(); ++i) {
        const auto& run = group.runs[i];
        out << i << ',' << format_real(run.mse_per_block) << ','
            << format_real(run.mse_total) << ',' << (run.failed ? 1 : 0) << '\n';
      }
      summary.manifest.push_back(runs_name);
    }

    // Figure data from run 0 (skipped if that run diverged).
    if (!group.runs.front().failed) {
      TvarxScenario scenario0 = config.scenario;
      scenario0.seed = config.master_seed;
      TvarxRun run0 = simulate(scenario0);
      const std::string fig1_name = "fig1_r" + std::to_string(r) + ".csv";
      write_fig1(artifact(fig1_name), config.scenario, run0.v_path,
                 first_run_estimates);
      summary.manifest.push_back(fig1_name);
    }
    run0_estimates_per_r.push_back(std::move(first_run_estimates));

    timings["per_r"].push_back(
        {{"r", r}, {"mean_block_ms", group.mean_block_ms}});
    summary.groups.push_back(std::move(group));
  }

  // table1.csv
  {
    std::ofstream out(artifact("table1.csv"));
    if (!out) throw IoError("cannot write table1.csv");
    out << "r,mean_mse,std_mse\n";
    for (const auto& group : summary.groups) {
      out << group.r << ',' << format_real(group.mean_mse) << ','
          << format_real(group.std_mse) << '\n';
    }
    summary.manifest.insert(summary.manifest.begin(), "table1.csv");
  }

  // fig2.csv: signed errors of run 0, all components and blocks, per r.
  bool have_run0 = false;
  for (const auto& estimates : run0_estimates_per_r) {
    have_run0 = have_run0 || !estimates.empty();
  }
  if (have_run0) {
    TvarxScenario scenario0 = config.scenario;
    scenario0.seed = config.master_seed;
    TvarxRun run0 = simulate(scenario0);
    std::ofstream out(artifact("fig2.csv"));
    if (!out) throw IoError("cannot write fig2.csv");
    out << "component_index,block,signed_error,r\n";
    for (size_t k = 0; k < config.r_values.size(); ++k) {
      if (run0_estimates_per_r[k].size() != run0.v_path.size()) continue;
      const Matrix errors = support_error(run0.v_path, run0_estimates_per_r[k]);
      for (Eigen::Index j = 0; j < errors.cols(); ++j) {
        for (Eigen::Index s = 0; s < errors.rows(); ++s) {
          out << j << ',' << (s + 1) << ',' << format_real(errors(s, j)) << ','
              << config.r_values[k] << '\n';
        }
      }
    }
    summary.manifest.push_back("fig2.csv");
  }

  if (config.audit) {
    const AuditReport report = run_scenario_audit(config, config.audit_r);
    for (const auto& check : report.checks) {
      if (!check.applicable) continue;
      if (check.passed) {
        ++summary.audit_checks_passed;
      } else {
        ++summary.audit_checks_failed;
      }
    }
    summary.audit_all_passed = report.all_passed;
    write_text_file(artifact("audit.json"), audit_report_to_json(report));
    summary.manifest.push_back("audit.json");
  }

  summary.manifest.push_back("summary.json");
  summary.manifest.push_back("timings.json");
  write_text_file(artifact("summary.json"), summary_to_json(summary, config));
  write_text_file(artifact("timings.json"), timings.dump(2) + "\n");

  if (!config.quiet) {
    for (const auto& group : summary.groups) {
      std::printf("r=%d: mean MSE %.6f (std %.6f) over %d runs\n", group.r,
                  group.mean_mse, group.std_mse, config.runs);
    }
  }
  return summary;
}

AuditReport run_scenario_audit(const ExperimentConfig& config, int r,
                               RegretLedger* ledger_out) {
  ScenarioData data = prepare_run(config, 0);
  const ElasticNetParams params = config.params();
  std::vector<RoundOutcome> outcomes = run_tracker(data.rounds, params, r);
  OracleOptions oracle;
  oracle.tol = config.oracle_tol;
  std::vector<Vector> z_path = minimizer_path(data.rounds, params, oracle);
  RegretLedger ledger =
      build_ledger(data.rounds, outcomes, z_path, params, data.run.v_path);
  AuditReport report = audit(data.rounds, ledger, params, r);
  if (ledger_out) *ledger_out = std::move(ledger);
  return report;
}

std::vector<std::pair<std::string, std::string>> parse_key_value_file(
    const std::string& path) {
  std::vector<std::pair<std::string, std::string>> keys;
  std::istringstream in(read_text_file(path));
  std::string line;
  while (std::getline(in, line)) {
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto strip = [](const std::string& s) {
      const size_t b = s.find_first_not_of(" \t\r\n");
      if (b == std::string::npos) return std::string();
      const size_t e = s.find_last_not_of(" \t\r\n");
      return s.substr(b, e - b + 1);
    };
    line = strip(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) throw IoError("config line without '=': " + line);
    std::string key = strip(line.substr(0, eq));
    std::transform(key.begin(), key.end(), key.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    keys.emplace_back(key, strip(line.substr(eq + 1)));
  }
  return keys;
}

namespace {

bool parse_bool(const std::string& value) {
  if (value == "1" || value == "true" || value == "on" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "off" || value == "no") return false;
  throw IoError("expected a boolean, got '" + value + "'");
}

std::vector<int> parse_int_list(const std::string& value) {
  std::vector<int> out;
  std::istringstream in(value);
  std::string part;
  while (std::getline(in, part, ',')) {
    out.push_back(static_cast<int>(parse_real(part)));
  }
  if (out.empty()) throw IoError("empty integer list");
  return out;
}

const char* kScenarioKeys[] = {"p_true", "q_true", "p_est", "q_est",
                               "a_schedule", "b_schedule", "t", "sample_rate",
                               "m", "snr_db"};

bool is_scenario_key(const std::string& key) {
  for (const char* candidate : kScenarioKeys) {
    if (key == candidate) return true;
  }
  return false;
}

}  // namespace

ExperimentConfig experiment_config_from_keys(
    const std::vector<std::pair<std::string, std::string>>& keys) {
  ExperimentConfig config;
  std::vector<std::pair<std::string, std::string>> scenario_keys;
  for (const auto& [key, value] : keys) {
    if (key == "lambda") config.lambda = parse_real(value);
    else if (key == "mu") config.mu = parse_real(value);
    else if (key == "tau") config.tau = parse_real(value);
    else if (key == "r") config.r_values = parse_int_list(value);
    else if (key == "runs") config.runs = static_cast<int>(parse_real(value));
    else if (key == "master_seed" || key == "seed")
      config.master_seed = static_cast<uint64_t>(parse_real(value));
    else if (key == "out" || key == "out_dir") config.out_dir = value;
    else if (key == "audit") config.audit = parse_bool(value);
    else if (key == "audit_r") config.audit_r = static_cast<int>(parse_real(value));
    else if (key == "oracle_tol") config.oracle_tol = parse_real(value);
    else if (key == "scaling") {
      if (value == "assumption") config.scaling = ScalingMode::Assumption;
      else if (value == "off") config.scaling = ScalingMode::Off;
      else throw IoError("scaling must be 'assumption' or 'off'");
    } else if (key == "bench") config.bench = parse_bool(value);
    else if (key == "quiet") config.quiet = parse_bool(value);
    else if (key == "scenario") {
      if (value != "reference") {
        throw IoError("scenario must be 'reference' or use scenario_file");
      }
      config.scenario = reference_scenario();
    } else if (key == "scenario_file") config.scenario = load_scenario(value);
    else if (is_scenario_key(key)) scenario_keys.emplace_back(key, value);
    else throw IoError("unknown config key '" + key + "'");
  }
  if (!scenario_keys.empty()) {
    config.scenario = scenario_from_keys(scenario_keys);
  }
  return config;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  return experiment_config_from_keys(parse_key_value_file(path));
}

std::string summary_to_json(const ExperimentSummary& summary,
                            const ExperimentConfig& config) {
  nlohmann::json doc;
  doc["config"] = {
      {"lambda", config.lambda},
      {"mu", config.mu},
      {"tau", config.tau},
      {"r", config.r_values},
      {"runs", config.runs},
      {"master_seed", config.master_seed},
      {"scaling", config.scaling == ScalingMode::Assumption ? "assumption" : "off"},
      {"scenario",
       {{"P_est", config.scenario.P_est},
        {"Q_est", config.scenario.Q_est},
        {"T", config.scenario.T},
        {"m", config.scenario.m},
        {"snr_db", std::isfinite(config.scenario.snr_db)
                       ? nlohmann::json(config.scenario.snr_db)
                       : nlohmann::json("off")}}},
  };
  doc["per_r"] = nlohmann::json::array();
  for (const auto& group : summary.groups) {
    doc["per_r"].push_back({{"r", group.r},
                            {"mean_mse", group.mean_mse},
                            {"std_mse", group.std_mse},
                            {"mean_mse_total", group.mean_mse_total},
                            {"std_mse_total", group.std_mse_total},
                            {"support_rate", group.support_rate}});
  }
  doc["audit"] = {{"enabled", config.audit},
                  {"checks_passed", summary.audit_checks_passed},
                  {"checks_failed", summary.audit_checks_failed},
                  {"all_passed", summary.audit_all_passed}};
  doc["completed_runs"] = summary.completed_runs;
  doc["failed_runs"] = summary.failed_runs;
  doc["manifest"] = summary.manifest;
  return doc.dump(2) + "\n";
}

}  // namespace sparsetrack
