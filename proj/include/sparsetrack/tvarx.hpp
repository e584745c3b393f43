#ifndef SPARSETRACK_TVARX_HPP
#define SPARSETRACK_TVARX_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sparsetrack/elastic_net.hpp"

namespace sparsetrack {

/// Piecewise-constant time function: value of the last breakpoint at or before t.
class PiecewiseSchedule {
 public:
  PiecewiseSchedule() = default;
  // breakpoints: (start_time_seconds, value), sorted ascending by time.
  explicit PiecewiseSchedule(std::vector<std::pair<double, double>> breakpoints);

  double operator()(double t_seconds) const;
  const std::vector<std::pair<double, double>>& breakpoints() const {
    return breakpoints_;
  }

 private:
  std::vector<std::pair<double, double>> breakpoints_{{0.0, 0.0}};
};

/**
 * Synthetic time-varying ARX(P_true, Q_true) scenario, identified with
 * overestimated orders P_est + Q_est. The input is one block of m standard
 * normal draws tiled periodically, so the input half of every complete
 * regressor block is identical.
 */
struct TvarxScenario {
  int P_true = 1;
  int Q_true = 1;
  int P_est = 10;
  int Q_est = 10;
  std::vector<PiecewiseSchedule> a_schedules;  // size P_true
  std::vector<PiecewiseSchedule> b_schedules;  // size Q_true
  long T = 1000;            // samples
  double sample_rate = 1000.0;  // Hz
  int m = 15;               // measurements per block
  double snr_db = 20.0;     // +inf disables noise
  uint64_t seed = 1;

  int estimated_dimension() const { return P_est + Q_est; }
  long block_count() const { return m >= 1 ? T / m : 0; }
  void validate() const;
};

/**
 * The bundled reference scenario: TVARX(1,1) with step-wise coefficients
 * a1 = -0.9 (t < 0.5 s) then 0.9, and b1 = 0.7 / -0.8 / 0.8 / -0.7 switching
 * at 0.2, 0.4, 0.7 s; one second at 1000 Hz, blocks of m = 15, orders
 * overestimated to P = Q = 10, SNR 20 dB.
 */
TvarxScenario reference_scenario();

struct TvarxRun {
  std::vector<double> u;        // input, length T
  std::vector<double> y;        // output, length T
  std::vector<Vector> v_path;   // true coefficient vector per block, at block start
  double noise_sigma = 0.0;     // realized noise standard deviation
};

/// Test seams: force the first output sample and/or replace the input sequence.
struct SimulateOverrides {
  std::optional<double> y0;
  std::optional<std::vector<double>> input;
};

/**
 * Simulate the scenario. Noise variance is calibrated in a first noiseless
 * pass so the realized SNR matches snr_db; samples at or before zero are
 * zero. Deterministic given the scenario seed. Throws
 * SimulationDivergedError if |y_t| exceeds 1e12.
 */
TvarxRun simulate(const TvarxScenario& scenario, const SimulateOverrides& overrides = {});

/**
 * Assemble one MeasurementRound per complete block of m samples: block s
 * targets y[s m .. s m + m - 1]; row i holds the P_est output lags and Q_est
 * input lags of target s m + i, with negative indices read as zero. The
 * trailing partial block is dropped.
 */
std::vector<MeasurementRound> build_rounds(const TvarxRun& run,
                                           const TvarxScenario& scenario);

/**
 * Error score: (1/(P_est+Q_est)) * sum over blocks of ||v_s - est_s||^2.
 * Divide by the block count for a per-block figure.
 */
double mse(const std::vector<Vector>& v_path, const std::vector<Vector>& estimates,
           int P_est, int Q_est);

/// Signed errors est - v, one row per block, one column per component.
Matrix support_error(const std::vector<Vector>& v_path,
                     const std::vector<Vector>& estimates);

struct ScaledStream {
  std::vector<MeasurementRound> rounds;
  double scale = 1.0;  // divisor applied to every (A, y)
};

/**
 * Rescale the whole stream by one constant c = sqrt(tau * max_s ||A_s||^2 / safety)
 * (never below 1) so the step-size condition tau ||A_s||^2 <= safety holds on
 * every round. Both sides of each measurement equation are divided by c, so
 * the underlying coefficient vector and its recovery error are unchanged.
 */
ScaledStream assumption_scaled(const std::vector<MeasurementRound>& rounds,
                               double tau, double safety = 0.99);

// Scenario config file: flat `key = value` lines, '#' comments. Schedules are
// comma-separated `start:value` pairs, e.g. `a_schedule = 0:-0.9, 0.5:0.9`.
TvarxScenario load_scenario(const std::string& path);
void save_scenario(const std::string& path, const TvarxScenario& scenario);
TvarxScenario scenario_from_keys(
    const std::vector<std::pair<std::string, std::string>>& keys);

}  // namespace sparsetrack

#endif  // SPARSETRACK_TVARX_HPP
