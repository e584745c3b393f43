#include "sparsetrack/tvarx.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "sparsetrack/errors.hpp"
#include "sparsetrack/io.hpp"
#include "sparsetrack/numerics.hpp"
#include "sparsetrack/rng.hpp"

namespace sparsetrack {

PiecewiseSchedule::PiecewiseSchedule(
    std::vector<std::pair<double, double>> breakpoints)
    : breakpoints_(std::move(breakpoints)) {
  if (breakpoints_.empty()) {
    throw InvalidParameterError("PiecewiseSchedule: needs at least one breakpoint");
  }
  for (size_t i = 1; i < breakpoints_.size(); ++i) {
    if (breakpoints_[i].first <= breakpoints_[i - 1].first) {
      throw InvalidParameterError(
          "PiecewiseSchedule: breakpoints must be strictly increasing");
    }
  }
}

double PiecewiseSchedule::operator()(double t_seconds) const {
  double value = breakpoints_.front().second;
  for (const auto& [start, v] : breakpoints_) {
    if (t_seconds >= start) value = v;
    else break;
  }
  return value;
}

void TvarxScenario::validate() const {
  if (P_true < 0 || Q_true < 0) {
    throw InvalidParameterError("TvarxScenario: negative true order");
  }
  if (P_est < P_true || Q_est < Q_true) {
    throw InvalidParameterError("TvarxScenario: estimated orders must dominate "
                                "the true orders");
  }
  if (P_est + Q_est < 1) {
    throw InvalidParameterError("TvarxScenario: empty parameter vector");
  }
  if (T < 1) throw InvalidParameterError("TvarxScenario: T must be >= 1");
  if (m < 1) throw InvalidParameterError("TvarxScenario: m must be >= 1");
  if (!(sample_rate > 0.0)) {
    throw InvalidParameterError("TvarxScenario: sample_rate must be > 0");
  }
  if (static_cast<int>(a_schedules.size()) != P_true ||
      static_cast<int>(b_schedules.size()) != Q_true) {
    throw InvalidParameterError("TvarxScenario: one schedule per true coefficient");
  }
}

TvarxScenario reference_scenario() {
  TvarxScenario s;
  s.P_true = 1;
  s.Q_true = 1;
  s.P_est = 10;
  s.Q_est = 10;
  s.a_schedules = {PiecewiseSchedule({{0.0, -0.9}, {0.5, 0.9}})};
  s.b_schedules = {PiecewiseSchedule(
      {{0.0, 0.7}, {0.2, -0.8}, {0.4, 0.8}, {0.7, -0.7}})};
  s.T = 1000;
  s.sample_rate = 1000.0;
  s.m = 15;
  s.snr_db = 20.0;
  s.seed = 1;
  return s;
}

namespace {

// One recursion pass; noise entries may be null (noiseless pass).
std::vector<double> recurse(const TvarxScenario& sc, const std::vector<double>& u,
                            const std::vector<double>* noise,
                            const std::optional<double>& y0) {
  std::vector<double> y(static_cast<size_t>(sc.T), 0.0);
  for (long t = 0; t < sc.T; ++t) {
    if (t == 0 && y0) {
      y[0] = *y0;
      continue;
    }
    const double ts = static_cast<double>(t) / sc.sample_rate;
    double value = 0.0;
    for (int p = 1; p <= sc.P_true; ++p) {
      const long idx = t - p;
      if (idx >= 0) value += sc.a_schedules[static_cast<size_t>(p - 1)](ts) *
                             y[static_cast<size_t>(idx)];
    }
    for (int q = 1; q <= sc.Q_true; ++q) {
      const long idx = t - q;
      if (idx >= 0) value += sc.b_schedules[static_cast<size_t>(q - 1)](ts) *
                             u[static_cast<size_t>(idx)];
    }
    if (noise) value += (*noise)[static_cast<size_t>(t)];
    if (std::abs(value) > 1e12) {
      throw SimulationDivergedError("simulate: |y| exceeded 1e12 at sample " +
                                    std::to_string(t));
    }
    y[static_cast<size_t>(t)] = value;
  }
  return y;
}

}  // namespace

TvarxRun simulate(const TvarxScenario& scenario, const SimulateOverrides& overrides) {
  scenario.validate();
  Rng rng(scenario.seed);

  TvarxRun run;
  if (overrides.input) {
    if (static_cast<long>(overrides.input->size()) != scenario.T) {
      throw ShapeError("simulate: input override length != T");
    }
    run.u = *overrides.input;
  } else {
    std::vector<double> base(static_cast<size_t>(scenario.m));
    for (auto& v : base) v = rng.normal();
    run.u.resize(static_cast<size_t>(scenario.T));
    for (long t = 0; t < scenario.T; ++t) {
      run.u[static_cast<size_t>(t)] = base[static_cast<size_t>(t % scenario.m)];
    }
  }

  // Noise variance from the noiseless output power and the SNR target.
  const std::vector<double> clean = recurse(scenario, run.u, nullptr, overrides.y0);
  double sigma = 0.0;
  if (std::isfinite(scenario.snr_db)) {
    double power = 0.0;
    for (double v : clean) power += v * v;
    power /= static_cast<double>(scenario.T);
    sigma = std::sqrt(power / std::pow(10.0, scenario.snr_db / 10.0));
  }
  run.noise_sigma = sigma;

  if (sigma > 0.0) {
    std::vector<double> noise(static_cast<size_t>(scenario.T));
    for (auto& e : noise) e = sigma * rng.normal();
    run.y = recurse(scenario, run.u, &noise, overrides.y0);
  } else {
    run.y = clean;
  }

  const int n = scenario.estimated_dimension();
  const long blocks = scenario.block_count();
  run.v_path.reserve(static_cast<size_t>(blocks));
  for (long s = 0; s < blocks; ++s) {
    const double ts = static_cast<double>(s * scenario.m) / scenario.sample_rate;
    Vector v = Vector::Zero(n);
    for (int p = 1; p <= scenario.P_true; ++p) {
      v(p - 1) = scenario.a_schedules[static_cast<size_t>(p - 1)](ts);
    }
    for (int q = 1; q <= scenario.Q_true; ++q) {
      v(scenario.P_est + q - 1) = scenario.b_schedules[static_cast<size_t>(q - 1)](ts);
    }
    run.v_path.push_back(std::move(v));
  }
  return run;
}

std::vector<MeasurementRound> build_rounds(const TvarxRun& run,
                                           const TvarxScenario& scenario) {
  scenario.validate();
  if (static_cast<long>(run.y.size()) != scenario.T ||
      static_cast<long>(run.u.size()) != scenario.T) {
    throw ShapeError("build_rounds: run length != scenario T");
  }
  const int n = scenario.estimated_dimension();
  const long blocks = scenario.block_count();
  if (blocks == 0) {
    std::fprintf(stderr,
                 "build_rounds: horizon of %ld samples is shorter than one "
                 "block of %d; no rounds produced\n",
                 scenario.T, scenario.m);
  }
  std::vector<MeasurementRound> rounds;
  rounds.reserve(static_cast<size_t>(blocks));
  auto at = [](const std::vector<double>& series, long idx) {
    return idx >= 0 ? series[static_cast<size_t>(idx)] : 0.0;  // warm-up zeros
  };
  for (long s = 0; s < blocks; ++s) {
    MeasurementRound round;
    round.index = s;
    round.A    = Matrix(scenario.m, n);
    round.y    = Vector(scenario.m);
    for (int i = 0; i < scenario.m; ++i) {
      const long target = s * scenario.m + i;
      round.y(i) = run.y[static_cast<size_t>(target)];
      for (int p = 1; p <= scenario.P_est; ++p) {
        round.A(i, p - 1) = at(run.y, target - p);
      }
      for (int q = 1; q <= scenario.Q_est; ++q) {
        round.A(i, scenario.P_est + q - 1) = at(run.u, target - q);
      }
    }
    rounds.push_back(std::move(round));
  }
  return rounds;
}

double mse(const std::vector<Vector>& v_path, const std::vector<Vector>& estimates,
           int P_est, int Q_est) {
  if (v_path.size() != estimates.size()) {
    throw ShapeError("mse: truth and estimate counts differ");
  }
  const int n = P_est + Q_est;
  if (n < 1) throw InvalidParameterError("mse: empty parameter vector");
  double total = 0.0;
  for (size_t s = 0; s < v_path.size(); ++s) {
    if (v_path[s].size() != n || estimates[s].size() != n) {
      throw ShapeError("mse: vector length != P_est + Q_est");
    }
    total += (v_path[s] - estimates[s]).squaredNorm();
  }
  return total / static_cast<double>(n);
}

Matrix support_error(const std::vector<Vector>& v_path,
                     const std::vector<Vector>& estimates) {
  if (v_path.size() != estimates.size()) {
    throw ShapeError("support_error: truth and estimate counts differ");
  }
  if (v_path.empty()) return Matrix(0, 0);
  const Eigen::Index n = v_path.front().size();
  Matrix errors(static_cast<Eigen::Index>(v_path.size()), n);
  for (size_t s = 0; s < v_path.size(); ++s) {
    if (v_path[s].size() != n || estimates[s].size() != n) {
      throw ShapeError("support_error: ragged vectors");
    }
    errors.row(static_cast<Eigen::Index>(s)) = (estimates[s] - v_path[s]).transpose();
  }
  return errors;
}

ScaledStream assumption_scaled(const std::vector<MeasurementRound>& rounds,
                               double tau, double safety) {
  if (!(tau > 0.0)) throw InvalidParameterError("assumption_scaled: tau must be > 0");
  if (!(safety > 0.0) || safety > 1.0) {
    throw InvalidParameterError("assumption_scaled: safety must be in (0, 1]");
  }
  double max_norm_sq = 0.0;
  for (const auto& round : rounds) {
    const double s = spectral_norm(round.A);
    max_norm_sq = std::max(max_norm_sq, s * s);
  }
  ScaledStream out;
  out.scale = std::max(1.0, std::sqrt(tau * max_norm_sq / safety));
  out.rounds.reserve(rounds.size());
  for (const auto& round : rounds) {
    MeasurementRound scaled;
    scaled.index = round.index;
    scaled.A = round.A / out.scale;
    scaled.y = round.y / out.scale;
    out.rounds.push_back(std::move(scaled));
  }
  return out;
}

namespace {

std::string strip(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

PiecewiseSchedule parse_schedule(const std::string& text) {
  std::vector<std::pair<double, double>> points;
  std::istringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    part = strip(part);
    if (part.empty()) continue;
    const size_t colon = part.find(':');
    if (colon == std::string::npos) {
      throw IoError("schedule entry '" + part + "' is not start:value");
    }
    points.emplace_back(parse_real(part.substr(0, colon)),
                        parse_real(part.substr(colon + 1)));
  }
  if (points.empty()) throw IoError("empty schedule");
  return PiecewiseSchedule(points);
}

std::string schedule_to_string(const PiecewiseSchedule& schedule) {
  std::string out;
  for (const auto& [start, value] : schedule.breakpoints()) {
    if (!out.empty()) out += ", ";
    out += format_real(start) + ":" + format_real(value);
  }
  return out;
}

}  // namespace

TvarxScenario scenario_from_keys(
    const std::vector<std::pair<std::string, std::string>>& keys) {
  TvarxScenario s = reference_scenario();
  std::vector<PiecewiseSchedule> a_sched, b_sched;
  for (const auto& [key, value] : keys) {
    if (key == "p_true") s.P_true = static_cast<int>(parse_real(value));
    else if (key == "q_true") s.Q_true = static_cast<int>(parse_real(value));
    else if (key == "p_est") s.P_est = static_cast<int>(parse_real(value));
    else if (key == "q_est") s.Q_est = static_cast<int>(parse_real(value));
    else if (key == "a_schedule") a_sched.push_back(parse_schedule(value));
    else if (key == "b_schedule") b_sched.push_back(parse_schedule(value));
    else if (key == "t") s.T = static_cast<long>(parse_real(value));
    else if (key == "sample_rate") s.sample_rate = parse_real(value);
    else if (key == "m") s.m = static_cast<int>(parse_real(value));
    else if (key == "snr_db") {
      s.snr_db = value == "off" ? std::numeric_limits<double>::infinity()
                                : parse_real(value);
    } else if (key == "seed") s.seed = static_cast<uint64_t>(parse_real(value));
    else throw IoError("unknown scenario key '" + key + "'");
  }
  if (!a_sched.empty()) s.a_schedules = std::move(a_sched);
  if (!b_sched.empty()) s.b_schedules = std::move(b_sched);
  s.validate();
  return s;
}

TvarxScenario load_scenario(const std::string& path) {
  std::vector<std::pair<std::string, std::string>> keys;
  std::istringstream in(read_text_file(path));
  std::string line;
  while (std::getline(in, line)) {
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = strip(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw IoError("scenario line without '=': " + line);
    }
    std::string key = strip(line.substr(0, eq));
    std::transform(key.begin(), key.end(), key.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    keys.emplace_back(key, strip(line.substr(eq + 1)));
  }
  return scenario_from_keys(keys);
}

void save_scenario(const std::string& path, const TvarxScenario& scenario) {
  scenario.validate();
  std::ostringstream out;
  out << "p_true = " << scenario.P_true << "\n";
  out << "q_true = " << scenario.Q_true << "\n";
  out << "p_est = " << scenario.P_est << "\n";
  out << "q_est = " << scenario.Q_est << "\n";
  for (const auto& sched : scenario.a_schedules) {
    out << "a_schedule = " << schedule_to_string(sched) << "\n";
  }
  for (const auto& sched : scenario.b_schedules) {
    out << "b_schedule = " << schedule_to_string(sched) << "\n";
  }
  out << "t = " << scenario.T << "\n";
  out << "sample_rate = " << format_real(scenario.sample_rate) << "\n";
  out << "m = " << scenario.m << "\n";
  if (std::isfinite(scenario.snr_db)) {
    out << "snr_db = " << format_real(scenario.snr_db) << "\n";
  } else {
    out << "snr_db = off\n";
  }
  out << "seed = " << scenario.seed << "\n";
  write_text_file(path, out.str());
}

}  // namespace sparsetrack
