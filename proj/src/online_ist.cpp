#include "sparsetrack/online_ist.hpp"

#include <fstream>
#include <string>

#include "sparsetrack/errors.hpp"
#include "sparsetrack/io.hpp"

namespace sparsetrack {

TrackerState init_tracker(long n, int r, const std::optional<Vector>& x0,
                          StepSizePolicy policy) {
  if (n < 1) throw ShapeError("init_tracker: dimension must be >= 1");
  if (r < 1) throw ShapeError("init_tracker: steps per round must be >= 1");
  TrackerState state;
  if (x0) {
    if (x0->size() != n) {
      throw ShapeError("init_tracker: x0 length " + std::to_string(x0->size()) +
                       " != n " + std::to_string(n));
    }
    state.x = *x0;
  } else {
    state.x = Vector::Zero(n);
  }
  state.t = 0;
  state.r = r;
  state.policy = policy;
  return state;
}

RoundOutcome step_tracker(TrackerState& state, const ElasticNetParams& params,
                          const MeasurementRound& round) {
  params.validate();
  if (round.A.cols() != state.x.size()) {
    throw ShapeError("step_tracker: round dimension " +
                     std::to_string(round.A.cols()) + " != tracker dimension " +
                     std::to_string(state.x.size()));
  }
  if (round.y.size() != round.A.rows()) {
    throw ShapeError("step_tracker: y length != A rows");
  }

  ElasticNetParams effective = params;
  const double condition = step_condition(params, round.A);
  if (condition > 1.0 + 1e-9) {
    if (state.policy == StepSizePolicy::Enforce) {
      throw AssumptionViolationError(
          "step_tracker: tau*||A||^2 = " + std::to_string(condition) +
              " at round " + std::to_string(state.t + 1) +
              " violates the step-size condition",
          state.t + 1, condition);
    }
    effective = clamp_tau(params, round.A);
  }

  RoundOutcome outcome;
  outcome.action_before = state.x;
  outcome.loss_before = cost(params, round, state.x);
  Vector x = state.x;
  for (int k = 0; k < state.r; ++k) {
    x = ist_step(effective, round, x);
  }
  state.x = x;
  state.t += 1;
  outcome.t = state.t;
  outcome.action_after = std::move(x);
  outcome.loss_after = cost(params, round, state.x);
  outcome.tau_used = effective.tau;
  return outcome;
}

std::vector<RoundOutcome> run_tracker(const std::vector<MeasurementRound>& stream,
                                      const ElasticNetParams& params, int r,
                                      const std::optional<Vector>& x0,
                                      StepSizePolicy policy) {
  if (stream.empty()) return {};
  TrackerState state = init_tracker(stream.front().A.cols(), r, x0, policy);
  std::vector<RoundOutcome> outcomes;
  outcomes.reserve(stream.size());
  for (size_t i = 0; i < stream.size(); ++i) {
    try {
      outcomes.push_back(step_tracker(state, params, stream[i]));
    } catch (const ShapeError& e) {
      throw ShapeError("round " + std::to_string(i) + ": " + e.what());
    }
  }
  return outcomes;
}

void write_trajectory_csv(const std::string& path,
                          const std::vector<RoundOutcome>& outcomes,
                          bool include_actions) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "t,loss_before,loss_after";
  if (include_actions && !outcomes.empty()) {
    for (Eigen::Index j = 0; j < outcomes.front().action_after.size(); ++j) {
      out << ",x" << j;
    }
  }
  out << '\n';
  for (const auto& o : outcomes) {
    out << o.t << ',' << format_real(o.loss_before) << ','
        << format_real(o.loss_after);
    if (include_actions) {
      for (Eigen::Index j = 0; j < o.action_after.size(); ++j) {
        out << ',' << format_real(o.action_after(j));
      }
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace sparsetrack
