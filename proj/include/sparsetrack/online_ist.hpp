#ifndef SPARSETRACK_ONLINE_IST_HPP
#define SPARSETRACK_ONLINE_IST_HPP

#include <optional>
#include <vector>

#include "sparsetrack/elastic_net.hpp"

namespace sparsetrack {

/**
 * What to do when a round violates the step-size condition tau||A||^2 <= 1.
 *
 * Enforce (default) aborts the run; RescaleTau shrinks tau to 0.99/||A||^2
 * for that round only. Rescaled runs are excluded from bound audits because
 * the rescale changes the shrinkage threshold and contraction factor.
 */
enum class StepSizePolicy { Enforce, RescaleTau };

/// Streaming tracker state: current action x, round counter t, steps per round r.
struct TrackerState {
  Vector x;
  long t = 0;
  int r = 1;
  StepSizePolicy policy = StepSizePolicy::Enforce;
};

struct RoundOutcome {
  long t = 0;                // 1-based round counter after the update
  Vector action_before;      // what the player held when the round arrived
  Vector action_after;       // after r soft-thresholding steps on this round
  double loss_before = 0.0;  // f_t(action_before)
  double loss_after = 0.0;   // f_t(action_after); the regret ledger uses this
  double tau_used = 0.0;     // differs from params.tau only under RescaleTau
};

/**
 * Fresh tracker of dimension n with r steps per round; x0 defaults to zero.
 * Throws ShapeError if n < 1, r < 1, or x0 has the wrong length.
 */
TrackerState init_tracker(long n, int r, const std::optional<Vector>& x0 = {},
                          StepSizePolicy policy = StepSizePolicy::Enforce);

/**
 * Consume one round: apply ist_step r times with this round's (A, y),
 * advance t. Throws AssumptionViolationError under the Enforce policy when
 * tau ||A||^2 > 1 (+1e-9 slack), ShapeError on dimension mismatch.
 */
RoundOutcome step_tracker(TrackerState& state, const ElasticNetParams& params,
                          const MeasurementRound& round);

/**
 * Fold step_tracker over a finite stream. Deterministic: identical inputs
 * produce bit-identical trajectories. Errors from step_tracker propagate with
 * the failing round index in the message.
 */
std::vector<RoundOutcome> run_tracker(const std::vector<MeasurementRound>& stream,
                                      const ElasticNetParams& params, int r,
                                      const std::optional<Vector>& x0 = {},
                                      StepSizePolicy policy = StepSizePolicy::Enforce);

/**
 * Trajectory CSV: header then one line per round with t, loss_before,
 * loss_after, and (when include_actions) the components of action_after.
 */
void write_trajectory_csv(const std::string& path,
                          const std::vector<RoundOutcome>& outcomes,
                          bool include_actions = false);

}  // namespace sparsetrack

#endif  // SPARSETRACK_ONLINE_IST_HPP
