#include "sparsetrack/regret.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "sparsetrack/errors.hpp"
#include "sparsetrack/io.hpp"

namespace sparsetrack {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Reduced strongly convex quadratic on a fixed support with fixed signs:
//   min_w 1/2 ||y - A_S w||^2 + lambda sigma^T w + mu/2 ||w||^2
Vector solve_on_support(const Matrix& a, const Vector& y, double lambda, double mu,
                        const std::vector<Eigen::Index>& support,
                        const std::vector<double>& sign) {
  const auto k = static_cast<Eigen::Index>(support.size());
  Matrix as(a.rows(), k);
  Vector sg(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    as.col(j) = a.col(support[static_cast<size_t>(j)]);
    sg(j) = sign[static_cast<size_t>(j)];
  }
  Matrix h = as.transpose() * as;
  h.diagonal().array() += mu;
  return h.ldlt().solve(as.transpose() * y - lambda * sg);
}

}  // namespace

Vector oracle_solve(const ElasticNetParams& params, const MeasurementRound& round,
                    const Vector& warm, const OracleOptions& opts) {
  params.validate();
  const Eigen::Index n = round.A.cols();
  if (warm.size() != n) throw ShapeError("oracle_solve: warm start length != n");
  if (round.y.size() != round.A.rows())
    throw ShapeError("oracle_solve: y length != A rows");

  // All-zero solution short-circuit.
  if ((round.A.transpose() * round.y).lpNorm<Eigen::Infinity>() <= params.lambda) {
    return Vector::Zero(n);
  }

  const double a_norm = spectral_norm(round.A);
  ElasticNetParams solver = params;
  if (a_norm > 0.0) solver.tau = std::min(params.tau, 0.99 / (a_norm * a_norm));

  // Phase 1: plain IST. With polish enabled this only needs to get close
  // enough for support identification.
  Vector x = warm;
  const double phase1_tol = opts.polish ? std::max(opts.tol, 1e-8) : opts.tol;
  const long phase1_cap = opts.polish ? std::min<long>(opts.max_iter, 30000)
                                      : opts.max_iter;
  for (long it = 0; it < phase1_cap; ++it) {
    Vector next = ist_step(solver, round, x);
    const double step = (next - x).lpNorm<Eigen::Infinity>();
    x = std::move(next);
    if (step <= phase1_tol) break;
  }

  if (opts.polish) {
    std::vector<double> sigma(static_cast<size_t>(n), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (x(i) > 0.0) sigma[static_cast<size_t>(i)] = 1.0;
      if (x(i) < 0.0) sigma[static_cast<size_t>(i)] = -1.0;
    }
    const double add_tol = 1e-12 * std::max(1.0, params.lambda);
    for (int pass = 0; pass < 200; ++pass) {
      std::vector<Eigen::Index> support;
      std::vector<double> sign;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (sigma[static_cast<size_t>(i)] != 0.0) {
          support.push_back(i);
          sign.push_back(sigma[static_cast<size_t>(i)]);
        }
      }
      if (support.empty()) {
        const Vector g = -(round.A.transpose() * round.y);
        Eigen::Index j = 0;
        const double worst = g.cwiseAbs().maxCoeff(&j);
        if (worst <= params.lambda + add_tol) {
          x.setZero();
          break;
        }
        sigma[static_cast<size_t>(j)] = g(j) > 0.0 ? -1.0 : 1.0;
        continue;
      }

      const Vector w = solve_on_support(round.A, round.y, params.lambda, params.mu,
                                        support, sign);

      bool consistent = true;
      double theta = 1.0;
      for (size_t k = 0; k < support.size(); ++k) {
        if (w(static_cast<Eigen::Index>(k)) * sign[k] <= 0.0) {
          consistent = false;
          const double xi = x(support[k]);
          const double wi = w(static_cast<Eigen::Index>(k));
          const double denom = xi - wi;
          theta = std::min(theta, denom != 0.0 ? xi / denom : 0.0);
        }
      }
      if (!consistent) {
        // Partial step toward w until the first coordinate hits zero; that
        // coordinate leaves the support.
        theta = std::clamp(theta, 0.0, 1.0);
        for (size_t k = 0; k < support.size(); ++k) {
          const Eigen::Index i = support[k];
          const double wi = w(static_cast<Eigen::Index>(k));
          double xi = x(i) + theta * (wi - x(i));
          if (wi * sign[k] <= 0.0 && (xi * sign[k] <= 0.0 || theta == 0.0)) {
            xi = 0.0;
            sigma[static_cast<size_t>(i)] = 0.0;
          }
          x(i) = xi;
        }
        continue;
      }

      Vector candidate = Vector::Zero(n);
      for (size_t k = 0; k < support.size(); ++k) {
        candidate(support[k]) = w(static_cast<Eigen::Index>(k));
      }
      const Vector g = round.A.transpose() * (round.A * candidate - round.y);
      Eigen::Index worst_j = -1;
      double worst_violation = add_tol;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (candidate(i) != 0.0) continue;
        const double violation = std::abs(g(i)) - params.lambda;
        if (violation > worst_violation) {
          worst_violation = violation;
          worst_j = i;
        }
      }
      x = std::move(candidate);
      if (worst_j < 0) break;
      sigma[static_cast<size_t>(worst_j)] = g(worst_j) > 0.0 ? -1.0 : 1.0;
    }
  }

  double residual = optimality_residual(params, round, x);
  if (residual > opts.residual_tol) {
    // Fall back to the full IST budget before giving up.
    for (long it = 0; it < opts.max_iter; ++it) {
      Vector next = ist_step(solver, round, x);
      const double step = (next - x).lpNorm<Eigen::Infinity>();
      x = std::move(next);
      if (step <= opts.tol) break;
    }
    residual = optimality_residual(params, round, x);
    if (residual > opts.residual_tol) {
      throw OracleFailureError(
          "oracle_solve: residual " + std::to_string(residual) +
              " above tolerance at round " + std::to_string(round.index),
          round.index);
    }
  }
  return x;
}

std::vector<Vector> minimizer_path(const std::vector<MeasurementRound>& stream,
                                   const ElasticNetParams& params,
                                   const OracleOptions& opts) {
  std::vector<Vector> path;
  path.reserve(stream.size());
  Vector warm;
  for (size_t i = 0; i < stream.size(); ++i) {
    if (warm.size() != stream[i].A.cols()) warm = Vector::Zero(stream[i].A.cols());
    path.push_back(oracle_solve(params, stream[i], warm, opts));
    warm = path.back();
  }
  return path;
}

double dynamic_regret(const std::vector<Vector>& trajectory,
                      const std::vector<Vector>& z_path,
                      const ElasticNetParams& params,
                      const std::vector<MeasurementRound>& stream) {
  if (trajectory.size() != z_path.size() || trajectory.size() != stream.size()) {
    throw ShapeError("dynamic_regret: trajectory, minimizer path and stream "
                     "lengths must agree");
  }
  double total = 0.0;
  for (size_t t = 0; t < stream.size(); ++t) {
    total += cost(params, stream[t], trajectory[t]) -
             cost(params, stream[t], z_path[t]);
  }
  return total;
}

PathLength path_length(const std::vector<Vector>& z_path) {
  if (z_path.size() < 2) {
    throw ShapeError("path_length: need at least two points");
  }
  PathLength out;
  for (size_t t = 1; t < z_path.size(); ++t) {
    const double d = (z_path[t] - z_path[t - 1]).norm();
    out.sum_linear += d;
    out.sum_quadratic += d * d;
  }
  return out;
}

std::vector<double> theta_path(const std::vector<MeasurementRound>& stream,
                               const std::vector<Vector>& truth,
                               const ElasticNetParams& params, double z_m,
                               double v_m) {
  params.validate();
  if (truth.empty()) {
    throw UnsupportedOperationError(
        "theta_path: needs the true signal sequence (synthetic runs only)");
  }
  if (truth.size() != stream.size()) {
    throw ShapeError("theta_path: truth length != stream length");
  }
  std::vector<double> thetas;
  thetas.reserve(stream.size() > 0 ? stream.size() - 1 : 0);
  for (size_t t = 1; t < stream.size(); ++t) {
    const Matrix gram_shift = stream[t].A.transpose() * stream[t].A -
                              stream[t - 1].A.transpose() * stream[t - 1].A;
    const double shift_norm = spectral_norm(gram_shift);
    const double theta =
        (z_m + v_m) * shift_norm / params.mu +
        (truth[t] - truth[t - 1]).norm() / (params.mu * params.tau);
    thetas.push_back(theta);
  }
  return thetas;
}

BoundConstants bound_constants(const std::vector<Vector>& trajectory,
                               const std::vector<Vector>& z_path,
                               const ElasticNetParams& params, double z_m,
                               double v_m, ConstantsVariant variant) {
  params.validate();
  if (trajectory.size() != z_path.size() + 1) {
    throw ShapeError("bound_constants: trajectory must hold x_0..x_T");
  }
  if (z_path.empty()) throw ShapeError("bound_constants: empty minimizer path");
  for (const auto& z : z_path) {
    if (z.norm() > z_m * (1.0 + 1e-12) + 1e-12) {
      throw InvalidParameterError("bound_constants: z_m smaller than max ||z_t||");
    }
  }

  const size_t horizon = z_path.size();
  const double mu_tau = params.mu * params.tau;
  const double kappa = 1.0 / (1.0 + mu_tau);
  const double inv_tau = 1.0 / params.tau;

  BoundConstants out;
  out.variant = variant;
  out.c2 = (1.0 + mu_tau) / mu_tau;
  out.c5 = 4.0 * z_m / (1.0 + mu_tau);
  out.gamma1 = 2.0 * (v_m + z_m) / params.tau;
  out.gamma2 = inv_tau;

  if (variant == ConstantsVariant::AsPrinted) {
    // Closed forms exactly as typeset, on post-update distances ||x_t - z_t||.
    const double u1 = (trajectory[1] - z_path[0]).norm();
    const double uT = (trajectory[horizon] - z_path[horizon - 1]).norm();
    out.c1 = (u1 - uT) / mu_tau;
    out.c3 = (u1 * u1 - uT * uT) / (mu_tau * (mu_tau + 2.0)) + out.c5 * (u1 - uT);
    out.c4 = (1.0 + params.mu * params.tau * params.tau) / (mu_tau * (mu_tau + 2.0));
    out.alpha0 = (inv_tau + out.gamma2) + out.gamma1 * out.c1 + out.c3 +
                 inv_tau * (u1 * u1 - uT * uT);
    out.alpha1 = (inv_tau + out.gamma2) * out.c5 + out.gamma1 * out.c2;
    out.alpha2 = (inv_tau + out.gamma2) * out.c4;
    return out;
  }

  // Exact resummation of the per-round recursions, on pre-update distances
  // p_t = ||x_{t-1} - z_t|| (the trajectory the per-round bounds hold on).
  const double p1 = (trajectory[0] - z_path[0]).norm();
  const double pT = (trajectory[horizon - 1] - z_path[horizon - 1]).norm();
  const double gap_factor = 1.0 - kappa * kappa;  // = mu_tau (mu_tau + 2) / (1 + mu_tau)^2
  out.c1 = (p1 - pT) / mu_tau;
  out.c4 = 1.0 / gap_factor;
  out.c3 = (kappa * kappa * (p1 * p1 - pT * pT) +
            out.c5 * (out.c1 + p1 - pT)) / gap_factor;
  const double c5_resummed = out.c5 * out.c2 / gap_factor;
  out.c5 = c5_resummed;
  // Round-1 cover term: the first loss gap obeys gap_1 <= (1/tau) p_1^2.
  out.alpha0 = out.gamma1 * out.c1 + (inv_tau + out.gamma2) * out.c3 +
               inv_tau * (p1 * p1 - pT * pT) + inv_tau * p1 * p1;
  out.alpha1 = out.gamma1 * out.c2 + (inv_tau + out.gamma2) * out.c5;
  out.alpha2 = (inv_tau + out.gamma2) * out.c4;
  return out;
}

RegretLedger build_ledger(const std::vector<MeasurementRound>& stream,
                          const std::vector<RoundOutcome>& outcomes,
                          const std::vector<Vector>& z_path,
                          const ElasticNetParams& params,
                          const std::vector<Vector>& truth) {
  if (outcomes.size() != stream.size() || z_path.size() != stream.size()) {
    throw ShapeError("build_ledger: stream, outcomes and minimizer path "
                     "lengths must agree");
  }
  if (!truth.empty() && truth.size() != stream.size()) {
    throw ShapeError("build_ledger: truth length != stream length");
  }

  RegretLedger ledger;
  ledger.has_truth = !truth.empty();
  if (!outcomes.empty()) ledger.x0 = outcomes.front().action_before;

  for (const auto& z : z_path) ledger.z_m = std::max(ledger.z_m, z.norm());
  for (const auto& v : truth) ledger.v_m = std::max(ledger.v_m, v.norm());

  std::vector<double> thetas;
  if (ledger.has_truth && stream.size() >= 2) {
    thetas = theta_path(stream, truth, params, ledger.z_m, ledger.v_m);
  }

  ledger.rows.reserve(stream.size());
  for (size_t i = 0; i < stream.size(); ++i) {
    LedgerRow row;
    row.t = static_cast<long>(i) + 1;
    row.x = outcomes[i].action_after;
    row.z = z_path[i];
    row.f_x = outcomes[i].loss_after;
    row.f_z = cost(params, stream[i], z_path[i]);
    row.gap = row.f_x - row.f_z;
    row.pre_dist = (outcomes[i].action_before - z_path[i]).norm();
    row.post_dist = (outcomes[i].action_after - z_path[i]).norm();
    row.delta = i == 0 ? kNan : (z_path[i] - z_path[i - 1]).norm();
    row.theta = (i == 0 || thetas.empty()) ? kNan : thetas[i - 1];
    ledger.regret_total += row.gap;
    ledger.rows.push_back(std::move(row));
  }
  return ledger;
}

namespace {

AuditCheck worst_over_rounds(const std::string& name,
                             const std::vector<std::pair<long, double>>& margins,
                             bool gating, bool applicable = true) {
  AuditCheck check;
  check.name = name;
  check.gating = gating;
  check.applicable = applicable && !margins.empty();
  if (!check.applicable) {
    check.passed = true;
    return check;
  }
  check.worst_margin = std::numeric_limits<double>::infinity();
  for (const auto& [t, margin] : margins) {
    if (margin < check.worst_margin) {
      check.worst_margin = margin;
      check.worst_round = t;
    }
  }
  check.passed = check.worst_margin >= 0.0;
  return check;
}

AuditCheck scalar_check(const std::string& name, double margin, bool gating,
                        bool applicable = true) {
  AuditCheck check;
  check.name = name;
  check.gating = gating;
  check.applicable = applicable;
  check.worst_margin = margin;
  check.passed = !applicable || margin >= 0.0;
  return check;
}

}  // namespace

AuditReport audit(const std::vector<MeasurementRound>& stream,
                  const RegretLedger& ledger, const ElasticNetParams& params,
                  int r, double slack_per_round) {
  params.validate();
  if (r < 1) throw InvalidParameterError("audit: r must be >= 1");
  if (stream.size() != ledger.rows.size()) {
    throw ShapeError("audit: stream and ledger lengths differ");
  }

  AuditReport report;
  report.r = r;
  report.slack_per_round = slack_per_round;
  report.regret_measured = ledger.regret_total;
  const size_t horizon = ledger.rows.size();
  if (horizon == 0) {
    report.all_passed = true;
    return report;
  }

  const double slack = slack_per_round;
  const double total_slack = slack * static_cast<double>(horizon);
  const double mu_tau = params.mu * params.tau;
  const double kappa = 1.0 / (1.0 + mu_tau);
  const double kappa_r = std::pow(kappa, r);
  const double inv_tau = 1.0 / params.tau;

  for (const auto& round : stream) {
    report.max_step_condition =
        std::max(report.max_step_condition, step_condition(params, round.A));
  }
  report.checks.push_back(scalar_check(
      "step_size_condition", 1.0 + 1e-9 - report.max_step_condition, true));

  // Trajectories: pre distances p_t drive the resummed bounds, post
  // distances u_t the as-typeset closed forms.
  std::vector<double> pre(horizon), post(horizon), gaps(horizon);
  for (size_t i = 0; i < horizon; ++i) {
    pre[i] = ledger.rows[i].pre_dist;
    post[i] = ledger.rows[i].post_dist;
    gaps[i] = ledger.rows[i].gap;
  }
  for (size_t i = 1; i < horizon; ++i) {
    const double d = ledger.rows[i].delta;
    report.sum_delta += d;
    report.sum_delta_sq += d * d;
  }

  // (i) per-round contraction of the r-fold update toward the round minimizer
  {
    std::vector<std::pair<long, double>> margins;
    for (size_t i = 0; i < horizon; ++i) {
      margins.emplace_back(ledger.rows[i].t, kappa_r * pre[i] + slack - post[i]);
    }
    report.checks.push_back(
        worst_over_rounds("per_round_contraction", margins, true));
  }

  // Constants (both variants) need x_0..x_T; rebuild from the ledger.
  std::vector<Vector> trajectory;
  trajectory.reserve(horizon + 1);
  trajectory.push_back(ledger.x0);
  std::vector<Vector> z_path;
  z_path.reserve(horizon);
  for (const auto& row : ledger.rows) {
    trajectory.push_back(row.x);
    z_path.push_back(row.z);
  }
  report.printed = bound_constants(trajectory, z_path, params, ledger.z_m,
                                   ledger.v_m, ConstantsVariant::AsPrinted);
  report.rederived = bound_constants(trajectory, z_path, params, ledger.z_m,
                                     ledger.v_m, ConstantsVariant::ReDerived);

  // (ii) cumulative distance sums, t = 2..T
  {
    double sum_pre = 0.0, sum_pre_sq = 0.0, sum_post = 0.0, sum_post_sq = 0.0;
    for (size_t i = 1; i < horizon; ++i) {
      sum_pre += pre[i];
      sum_pre_sq += pre[i] * pre[i];
      sum_post += post[i];
      sum_post_sq += post[i] * post[i];
    }
    const bool applicable = horizon >= 2;
    const auto& rd = report.rederived;
    report.checks.push_back(scalar_check(
        "cumulative_distance_linear",
        rd.c1 + rd.c2 * report.sum_delta + total_slack - sum_pre, true,
        applicable));
    report.checks.push_back(scalar_check(
        "cumulative_distance_quadratic",
        rd.c3 + rd.c4 * report.sum_delta_sq + rd.c5 * report.sum_delta +
            total_slack - sum_pre_sq,
        true, applicable));
    const auto& pr = report.printed;
    report.checks.push_back(scalar_check(
        "cumulative_distance_linear_printed",
        pr.c1 + pr.c2 * report.sum_delta + total_slack - sum_post, false,
        applicable));
    report.checks.push_back(scalar_check(
        "cumulative_distance_quadratic_printed",
        pr.c3 + pr.c4 * report.sum_delta_sq + pr.c5 * report.sum_delta +
            total_slack - sum_post_sq,
        false, applicable));
  }

  // (iii) per-round surrogate descent: the round's loss gap is controlled by
  // the pre-update distance to the round's minimizer.
  {
    std::vector<std::pair<long, double>> margins;
    for (size_t i = 0; i < horizon; ++i) {
      margins.emplace_back(ledger.rows[i].t,
                           inv_tau * pre[i] * pre[i] + slack - gaps[i]);
    }
    report.checks.push_back(
        worst_over_rounds("per_round_surrogate_descent", margins, true));
  }

  // (iv) per-round cost drift between consecutive rounds, evaluated at the
  // played action x_{t-1} and the round minimizer z_t.
  {
    std::vector<std::pair<long, double>> margins;
    for (size_t i = 1; i < horizon; ++i) {
      const Vector& played = trajectory[i];  // x_{t-1}
      const Vector& z = z_path[i];
      const double drift_x = cost(params, stream[i], played) -
                             cost(params, stream[i - 1], played);
      const double drift_z =
          cost(params, stream[i], z) - cost(params, stream[i - 1], z);
      const double lhs = drift_x - drift_z;
      const double bound = report.rederived.gamma1 * pre[i] +
                           report.rederived.gamma2 * pre[i] * pre[i];
      margins.emplace_back(ledger.rows[i].t, bound + slack - lhs);
    }
    report.checks.push_back(worst_over_rounds("per_round_cost_drift", margins,
                                              true, horizon >= 2));
  }

  // (v) total regret bound
  report.rhs_rederived = report.rederived.alpha0 +
                         report.rederived.alpha1 * report.sum_delta +
                         report.rederived.alpha2 * report.sum_delta_sq;
  report.rhs_printed = report.printed.alpha0 +
                       report.printed.alpha1 * report.sum_delta +
                       report.printed.alpha2 * report.sum_delta_sq;
  report.checks.push_back(scalar_check(
      "regret_bound",
      report.rhs_rederived + total_slack - report.regret_measured, true));
  report.checks.push_back(scalar_check(
      "regret_bound_printed",
      report.rhs_printed + total_slack - report.regret_measured, false));

  // (vi) minimizer shift vs system shift, synthetic runs only
  {
    std::vector<std::pair<long, double>> margins;
    if (ledger.has_truth) {
      for (size_t i = 1; i < horizon; ++i) {
        margins.emplace_back(ledger.rows[i].t,
                             ledger.rows[i].theta + slack - ledger.rows[i].delta);
      }
    }
    report.checks.push_back(worst_over_rounds(
        "minimizer_shift_bound", margins, true, ledger.has_truth && horizon >= 2));
  }

  report.all_passed = true;
  for (const auto& check : report.checks) {
    if (check.gating && check.applicable && !check.passed) {
      report.all_passed = false;
    }
  }
  return report;
}

void write_ledger_csv(const std::string& path, const RegretLedger& ledger) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "t,f_x,f_z,gap,delta,theta\n";
  for (const auto& row : ledger.rows) {
    out << row.t << ',' << format_real(row.f_x) << ',' << format_real(row.f_z)
        << ',' << format_real(row.gap) << ',' << format_real(row.delta) << ','
        << format_real(row.theta) << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

namespace {

nlohmann::json constants_to_json(const BoundConstants& c) {
  return {
      {"variant", c.variant == ConstantsVariant::AsPrinted ? "as-printed"
                                                           : "re-derived"},
      {"c1", c.c1},       {"c2", c.c2},       {"c3", c.c3},
      {"c4", c.c4},       {"c5", c.c5},       {"gamma1", c.gamma1},
      {"gamma2", c.gamma2}, {"alpha0", c.alpha0}, {"alpha1", c.alpha1},
      {"alpha2", c.alpha2},
  };
}

}  // namespace

std::string audit_report_to_json(const AuditReport& report) {
  nlohmann::json doc;
  doc["r"] = report.r;
  doc["slack_per_round"] = report.slack_per_round;
  doc["regret_measured"] = report.regret_measured;
  doc["rhs_rederived"] = report.rhs_rederived;
  doc["rhs_printed"] = report.rhs_printed;
  doc["sum_delta"] = report.sum_delta;
  doc["sum_delta_sq"] = report.sum_delta_sq;
  doc["max_step_condition"] = report.max_step_condition;
  doc["all_passed"] = report.all_passed;
  doc["constants"] = {constants_to_json(report.rederived),
                      constants_to_json(report.printed)};
  doc["checks"] = nlohmann::json::array();
  for (const auto& check : report.checks) {
    doc["checks"].push_back({{"name", check.name},
                             {"applicable", check.applicable},
                             {"passed", check.passed},
                             {"gating", check.gating},
                             {"worst_margin", check.worst_margin},
                             {"worst_round", check.worst_round}});
  }
  return doc.dump(2) + "\n";
}

}  // namespace sparsetrack
