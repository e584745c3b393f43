#include "sparsetrack/elastic_net.hpp"

#include <cmath>
#include <string>

#include "sparsetrack/errors.hpp"
#include "sparsetrack/numerics.hpp"

namespace sparsetrack {

void ElasticNetParams::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw InvalidParameterError("ElasticNetParams: lambda must be > 0");
  if (!(mu > 0.0) || !std::isfinite(mu))
    throw InvalidParameterError("ElasticNetParams: mu must be > 0");
  if (!(tau > 0.0) || !std::isfinite(tau))
    throw InvalidParameterError("ElasticNetParams: tau must be > 0");
}

namespace {

void check_dims(const MeasurementRound& round, const Vector& x,
                const char* who) {
  if (round.y.size() != round.A.rows()) {
    throw ShapeError(std::string(who) + ": y length " +
                     std::to_string(round.y.size()) + " != A rows " +
                     std::to_string(round.A.rows()));
  }
  if (x.size() != round.A.cols()) {
    throw ShapeError(std::string(who) + ": x length " +
                     std::to_string(x.size()) + " != A cols " +
                     std::to_string(round.A.cols()));
  }
}

}  // namespace

double cost(const ElasticNetParams& params, const MeasurementRound& round,
            const Vector& x) {
  params.validate();
  check_dims(round, x, "cost");
  const double ls = 0.5 * (round.y - round.A * x).squaredNorm();
  return ls + params.lambda * x.lpNorm<1>() + 0.5 * params.mu * x.squaredNorm();
}

double surrogate_gap(const ElasticNetParams& params, const MeasurementRound& round,
                     const Vector& x, const Vector& b) {
  params.validate();
  check_dims(round, x, "surrogate_gap");
  if (b.size() != x.size()) {
    throw ShapeError("surrogate_gap: x and b lengths differ");
  }
  const Vector d = x - b;
  return 0.5 / params.tau * d.squaredNorm() - 0.5 * (round.A * d).squaredNorm();
}

Vector ist_step(const ElasticNetParams& params, const MeasurementRound& round,
                const Vector& b) {
  params.validate();
  check_dims(round, b, "ist_step");
  const double scale = 1.0 + params.mu * params.tau;
  const Vector w =
      (b + params.tau * (round.A.transpose() * (round.y - round.A * b))) / scale;
  return soft_threshold(w, params.shrinkage_threshold());
}

double step_condition(const ElasticNetParams& params, const Matrix& a) {
  const double s = spectral_norm(a);
  return params.tau * s * s;
}

ElasticNetParams clamp_tau(const ElasticNetParams& params, const Matrix& a,
                           double safety) {
  if (!(safety > 0.0) || safety > 1.0) {
    throw InvalidParameterError("clamp_tau: safety must be in (0, 1]");
  }
  params.validate();
  const double s = spectral_norm(a);
  ElasticNetParams out = params;
  if (s > 0.0 && params.tau * s * s > safety) {
    out.tau = safety / (s * s);
  }
  return out;
}

BatchSolveReport batch_solve(const ElasticNetParams& params,
                             const MeasurementRound& round, const Vector& x0,
                             double tol, long max_iter) {
  params.validate();
  check_dims(round, x0, "batch_solve");
  if (!(tol > 0.0)) throw InvalidParameterError("batch_solve: tol must be > 0");
  const double condition = step_condition(params, round.A);
  if (condition > 1.0 + 1e-9) {
    throw AssumptionViolationError(
        "batch_solve: tau*||A||^2 = " + std::to_string(condition) +
            " violates the step-size condition",
        round.index, condition);
  }

  BatchSolveReport report;
  Vector x = x0;
  double step_norm = std::numeric_limits<double>::infinity();
  long it = 0;
  for (; it < max_iter; ++it) {
    Vector next = ist_step(params, round, x);
    step_norm = (next - x).lpNorm<Eigen::Infinity>();
    x = std::move(next);
    if (step_norm <= tol) {
      ++it;
      break;
    }
  }
  report.minimizer = std::move(x);
  report.iterations = it;
  report.final_step_norm = step_norm;
  report.converged = step_norm <= tol;
  report.optimality_residual = optimality_residual(params, round, report.minimizer);
  return report;
}

BatchSolveReport batch_solve(const ElasticNetParams& params,
                             const MeasurementRound& round, double tol,
                             long max_iter) {
  return batch_solve(params, round, Vector::Zero(round.A.cols()), tol, max_iter);
}

double optimality_residual(const ElasticNetParams& params,
                           const MeasurementRound& round, const Vector& x) {
  params.validate();
  check_dims(round, x, "optimality_residual");
  const Vector g = round.A.transpose() * (round.A * x - round.y);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double smooth = g(i) + params.mu * x(i);
    double violation;
    if (x(i) != 0.0) {
      violation = std::abs(smooth + params.lambda * (x(i) > 0.0 ? 1.0 : -1.0));
    } else {
      violation = std::max(std::abs(smooth) - params.lambda, 0.0);
    }
    worst = std::max(worst, violation);
  }
  return worst;
}

}  // namespace sparsetrack
