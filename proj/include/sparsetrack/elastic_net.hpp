#ifndef SPARSETRACK_ELASTIC_NET_HPP
#define SPARSETRACK_ELASTIC_NET_HPP

#include "sparsetrack/numerics.hpp"

namespace sparsetrack {

/**
 * Weights of the time-indexed cost
 *
 *   f(x) = 1/2 ||y - A x||_2^2 + lambda ||x||_1 + mu/2 ||x||_2^2
 *
 * plus the iteration step size tau. All three must be positive.
 */
struct ElasticNetParams {
  double lambda = 0.0;
  double mu = 0.0;
  double tau = 0.0;

  // lambda*tau/(1 + mu*tau): the per-step shrinkage applied by ist_step.
  double shrinkage_threshold() const { return lambda * tau / (1.0 + mu * tau); }

  // 1/(1 + mu*tau), in (0,1): per-step contraction toward the minimizer.
  double contraction_factor() const { return 1.0 / (1.0 + mu * tau); }

  // Throws InvalidParameterError unless lambda, mu, tau > 0 and finite.
  void validate() const;
};

/// One revealed round: measurements y (length m) taken through A (m x n).
struct MeasurementRound {
  Matrix A;
  Vector y;
  long index = 0;
};

struct BatchSolveReport {
  Vector minimizer;
  long iterations = 0;
  double final_step_norm = 0.0;
  double optimality_residual = 0.0;
  bool converged = false;
};

/// Exact cost value; throws ShapeError on dimension mismatch.
double cost(const ElasticNetParams& params, const MeasurementRound& round,
            const Vector& x);

/**
 * Nonnegative quadratic gap 1/(2 tau) ||x-b||^2 - 1/2 ||A(x-b)||^2 that the
 * majorizing surrogate adds on top of the cost. Nonnegative whenever
 * tau ||A||_2^2 <= 1.
 */
double surrogate_gap(const ElasticNetParams& params, const MeasurementRound& round,
                     const Vector& x, const Vector& b);

/**
 * One iterative soft-thresholding step from b:
 *
 *   S_{lambda tau/(1+mu tau)}[ (b + tau A^T (y - A b)) / (1 + mu tau) ]
 *
 * This is the exact minimizer of the surrogate at anchor b; the cost
 * minimizer is its unique fixed point.
 */
Vector ist_step(const ElasticNetParams& params, const MeasurementRound& round,
                const Vector& b);

/// tau * ||A||_2^2; the step-size condition requires this <= 1.
double step_condition(const ElasticNetParams& params, const Matrix& a);

/**
 * Returns params with tau shrunk to safety/||A||_2^2 when the step-size
 * condition fails; identity otherwise. Callers opt in explicitly because the
 * rescale changes both the shrinkage threshold and the contraction factor.
 */
ElasticNetParams clamp_tau(const ElasticNetParams& params, const Matrix& a,
                           double safety = 0.99);

/**
 * Batch solve: iterate ist_step from x0 until the infinity-norm step falls
 * below tol or max_iter is reached. Never throws on non-convergence; the
 * report carries the best iterate and converged=false so the caller decides.
 *
 * Requires tau ||A||_2^2 <= 1 (throws AssumptionViolationError otherwise).
 */
BatchSolveReport batch_solve(const ElasticNetParams& params,
                             const MeasurementRound& round, const Vector& x0,
                             double tol = 1e-10, long max_iter = 200000);

/// batch_solve starting from the zero vector.
BatchSolveReport batch_solve(const ElasticNetParams& params,
                             const MeasurementRound& round, double tol = 1e-10,
                             long max_iter = 200000);

/**
 * Max-norm violation of the subdifferential optimality condition at x:
 * zero iff x is the exact minimizer. For nonzero components the condition is
 * |A^T(Ax - y)_i + mu x_i + lambda sign(x_i)|; for zero components the
 * distance of |A^T(Ax - y)_i| past lambda.
 */
double optimality_residual(const ElasticNetParams& params,
                           const MeasurementRound& round, const Vector& x);

}  // namespace sparsetrack

#endif  // SPARSETRACK_ELASTIC_NET_HPP
