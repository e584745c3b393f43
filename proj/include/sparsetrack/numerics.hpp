#ifndef SPARSETRACK_NUMERICS_HPP
#define SPARSETRACK_NUMERICS_HPP

#include <Eigen/Dense>

namespace sparsetrack {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/**
 * Component-wise soft thresholding: shrinks z toward zero by beta and zeroes
 * the dead zone [-beta, beta]. Non-expansive in z.
 *
 * Throws InvalidParameterError if beta <= 0 or not finite.
 */
double soft_threshold(double z, double beta);

/// Element-wise soft_threshold over a vector.
Vector soft_threshold(const Vector& v, double beta);

struct SpectralNormOptions {
  double tol = 1e-10;       // relative tolerance on the estimate
  long max_iter = 100000;   // per power-iteration pass
};

/**
 * Largest singular value of A via power iteration on A^T A.
 *
 * Deterministic: the first pass starts from the normalized all-ones vector; a
 * second pass restarts from the first basis vector deflated against the
 * converged direction, which catches a top singular vector orthogonal to the
 * all-ones start. The larger of the two estimates is returned.
 *
 * Throws ShapeError on an empty matrix and ConvergenceError (carrying the
 * best estimate) if the iteration cap is hit before the tolerance is met.
 */
double spectral_norm(const Matrix& a, const SpectralNormOptions& opts = {});

}  // namespace sparsetrack

#endif  // SPARSETRACK_NUMERICS_HPP
