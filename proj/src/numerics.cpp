#include "sparsetrack/numerics.hpp"

#include <cmath>

#include "sparsetrack/errors.hpp"

namespace sparsetrack {

double soft_threshold(double z, double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw InvalidParameterError("soft_threshold: beta must be positive and finite");
  }
  if (std::isnan(z)) return z;  // never launder a NaN into a zero
  if (z > beta) return z - beta;
  if (z < -beta) return z + beta;
  return 0.0;
}

Vector soft_threshold(const Vector& v, double beta) {
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    throw InvalidParameterError("soft_threshold: beta must be positive and finite");
  }
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double z = v(i);
    out(i) = std::isnan(z) ? z : (z > beta ? z - beta : (z < -beta ? z + beta : 0.0));
  }
  return out;
}

namespace {

// One power-iteration pass on A^T A from the given start; returns the
// converged sigma estimate or the best reached if the cap is hit.
struct PowerPass {
  double sigma = 0.0;
  Vector direction;
  bool converged = false;
};

PowerPass power_pass(const Matrix& a, Vector v, const SpectralNormOptions& opts) {
  PowerPass pass;
  const double norm0 = v.norm();
  if (norm0 == 0.0) {
    pass.converged = true;
    return pass;
  }
  v /= norm0;
  double sigma_prev = -1.0;
  double delta_prev = -1.0;
  double ratio_prev = -1.0;
  int ratio_stable = 0;
  for (long it = 0; it < opts.max_iter; ++it) {
    Vector w = a.transpose() * (a * v);
    const double wnorm = w.norm();
    if (wnorm == 0.0) {
      // start vector lies in the null space; sigma estimate is zero
      pass.sigma = 0.0;
      pass.direction = v;
      pass.converged = true;
      return pass;
    }
    v = w / wnorm;
    const double sigma = std::sqrt(wnorm);  // Rayleigh quotient of A^T A at unit v
    if (sigma_prev >= 0.0) {
      const double delta = std::abs(sigma - sigma_prev);
      const double floor = opts.tol * std::max(sigma, 1e-300);
      if (delta <= floor) {
        pass.sigma = sigma;
        pass.direction = v;
        pass.converged = true;
        return pass;
      }
      // Near-tied leading singular values decay the increments geometrically
      // but slowly; once the decay ratio is stable, the remaining climb is
      // delta * ratio / (1 - ratio) and the estimate can be accepted early.
      if (delta_prev > 0.0) {
        const double ratio = delta / delta_prev;
        if (ratio_prev > 0.0 && ratio < 1.0 &&
            std::abs(ratio - ratio_prev) <= 0.02) {
          ++ratio_stable;
          const double remaining = delta * ratio / (1.0 - ratio);
          if (ratio_stable >= 3 && remaining <= floor) {
            pass.sigma = sigma;
            pass.direction = v;
            pass.converged = true;
            return pass;
          }
        } else {
          ratio_stable = 0;
        }
        ratio_prev = ratio;
      }
      delta_prev = delta;
    }
    sigma_prev = sigma;
  }
  pass.sigma = sigma_prev;
  pass.direction = v;
  pass.converged = false;
  return pass;
}

}  // namespace

double spectral_norm(const Matrix& a, const SpectralNormOptions& opts) {
  if (a.rows() == 0 || a.cols() == 0) {
    throw ShapeError("spectral_norm: empty matrix");
  }
  if (!(opts.tol > 0.0)) {
    throw InvalidParameterError("spectral_norm: tol must be positive");
  }
  const Eigen::Index n = a.cols();

  PowerPass first = power_pass(a, Vector::Ones(n), opts);

  // Second deterministic start: e1 deflated against the converged direction.
  // Recovers the top singular value when it is orthogonal to all-ones.
  Vector probe = Vector::Zero(n);
  probe(0) = 1.0;
  if (first.direction.size() == n) {
    probe -= first.direction.dot(probe) * first.direction;
  }
  PowerPass second;
  second.converged = true;
  if (probe.norm() > 1e-12) {
    second = power_pass(a, probe, opts);
  }

  const double best = std::max(first.sigma, second.sigma);
  if (!first.converged || !second.converged) {
    throw ConvergenceError("spectral_norm: iteration cap reached before tolerance",
                           best);
  }
  return best;
}

}  // namespace sparsetrack
