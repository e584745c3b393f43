#ifndef SPARSETRACK_TESTS_GENERATORS_HPP
#define SPARSETRACK_TESTS_GENERATORS_HPP

// Random problem generators shared by the property and acceptance suites.
// Every instance satisfies the step-size condition by construction.

#include <vector>

#include "sparsetrack/elastic_net.hpp"
#include "sparsetrack/numerics.hpp"
#include "sparsetrack/rng.hpp"

namespace test_support {

using sparsetrack::ElasticNetParams;
using sparsetrack::Matrix;
using sparsetrack::MeasurementRound;
using sparsetrack::Rng;
using sparsetrack::Vector;

struct RandomInstance {
  ElasticNetParams params;
  MeasurementRound round;
};

inline Matrix random_matrix(Rng& rng, long m, long n) {
  Matrix a(m, n);
  for (long i = 0; i < m; ++i)
    for (long j = 0; j < n; ++j) a(i, j) = rng.normal();
  return a;
}

inline Vector random_sparse(Rng& rng, long n, long nonzeros) {
  Vector v = Vector::Zero(n);
  for (long k = 0; k < nonzeros; ++k) {
    v(rng.uniform_int(0, n - 1)) = rng.uniform(-2.0, 2.0);
  }
  return v;
}

/**
 * Random instance with n <= 20, m <= 15, lambda/mu log-uniform, and
 * tau = fill / ||A||^2 with fill in [0.3, 0.99]. mu tau stays above ~3e-4 so
 * batch solves converge well inside the default cap.
 */
inline RandomInstance random_instance(Rng& rng) {
  RandomInstance out;
  const long n = rng.uniform_int(1, 20);
  const long m = rng.uniform_int(1, 15);
  out.round.A = random_matrix(rng, m, n);
  const Vector truth = random_sparse(rng, n, std::max<long>(1, n / 4));
  Vector noise(m);
  for (long i = 0; i < m; ++i) noise(i) = 0.05 * rng.normal();
  out.round.y = out.round.A * truth + noise;

  const double norm = sparsetrack::spectral_norm(out.round.A);
  const double norm_sq = std::max(norm * norm, 1e-12);
  out.params.tau = rng.uniform(0.3, 0.99) / norm_sq;
  out.params.mu = std::pow(10.0, rng.uniform(-3.0, 0.0)) / out.params.tau * 1e-2;
  out.params.mu = std::max(out.params.mu, 1e-3);
  const double grad_scale =
      (out.round.A.transpose() * out.round.y).cwiseAbs().maxCoeff();
  out.params.lambda = std::max(1e-3, rng.uniform(0.05, 0.5) * grad_scale);
  return out;
}

struct RandomStream {
  ElasticNetParams params;
  std::vector<MeasurementRound> rounds;
  std::vector<Vector> truth;
  int r = 1;
};

/**
 * Noiseless time-varying stream (y_t = A_t v_t exactly) satisfying the
 * step-size condition on every round. Mixes static phases, small drifts and
 * occasional jumps in both the matrix and the signal.
 */
inline RandomStream random_stream(Rng& rng) {
  RandomStream out;
  const long n = rng.uniform_int(2, 20);
  const long m = rng.uniform_int(2, 15);
  const long horizon = rng.uniform_int(10, 50);
  const bool matrix_varies = rng.uniform01() < 0.6;

  Matrix base = random_matrix(rng, m, n);
  base /= sparsetrack::spectral_norm(base);  // unit spectral norm

  Vector v = random_sparse(rng, n, std::max<long>(1, n / 4));
  out.params.tau = rng.uniform(0.3, 0.95);
  out.params.mu = std::pow(10.0, rng.uniform(-3.0, 0.0));
  out.params.lambda = std::pow(10.0, rng.uniform(-3.0, -0.5));
  const int r_choices[] = {1, 1, 1, 2, 5};
  out.r = r_choices[rng.uniform_int(0, 4)];

  for (long t = 0; t < horizon; ++t) {
    if (matrix_varies && t > 0) {
      Matrix jitter = random_matrix(rng, m, n);
      base += 0.02 * jitter;
      base /= std::max(1.0, sparsetrack::spectral_norm(base));
    }
    if (t > 0) {
      if (rng.uniform01() < 0.08) {
        v = random_sparse(rng, n, std::max<long>(1, n / 4));  // jump
      } else if (rng.uniform01() < 0.7) {
        v += (0.05 / static_cast<double>(t)) * random_sparse(rng, n, 1);  // drift
      }
    }
    MeasurementRound round;
    round.A = base;
    round.y = base * v;
    round.index = t;
    out.rounds.push_back(std::move(round));
    out.truth.push_back(v);
  }
  return out;
}

}  // namespace test_support

#endif
