#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sparsetrack/elastic_net.hpp"
#include "sparsetrack/errors.hpp"
#include "sparsetrack/rng.hpp"
#include "support/generators.hpp"
#include "support/reference_solver.hpp"

using namespace sparsetrack;
using test_support::random_instance;

namespace {

MeasurementRound one_dim_round() {
  MeasurementRound round;
  round.A = Matrix::Ones(1, 1);
  round.y = Vector::Ones(1);
  return round;
}

}  // namespace

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS((ElasticNetParams{0.0, 1.0, 1.0}).validate(), InvalidParameterError);
  CHECK_THROWS_AS((ElasticNetParams{1.0, -1.0, 1.0}).validate(), InvalidParameterError);
  CHECK_THROWS_AS((ElasticNetParams{1.0, 1.0, 0.0}).validate(), InvalidParameterError);
  const ElasticNetParams ok{1.0, 2.0, 0.25};
  ok.validate();
  CHECK(ok.shrinkage_threshold() == doctest::Approx(0.25 / 1.5));
  CHECK(ok.contraction_factor() == doctest::Approx(1.0 / 1.5));
}

TEST_CASE("cost on the identity instance") {
  ElasticNetParams params{1.0, 1.0, 0.5};
  MeasurementRound round;
  round.A = Matrix::Identity(2, 2);
  round.y = Vector(2);
  round.y << 1.0, 0.0;
  CHECK(cost(params, round, Vector::Zero(2)) == doctest::Approx(0.5));
  Vector x(2);
  x << 1.0, 0.0;
  CHECK(cost(params, round, x) == doctest::Approx(1.5));
  CHECK_THROWS_AS(cost(params, round, Vector::Zero(3)), ShapeError);
}

TEST_CASE("cost matches the term-by-term oracle") {
  Rng rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    auto [params, round] = random_instance(rng);
    Vector x(round.A.cols());
    for (long i = 0; i < x.size(); ++i) x(i) = rng.uniform(-2.0, 2.0);
    const double expected =
        test_support::cost_oracle(round.A, round.y, params.lambda, params.mu, x);
    CHECK(cost(params, round, x) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(cost(params, round, x) >= 0.0);
  }
}

TEST_CASE("surrogate gap") {
  ElasticNetParams params{1.0, 1.0, 0.5};
  MeasurementRound round;
  round.A = Matrix::Zero(2, 3);
  round.y = Vector::Zero(2);
  Vector x = Vector::Zero(3), b = Vector::Zero(3);
  CHECK(surrogate_gap(params, round, x, b) == 0.0);
  x(1) = 1.0;  // unit difference, zero matrix: gap = 1/(2 tau)
  CHECK(surrogate_gap(params, round, x, b) == doctest::Approx(1.0));

  Rng rng(103);
  for (int trial = 0; trial < 100; ++trial) {
    auto instance = random_instance(rng);
    const long n = instance.round.A.cols();
    Vector xx(n), bb(n);
    for (long i = 0; i < n; ++i) {
      xx(i) = rng.uniform(-2.0, 2.0);
      bb(i) = rng.uniform(-2.0, 2.0);
    }
    const double gap = surrogate_gap(instance.params, instance.round, xx, bb);
    const Vector d = xx - bb;
    const double direct = 0.5 / instance.params.tau * d.squaredNorm() -
                          0.5 * (instance.round.A * d).squaredNorm();
    CHECK(gap == doctest::Approx(direct).epsilon(1e-12));
    CHECK(gap >= -1e-12);  // step-size condition holds by construction
  }
}

TEST_CASE("surrogate minimization sandwich") {
  // ist_step(b) minimizes cost + gap at anchor b, so it beats any competitor.
  Rng rng(107);
  for (int trial = 0; trial < 100; ++trial) {
    auto [params, round] = random_instance(rng);
    const long n = round.A.cols();
    Vector b(n), competitor(n);
    for (long i = 0; i < n; ++i) {
      b(i) = rng.uniform(-2.0, 2.0);
      competitor(i) = rng.uniform(-2.0, 2.0);
    }
    const Vector stepped = ist_step(params, round, b);
    const double stepped_value =
        cost(params, round, stepped) + surrogate_gap(params, round, stepped, b);
    const double competitor_value = cost(params, round, competitor) +
                                    surrogate_gap(params, round, competitor, b);
    CHECK(stepped_value <= competitor_value + 1e-10);
    CHECK(cost(params, round, stepped) <= stepped_value + 1e-12);
    // monotone descent
    CHECK(cost(params, round, stepped) <= cost(params, round, b) + 1e-12);
  }
}

TEST_CASE("ist_step closed form") {
  ElasticNetParams params{0.1, 0.1, 0.5};
  const MeasurementRound round = one_dim_round();
  const Vector stepped = ist_step(params, round, Vector::Zero(1));
  CHECK(stepped(0) == doctest::Approx(0.45 / 1.05).epsilon(1e-12));

  // zero matrix: measurement drops out of the formula
  MeasurementRound zero;
  zero.A = Matrix::Zero(2, 2);
  zero.y = Vector::Ones(2);
  Vector b(2);
  b << 2.0, -0.01;
  const Vector out = ist_step(params, zero, b);
  const double scale = 1.0 + params.mu * params.tau;
  CHECK(out(0) ==
        doctest::Approx(2.0 / scale - params.shrinkage_threshold()));
  CHECK(out(1) == 0.0);

  CHECK_THROWS_AS(ist_step(params, round, Vector::Zero(2)), ShapeError);
}

TEST_CASE("batch solve on the one-dimensional instance") {
  ElasticNetParams params{0.1, 0.1, 0.5};
  const MeasurementRound round = one_dim_round();
  const BatchSolveReport report = batch_solve(params, round);
  CHECK(report.converged);
  CHECK(report.minimizer(0) == doctest::Approx(0.9 / 1.1).epsilon(1e-9));
  CHECK(report.optimality_residual <= 1e-9);
  CHECK(report.final_step_norm <= 1e-10);

  // the batch minimizer is a fixed point of the step map
  const Vector again = ist_step(params, round, report.minimizer);
  CHECK((again - report.minimizer).norm() <= 1e-10);
}

TEST_CASE("batch solve returns zero when lambda dominates") {
  Rng rng(109);
  for (int trial = 0; trial < 20; ++trial) {
    auto [params, round] = random_instance(rng);
    params.lambda =
        (round.A.transpose() * round.y).cwiseAbs().maxCoeff() * 1.01 + 1e-9;
    const BatchSolveReport report = batch_solve(params, round);
    CHECK(report.converged);
    CHECK(report.minimizer.norm() == 0.0);
    CHECK(optimality_residual(params, round, report.minimizer) == 0.0);
  }
}

TEST_CASE("batch solve agrees with coordinate descent") {
  Rng rng(113);
  for (int trial = 0; trial < 25; ++trial) {
    auto [params, round] = random_instance(rng);
    const BatchSolveReport report = batch_solve(params, round, 1e-12, 400000);
    REQUIRE(report.converged);
    const Vector reference = test_support::coordinate_descent(
        round.A, round.y, params.lambda, params.mu);
    CHECK((report.minimizer - reference).lpNorm<Eigen::Infinity>() <= 1e-6);
  }
}

TEST_CASE("batch solve is start-independent and geometric") {
  Rng rng(127);
  for (int trial = 0; trial < 20; ++trial) {
    auto [params, round] = random_instance(rng);
    const long n = round.A.cols();
    Vector start(n);
    for (long i = 0; i < n; ++i) start(i) = rng.uniform(-3.0, 3.0);
    const double tol = 1e-11;
    const BatchSolveReport from_zero = batch_solve(params, round, tol, 400000);
    const BatchSolveReport from_start =
        batch_solve(params, round, start, tol, 400000);
    REQUIRE(from_zero.converged);
    REQUIRE(from_start.converged);
    CHECK((from_zero.minimizer - from_start.minimizer).lpNorm<Eigen::Infinity>() <=
          2 * 1e-8);

    // geometric convergence toward the minimizer
    const Vector& z = from_zero.minimizer;
    const double kappa = params.contraction_factor();
    Vector x = start;
    double previous = (x - z).norm();
    for (int k = 0; k < 25; ++k) {
      x = ist_step(params, round, x);
      const double current = (x - z).norm();
      CHECK(current <= kappa * previous + 1e-8);
      previous = current;
    }
  }
}

TEST_CASE("batch solve reports non-convergence without throwing") {
  ElasticNetParams params{1e-4, 1e-4, 0.1};
  MeasurementRound round;
  Rng rng(131);
  round.A = test_support::random_matrix(rng, 6, 12);
  round.A /= spectral_norm(round.A) * 1.1;
  round.y = round.A * test_support::random_sparse(rng, 12, 3);
  const BatchSolveReport report = batch_solve(params, round, 1e-14, 3);
  CHECK_FALSE(report.converged);
  CHECK(report.iterations == 3);
  CHECK(report.minimizer.size() == 12);
}

TEST_CASE("batch solve rejects a violated step-size condition") {
  ElasticNetParams params{0.1, 0.1, 2.0};
  const MeasurementRound round = one_dim_round();  // tau ||A||^2 = 2
  CHECK_THROWS_AS(batch_solve(params, round), AssumptionViolationError);
  const ElasticNetParams clamped = clamp_tau(params, round.A);
  CHECK(clamped.tau == doctest::Approx(0.99));
  CHECK(batch_solve(clamped, round).converged);
  // clamp is the identity when the condition already holds
  const ElasticNetParams fine{0.1, 0.1, 0.5};
  CHECK(clamp_tau(fine, round.A).tau == 0.5);
}

TEST_CASE("optimality residual") {
  ElasticNetParams params{0.1, 0.1, 0.5};
  const MeasurementRound round = one_dim_round();
  Vector zero = Vector::Zero(1);
  CHECK(optimality_residual(params, round, zero) == doctest::Approx(0.9));

  Vector minimizer(1);
  minimizer << 0.9 / 1.1;
  CHECK(optimality_residual(params, round, minimizer) <= 1e-9);
}

TEST_CASE("contraction toward the minimizer") {
  Rng rng(137);
  for (int trial = 0; trial < 50; ++trial) {
    auto [params, round] = random_instance(rng);
    const BatchSolveReport solved = batch_solve(params, round, 1e-10, 400000);
    REQUIRE(solved.converged);
    const long n = round.A.cols();
    Vector x(n);
    for (long i = 0; i < n; ++i) x(i) = rng.uniform(-3.0, 3.0);
    const double before = (x - solved.minimizer).norm();
    const double after = (ist_step(params, round, x) - solved.minimizer).norm();
    CHECK(after <= params.contraction_factor() * before + 1e-8);
  }
}
