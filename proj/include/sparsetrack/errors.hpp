#ifndef SPARSETRACK_ERRORS_HPP
#define SPARSETRACK_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sparsetrack {

// Dimension or length mismatch between operands.
class ShapeError : public std::invalid_argument {
 public:
  explicit ShapeError(const std::string& what) : std::invalid_argument(what) {}
};

class InvalidParameterError : public std::invalid_argument {
 public:
  explicit InvalidParameterError(const std::string& what)
      : std::invalid_argument(what) {}
};

// Iterative routine hit its cap; carries the best estimate it reached.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double best_estimate)
      : std::runtime_error(what), best_estimate_(best_estimate) {}
  double best_estimate() const { return best_estimate_; }

 private:
  double best_estimate_;
};

// Step-size condition tau * ||A||_2^2 <= 1 violated for a round.
class AssumptionViolationError : public std::runtime_error {
 public:
  AssumptionViolationError(const std::string& what, long round, double value)
      : std::runtime_error(what), round_(round), value_(value) {}
  long round() const { return round_; }
  double value() const { return value_; }

 private:
  long round_;
  double value_;
};

class SimulationDivergedError : public std::runtime_error {
 public:
  explicit SimulationDivergedError(const std::string& what)
      : std::runtime_error(what) {}
};

// Per-round minimizer could not be certified.
class OracleFailureError : public std::runtime_error {
 public:
  OracleFailureError(const std::string& what, long round)
      : std::runtime_error(what), round_(round) {}
  long round() const { return round_; }

 private:
  long round_;
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

class UnsupportedOperationError : public std::runtime_error {
 public:
  explicit UnsupportedOperationError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace sparsetrack

#endif  // SPARSETRACK_ERRORS_HPP
